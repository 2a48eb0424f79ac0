#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "oracle/oracle.hpp"
#include "sgfb/error.hpp"
#include "sgfb/filterbank.hpp"

namespace sgfb {
namespace {

constexpr double kFs = 100.0;

// |H(e^jw)| from the raw polynomial coefficients, independent of the library.
double magnitude_db(const IirFilter& f, double freq_hz, double fs_hz) {
    const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / fs_hz);
    std::complex<double> h{1.0, 0.0};
    for (const Biquad& q : f.sections) {
        const auto num = q.b[0] * z * z + q.b[1] * z + q.b[2];
        const auto den = z * z + q.a1 * z + q.a2;
        h *= num / den;
    }
    return 20.0 * std::log10(std::abs(h));
}

// Direct form I difference equation, independent of the library's cascade.
Vector direct_form(const IirFilter& f, const Vector& x) {
    Vector y = x;
    for (const Biquad& q : f.sections) {
        Vector out(y.size(), 0.0);
        for (std::size_t n = 0; n < y.size(); ++n) {
            double v = q.b[0] * y[n];
            if (n >= 1) v += q.b[1] * y[n - 1] - q.a1 * out[n - 1];
            if (n >= 2) v += q.b[2] * y[n - 2] - q.a2 * out[n - 2];
            out[n] = v;
        }
        y = std::move(out);
    }
    return y;
}

Vector sine(double freq_hz, double fs_hz, std::size_t n, double phase = 0.0) {
    Vector x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / fs_hz + phase);
    }
    return x;
}

double rms(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

TEST(DesignBandpass, EdgesAreMinus3dB) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    EXPECT_EQ(f.sections.size(), 5u);
    EXPECT_NEAR(magnitude_db(f, 8.0, kFs), -3.0, 0.5);
    EXPECT_NEAR(magnitude_db(f, 12.0, kFs), -3.0, 0.5);
}

TEST(DesignBandpass, SimulatedInBandGainNearUnity) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    const double gain =
        oracle::simulated_gain([&](const Vector& x) { return direct_form(f, x); }, 10.0, kFs, 4000, 1000);
    EXPECT_NEAR(20.0 * std::log10(gain), 0.0, 1.0);
}

TEST(DesignBandpass, RejectsDc) {
    for (const BandSpec& band : default_bands()) {
        const IirFilter f = design_bandpass(band, kFs);
        const Vector y = apply_causal(f, Vector(4000, 1.0));
        EXPECT_LT(std::abs(y.back()), 1e-9) << band.low_hz;
        EXPECT_LT(magnitude_db(f, 1e-6, kFs), -100.0);
    }
}

TEST(DesignBandpass, SectionsAreStable) {
    for (double fs : {100.0, 250.0, 1000.0}) {
        for (const BandSpec& band : default_bands()) {
            EXPECT_LT(max_pole_radius(design_bandpass(band, fs)), 1.0 - 1e-6);
        }
    }
}

TEST(DesignBandpass, LibraryResponseMatchesPolynomialEvaluation) {
    const IirFilter f = design_bandpass({4.0, 8.0, 5}, kFs);
    for (double hz : {1.0, 4.0, 5.5, 8.0, 20.0, 49.0}) {
        EXPECT_NEAR(20.0 * std::log10(std::abs(frequency_response(f, hz, kFs))), magnitude_db(f, hz, kFs), 1e-9);
    }
}

TEST(DesignBandpass, WideBandWithRealPoles) {
    // Edge ratio above 3 + 2 sqrt(2) puts the odd prototype pole on two real band-pass poles.
    const IirFilter f = design_bandpass({1.0, 30.0, 3}, kFs);
    EXPECT_NEAR(magnitude_db(f, 1.0, kFs), -3.0, 0.5);
    EXPECT_NEAR(magnitude_db(f, 30.0, kFs), -3.0, 0.5);
    EXPECT_LT(max_pole_radius(f), 1.0);
}

TEST(DesignBandpass, Errors) {
    EXPECT_THROW(design_bandpass({8.0, 50.0, 5}, kFs), FilterDesignError);
    EXPECT_THROW(design_bandpass({12.0, 8.0, 5}, kFs), FilterDesignError);
    EXPECT_THROW(design_bandpass({0.0, 8.0, 5}, kFs), FilterDesignError);
    EXPECT_THROW(design_bandpass({8.0, 12.0, 0}, kFs), ParameterError);
}

TEST(ZeroPhase, ZeroInZeroOut) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    const Vector y = apply_zero_phase(f, Vector(100, 0.0));
    EXPECT_EQ(y, Vector(100, 0.0));
}

TEST(ZeroPhase, TimeReversalCommutes) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    Rng rng(4);
    const Vector x = oracle::random_vector(rng, 1000, 30.0);
    Vector xr(x.rbegin(), x.rend());
    const Vector y = apply_zero_phase(f, x);
    Vector yr = apply_zero_phase(f, xr);
    std::reverse(yr.begin(), yr.end());
    ASSERT_EQ(y.size(), x.size());
    // Forward-backward and backward-forward differ only by edge transients.
    double diff = 0.0;
    for (std::size_t i = 250; i < 750; ++i) {
        diff = std::max(diff, std::abs(y[i] - yr[i]));
    }
    EXPECT_LE(diff, 1e-3 * norm_inf(y));
}

TEST(ZeroPhase, NoLagForInBandSine) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    const Vector x = sine(10.0, kFs, 400);
    const Vector y = apply_zero_phase(f, x);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -5; lag <= 5; ++lag) {
        double s = 0.0;
        for (int t = 50; t < 350; ++t) {
            s += x[static_cast<std::size_t>(t)] * y[static_cast<std::size_t>(t + lag)];
        }
        if (s > best) {
            best = s;
            best_lag = lag;
        }
    }
    EXPECT_EQ(best_lag, 0);
}

TEST(ZeroPhase, LengthMustExceedPadding) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, kFs);
    EXPECT_EQ(zero_phase_padding(f), 30u);
    EXPECT_THROW(apply_zero_phase(f, Vector(30, 1.0)), LengthError);
    EXPECT_NO_THROW(apply_zero_phase(f, Vector(31, 1.0)));
}

EegEpoch two_channel_epoch(const Vector& a, const Vector& b) {
    EegEpoch e{Matrix(2, a.size()), kFs, 1};
    e.data.set_col(0, Vector{a[0], b[0]});
    for (std::size_t t = 0; t < a.size(); ++t) {
        e.data(0, t) = a[t];
        e.data(1, t) = b[t];
    }
    return e;
}

TEST(SplitSubbands, ShapeAndLabels) {
    const FilterBank bank = make_filter_bank(default_bands(), kFs);
    const EegEpoch e = two_channel_epoch(sine(10.0, kFs, 200), sine(22.0, kFs, 200));
    const auto parts = split_subbands(e, bank);
    ASSERT_EQ(parts.size(), 9u);
    for (const EegEpoch& p : parts) {
        EXPECT_EQ(p.channels(), 2u);
        EXPECT_EQ(p.samples(), 200u);
        EXPECT_EQ(p.label, 1);
    }
}

TEST(SplitSubbands, TenHertzLandsInAlphaBand) {
    const FilterBank bank = make_filter_bank(default_bands(), kFs);
    const EegEpoch e = two_channel_epoch(sine(10.0, kFs, 300), sine(10.0, kFs, 300, 1.0));
    const auto parts = split_subbands(e, bank);
    EXPECT_GT(rms(parts[1].data.row(0)), 10.0 * rms(parts[4].data.row(0)));
}

TEST(SplitSubbands, ZeroEpochGivesZeroBands) {
    const FilterBank bank = make_filter_bank(default_bands(), kFs);
    const EegEpoch e{Matrix(2, 100), kFs, 2};
    for (const EegEpoch& p : split_subbands(e, bank)) {
        EXPECT_EQ(p.data, e.data);
    }
}

TEST(SplitSubbands, RateMismatchIsConfigError) {
    const FilterBank bank = make_filter_bank(default_bands(), kFs);
    const EegEpoch e{Matrix(2, 200), 250.0, 1};
    EXPECT_THROW(split_subbands(e, bank), ConfigError);
}

TEST(SplitSubbands, BandOrderFollowsCentredSinusoids) {
    const FilterBank bank = make_filter_bank(default_bands(), kFs);
    for (std::size_t b = 0; b < bank.band_count(); ++b) {
        const double centre = 0.5 * (bank.bands[b].low_hz + bank.bands[b].high_hz);
        const EegEpoch e = two_channel_epoch(sine(centre, kFs, 1000), sine(centre, kFs, 1000, 0.3));
        const auto parts = split_subbands(e, bank);
        std::size_t arg = 0;
        Vector energy(parts.size());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const auto row = parts[k].data.row(0);
            energy[k] = std::pow(rms(row.subspan(100, 800)), 2);
            if (energy[k] > energy[arg]) arg = k;
        }
        EXPECT_EQ(arg, b);
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (k + 1 < b || k > b + 1) {
                EXPECT_GE(10.0 * std::log10(energy[b] / energy[k]), 20.0) << "band " << b << " vs " << k;
            }
        }
    }
}

}  // namespace
}  // namespace sgfb
