#include "sgfb/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

namespace {

using Complex = std::complex<double>;

Complex bilinear(Complex s, double fs_hz) { return (2.0 * fs_hz + s) / (2.0 * fs_hz - s); }

Biquad section_from_conjugate_pair(Complex z) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    return q;
}

Biquad section_from_real_pair(double z1, double z2) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a1 = -(z1 + z2);
    q.a2 = z1 * z2;
    return q;
}

Complex section_response(const Biquad& q, Complex zinv) {
    const Complex num = q.b[0] + zinv * (q.b[1] + zinv * q.b[2]);
    const Complex den = 1.0 + zinv * (q.a1 + zinv * q.a2);
    return num / den;
}

// Transposed direct form II state for a unit step in steady state.
std::array<double, 2> step_state(const Biquad& q, double* dc_gain) {
    const double gain = (q.b[0] + q.b[1] + q.b[2]) / (1.0 + q.a1 + q.a2);
    const double z1 = q.b[2] - q.a2 * gain;
    const double z0 = q.b[1] - q.a1 * gain + z1;
    *dc_gain = gain;
    return {z0, z1};
}

void run_cascade(const IirFilter& filter, std::span<double> x, bool steady_start) {
    double amplitude = steady_start && !x.empty() ? x.front() : 0.0;
    for (const Biquad& q : filter.sections) {
        double z0 = 0.0;
        double z1 = 0.0;
        if (steady_start) {
            double dc = 0.0;
            const auto zi = step_state(q, &dc);
            z0 = zi[0] * amplitude;
            z1 = zi[1] * amplitude;
            amplitude *= dc;
        }
        for (double& v : x) {
            const double in = v;
            const double out = q.b[0] * in + z0;
            z0 = q.b[1] * in - q.a1 * out + z1;
            z1 = q.b[2] * in - q.a2 * out;
            v = out;
        }
    }
}

}  // namespace

std::vector<BandSpec> default_bands() {
    std::vector<BandSpec> bands;
    for (int low = 4; low < 40; low += 4) {
        bands.push_back({static_cast<double>(low), static_cast<double>(low + 4), 5});
    }
    return bands;
}

IirFilter design_bandpass(const BandSpec& spec, double fs_hz) {
    if (spec.order < 1) {
        throw ParameterError("band-pass order must be at least 1, got " + std::to_string(spec.order));
    }
    if (!(fs_hz > 0.0)) {
        throw ParameterError("sampling rate must be positive");
    }
    const double nyquist = 0.5 * fs_hz;
    if (!(spec.low_hz > 0.0) || !(spec.high_hz > spec.low_hz) || !(spec.high_hz < nyquist)) {
        throw FilterDesignError("band " + std::to_string(spec.low_hz) + "-" + std::to_string(spec.high_hz) +
                                " Hz must satisfy 0 < low < high < Nyquist (" + std::to_string(nyquist) +
                                " Hz)");
    }

    const double w_low = 2.0 * fs_hz * std::tan(std::numbers::pi * spec.low_hz / fs_hz);
    const double w_high = 2.0 * fs_hz * std::tan(std::numbers::pi * spec.high_hz / fs_hz);
    const double w0_sq = w_low * w_high;
    const double half_bw = 0.5 * (w_high - w_low);

    IirFilter filter;
    const int n = spec.order;
    for (int k = 0; k < n; ++k) {
        const double angle = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
        const Complex proto{std::cos(angle), std::sin(angle)};
        if (proto.imag() > 1e-9) {
            // Each upper-half prototype pole maps to two band-pass poles; their
            // conjugates come from the mirrored prototype pole.
            const Complex centre = proto * half_bw;
            const Complex root = std::sqrt(centre * centre - w0_sq);
            for (const Complex s : {centre + root, centre - root}) {
                const Complex z = bilinear(s.imag() >= 0.0 ? s : std::conj(s), fs_hz);
                filter.sections.push_back(section_from_conjugate_pair(z));
            }
        } else if (std::abs(proto.imag()) <= 1e-9) {
            const double disc = half_bw * half_bw - w0_sq;
            if (disc < 0.0) {
                const Complex s{-half_bw, std::sqrt(-disc)};
                filter.sections.push_back(section_from_conjugate_pair(bilinear(s, fs_hz)));
            } else {
                const double r = std::sqrt(disc);
                const double z1 = bilinear(Complex{-half_bw + r, 0.0}, fs_hz).real();
                const double z2 = bilinear(Complex{-half_bw - r, 0.0}, fs_hz).real();
                filter.sections.push_back(section_from_real_pair(z1, z2));
            }
        }
    }

    const double centre_hz = fs_hz / std::numbers::pi * std::atan(std::sqrt(w0_sq) / (2.0 * fs_hz));
    const double gain = std::abs(frequency_response(filter, centre_hz, fs_hz));
    if (!(gain > 0.0) || !std::isfinite(gain)) {
        throw FilterDesignError("degenerate band-pass gain at centre frequency");
    }
    const double per_section = std::pow(gain, -1.0 / static_cast<double>(filter.sections.size()));
    for (Biquad& q : filter.sections) {
        for (double& b : q.b) {
            b *= per_section;
        }
    }
    return filter;
}

FilterBank make_filter_bank(std::vector<BandSpec> bands, double fs_hz) {
    if (bands.empty()) {
        throw ParameterError("filter bank needs at least one band");
    }
    FilterBank bank;
    bank.fs_hz = fs_hz;
    bank.filters.reserve(bands.size());
    for (const BandSpec& band : bands) {
        bank.filters.push_back(design_bandpass(band, fs_hz));
    }
    bank.bands = std::move(bands);
    return bank;
}

std::complex<double> frequency_response(const IirFilter& filter, double freq_hz, double fs_hz) {
    const double omega = 2.0 * std::numbers::pi * freq_hz / fs_hz;
    const Complex zinv = std::polar(1.0, -omega);
    Complex h{1.0, 0.0};
    for (const Biquad& q : filter.sections) {
        h *= section_response(q, zinv);
    }
    return h;
}

double max_pole_radius(const IirFilter& filter) {
    double radius = 0.0;
    for (const Biquad& q : filter.sections) {
        const Complex disc = std::sqrt(Complex{q.a1 * q.a1 - 4.0 * q.a2, 0.0});
        radius = std::max({radius, std::abs(0.5 * (-q.a1 + disc)), std::abs(0.5 * (-q.a1 - disc))});
    }
    return radius;
}

Vector apply_causal(const IirFilter& filter, std::span<const double> signal) {
    Vector out(signal.begin(), signal.end());
    run_cascade(filter, out, false);
    return out;
}

std::size_t zero_phase_padding(const IirFilter& filter) {
    return 3 * static_cast<std::size_t>(filter.order());
}

Vector apply_zero_phase(const IirFilter& filter, std::span<const double> signal) {
    const std::size_t n = signal.size();
    const std::size_t pad = zero_phase_padding(filter);
    if (n <= pad) {
        throw LengthError("zero-phase filtering needs more than " + std::to_string(pad) + " samples, got " +
                          std::to_string(n));
    }

    Vector ext(n + 2 * pad);
    const double first = signal.front();
    const double last = signal.back();
    for (std::size_t i = 0; i < pad; ++i) {
        ext[i] = 2.0 * first - signal[pad - i];
        ext[pad + n + i] = 2.0 * last - signal[n - 2 - i];
    }
    std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

    run_cascade(filter, ext, true);
    std::reverse(ext.begin(), ext.end());
    run_cascade(filter, ext, true);
    std::reverse(ext.begin(), ext.end());

    return Vector(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                  ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

std::vector<EegEpoch> split_subbands(const EegEpoch& epoch, const FilterBank& bank) {
    if (epoch.fs_hz != bank.fs_hz) {
        throw ConfigError("epoch sampling rate " + std::to_string(epoch.fs_hz) +
                              " Hz differs from filter bank rate " + std::to_string(bank.fs_hz) + " Hz",
                          "fs_hz");
    }
    std::vector<EegEpoch> out;
    out.reserve(bank.band_count());
    for (const IirFilter& filter : bank.filters) {
        EegEpoch band{Matrix(epoch.channels(), epoch.samples()), epoch.fs_hz, epoch.label};
        for (std::size_t c = 0; c < epoch.channels(); ++c) {
            const Vector filtered = apply_zero_phase(filter, epoch.data.row(c));
            std::copy(filtered.begin(), filtered.end(), band.data.row(c).begin());
        }
        out.push_back(std::move(band));
    }
    return out;
}

}  // namespace sgfb
