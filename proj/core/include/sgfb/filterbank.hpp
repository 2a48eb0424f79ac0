#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "sgfb/epoch.hpp"
#include "sgfb/matrix.hpp"

namespace sgfb {

struct BandSpec {
    double low_hz = 0.0;
    double high_hz = 0.0;
    int order = 5;

    bool operator==(const BandSpec&) const = default;
};

// Second-order section b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    std::array<double, 3> b{};
    double a1 = 0.0;
    double a2 = 0.0;
};

struct IirFilter {
    std::vector<Biquad> sections;

    // Total denominator order of the cascade.
    int order() const noexcept { return 2 * static_cast<int>(sections.size()); }
};

struct FilterBank {
    std::vector<BandSpec> bands;
    double fs_hz = 0.0;
    std::vector<IirFilter> filters;  // filters[b] realizes bands[b]

    std::size_t band_count() const noexcept { return bands.size(); }
};

// Nine contiguous 4 Hz bands from 4 to 40 Hz, order 5.
std::vector<BandSpec> default_bands();

// Butterworth band-pass of the given prototype order: analog low-pass
// prototype, low-pass to band-pass transform, bilinear transform with both
// edges pre-warped. The result has 2*order poles arranged as `order` biquads,
// each with zeros at z = 1 and z = -1, and unit gain at the geometric centre.
IirFilter design_bandpass(const BandSpec& spec, double fs_hz);

FilterBank make_filter_bank(std::vector<BandSpec> bands, double fs_hz);

// H(e^{j 2 pi f / fs}) evaluated from the section coefficients.
std::complex<double> frequency_response(const IirFilter& filter, double freq_hz, double fs_hz);

// Largest pole magnitude over all sections.
double max_pole_radius(const IirFilter& filter);

// Single forward pass from rest.
Vector apply_causal(const IirFilter& filter, std::span<const double> signal);

// Reflection padding length used by apply_zero_phase: 3 * filter order.
std::size_t zero_phase_padding(const IirFilter& filter);

// Forward-backward filtering with odd reflective padding and steady-state
// initial conditions. Output has the input's length and zero phase. Throws
// LengthError unless the signal is longer than zero_phase_padding().
Vector apply_zero_phase(const IirFilter& filter, std::span<const double> signal);

// One epoch per band, in bank order, each channel filtered independently.
std::vector<EegEpoch> split_subbands(const EegEpoch& epoch, const FilterBank& bank);

}  // namespace sgfb
