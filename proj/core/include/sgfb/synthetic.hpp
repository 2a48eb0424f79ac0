#pragma once

#include <cstddef>
#include <cstdint>

#include "sgfb/dataset.hpp"

namespace sgfb {

// Two-class motor-imagery stand-in. Every trial is spatially mixed 1/f
// background noise plus a band-limited oscillation in erd band projected
// through a class-specific spatial pattern.
struct SynthConfig {
    std::size_t channels = 8;
    std::size_t trials_per_class = 50;
    double fs_hz = 100.0;
    double duration_s = 3.5;
    double cue_offset_s = 0.0;
    double erd_low_hz = 8.0;
    double erd_high_hz = 13.0;
    double snr_db = 20.0;
    // Standard deviation of the per-trial log-amplitude factor (0 disables).
    double amplitude_jitter = 0.0;
    std::uint64_t seed = 7;
};

// Throws ParameterError naming the offending field.
void validate(const SynthConfig& cfg);

// Deterministic in cfg; samples are rounded to float precision so the
// dataset survives an EEGB round trip unchanged.
Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace sgfb
