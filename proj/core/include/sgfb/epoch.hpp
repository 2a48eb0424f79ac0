#pragma once

#include <cstddef>

#include "sgfb/matrix.hpp"

namespace sgfb {

// One trial: channels x samples in microvolts, with its sampling rate and
// class label (1 or 2; 0 when unknown).
struct EegEpoch {
    Matrix data;
    double fs_hz = 0.0;
    int label = 0;

    std::size_t channels() const noexcept { return data.rows(); }
    std::size_t samples() const noexcept { return data.cols(); }

    bool operator==(const EegEpoch&) const = default;
};

// Throws when the epoch has fewer than 2 channels or samples, a non-positive
// rate, non-finite data, or a label outside {0, 1, 2}.
void validate_epoch(const EegEpoch& epoch);

// Samples [start_s, end_s) measured from the cue, which itself sits at
// cue_offset_s within the trial. Throws LengthError when the window falls
// outside the epoch.
EegEpoch crop_window(const EegEpoch& epoch, double cue_offset_s, double start_s, double end_s);

}  // namespace sgfb
