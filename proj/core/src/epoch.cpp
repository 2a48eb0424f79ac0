#include "sgfb/epoch.hpp"

#include <cmath>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

void validate_epoch(const EegEpoch& epoch) {
    if (epoch.channels() < 2 || epoch.samples() < 2) {
        throw DimensionError("epoch must have at least 2 channels and 2 samples, got " +
                             std::to_string(epoch.channels()) + "x" + std::to_string(epoch.samples()));
    }
    if (!(epoch.fs_hz > 0.0) || !std::isfinite(epoch.fs_hz)) {
        throw ParameterError("epoch sampling rate must be positive");
    }
    if (epoch.label < 0 || epoch.label > 2) {
        throw ParameterError("epoch label " + std::to_string(epoch.label) + " outside {1, 2}");
    }
    require_finite(epoch.data.data(), "epoch data");
}

EegEpoch crop_window(const EegEpoch& epoch, double cue_offset_s, double start_s, double end_s) {
    if (!(end_s > start_s)) {
        throw ParameterError("window end must exceed window start");
    }
    const auto first = static_cast<long long>(std::llround((cue_offset_s + start_s) * epoch.fs_hz));
    const auto last = static_cast<long long>(std::llround((cue_offset_s + end_s) * epoch.fs_hz));
    if (first < 0 || last > static_cast<long long>(epoch.samples()) || last - first < 2) {
        throw LengthError("window [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                          ") s falls outside the " + std::to_string(epoch.samples()) + "-sample epoch");
    }
    const auto begin = static_cast<std::size_t>(first);
    const auto count = static_cast<std::size_t>(last - first);
    EegEpoch out{Matrix(epoch.channels(), count), epoch.fs_hz, epoch.label};
    for (std::size_t c = 0; c < epoch.channels(); ++c) {
        const auto src = epoch.data.row(c);
        auto dst = out.data.row(c);
        for (std::size_t t = 0; t < count; ++t) {
            dst[t] = src[begin + t];
        }
    }
    return out;
}

}  // namespace sgfb
