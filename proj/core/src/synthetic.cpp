#include "sgfb/synthetic.hpp"

#include <cmath>
#include <string>

#include "sgfb/error.hpp"
#include "sgfb/filterbank.hpp"
#include "sgfb/rng.hpp"

namespace sgfb {

namespace {

constexpr double kNoiseRmsUv = 10.0;
constexpr std::uint64_t kPatternTag = 0xC0FFEEull << 32;

// Kellet's economy pink-noise filter over a white stream.
class PinkNoise {
public:
    double next(double white) {
        b_[0] = 0.99886 * b_[0] + white * 0.0555179;
        b_[1] = 0.99332 * b_[1] + white * 0.0750759;
        b_[2] = 0.96900 * b_[2] + white * 0.1538520;
        b_[3] = 0.86650 * b_[3] + white * 0.3104856;
        b_[4] = 0.55000 * b_[4] + white * 0.5329522;
        b_[5] = -0.7616 * b_[5] - white * 0.0168980;
        const double out = b_[0] + b_[1] + b_[2] + b_[3] + b_[4] + b_[5] + b_[6] + white * 0.5362;
        b_[6] = white * 0.115926;
        return out;
    }

private:
    double b_[7] = {};
};

Vector unit_vector(Rng& rng, std::size_t n) {
    Vector v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    const double s = norm2(v);
    for (double& x : v) {
        x /= s;
    }
    return v;
}

double sum_sq(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) {
        s += v * v;
    }
    return s;
}

}  // namespace

void validate(const SynthConfig& cfg) {
    if (cfg.channels < 2) {
        throw ParameterError("synth.channels must be at least 2");
    }
    if (cfg.trials_per_class < 2) {
        throw ParameterError("synth.trials_per_class must be at least 2");
    }
    if (!(cfg.fs_hz > 0.0) || !std::isfinite(cfg.fs_hz)) {
        throw ParameterError("synth.fs_hz must be positive");
    }
    if (!(cfg.duration_s > 0.0) || !std::isfinite(cfg.duration_s) || cfg.duration_s * cfg.fs_hz < 2.0) {
        throw ParameterError("synth.duration_s must cover at least two samples");
    }
    if (!(cfg.cue_offset_s >= 0.0) || !(cfg.cue_offset_s < cfg.duration_s)) {
        throw ParameterError("synth.cue_offset_s must lie inside the trial");
    }
    if (!(cfg.erd_low_hz > 0.0) || !(cfg.erd_high_hz > cfg.erd_low_hz) || !(cfg.erd_high_hz < 0.5 * cfg.fs_hz)) {
        throw ParameterError("synth.erd_band must satisfy 0 < low < high < fs/2");
    }
    if (!std::isfinite(cfg.snr_db)) {
        throw ParameterError("synth.snr_db must be finite");
    }
    if (!(cfg.amplitude_jitter >= 0.0) || !std::isfinite(cfg.amplitude_jitter)) {
        throw ParameterError("synth.amplitude_jitter must be non-negative");
    }
}

Dataset generate_synthetic(const SynthConfig& cfg) {
    validate(cfg);
    const std::size_t channels = cfg.channels;
    const auto samples = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs_hz));
    const auto burn_in = static_cast<std::size_t>(std::llround(2.0 * cfg.fs_hz));

    Rng pattern_rng(derive_seed(cfg.seed, kPatternTag));
    const Vector p1 = unit_vector(pattern_rng, channels);
    Vector p2 = unit_vector(pattern_rng, channels);
    while (std::abs(dot(p1, p2)) > 0.5) {
        p2 = unit_vector(pattern_rng, channels);
    }
    Matrix mixing = Matrix::identity(channels);
    for (std::size_t i = 0; i < channels; ++i) {
        for (std::size_t j = 0; j < channels; ++j) {
            mixing(i, j) += 0.5 * pattern_rng.normal() / std::sqrt(static_cast<double>(channels));
        }
    }
    const IirFilter rhythm = design_bandpass({cfg.erd_low_hz, cfg.erd_high_hz, 4}, cfg.fs_hz);
    const double power_ratio = std::pow(10.0, cfg.snr_db / 10.0);

    Dataset ds;
    ds.subject_id = "synthetic-" + std::to_string(cfg.seed);
    ds.fs_hz = static_cast<float>(cfg.fs_hz);
    ds.channels = channels;
    ds.class_names = {"pattern1", "pattern2"};
    ds.cue_offset_s = static_cast<float>(cfg.cue_offset_s);
    ds.trials.reserve(2 * cfg.trials_per_class);

    for (std::size_t t = 0; t < 2 * cfg.trials_per_class; ++t) {
        const int label = t % 2 == 0 ? 1 : 2;
        Rng rng(derive_seed(cfg.seed, t));

        Matrix sources(channels, samples);
        for (std::size_t c = 0; c < channels; ++c) {
            PinkNoise pink;
            for (std::size_t k = 0; k < burn_in; ++k) {
                pink.next(rng.normal());
            }
            for (std::size_t k = 0; k < samples; ++k) {
                sources(c, k) = pink.next(rng.normal());
            }
        }
        Matrix noise = mixing * sources;
        const double noise_scale = kNoiseRmsUv / std::sqrt(sum_sq(noise) / static_cast<double>(noise.data().size()));
        noise = noise_scale * noise;

        Vector drive(burn_in + samples);
        for (double& v : drive) {
            v = rng.normal();
        }
        const Vector osc = apply_causal(rhythm, drive);
        const Vector& pattern = label == 1 ? p1 : p2;
        Matrix signal(channels, samples);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t k = 0; k < samples; ++k) {
                signal(c, k) = pattern[c] * osc[burn_in + k];
            }
        }
        const double gain = std::sqrt(power_ratio * sum_sq(noise) / sum_sq(signal));
        const double amplitude = cfg.amplitude_jitter > 0.0 ? std::exp(cfg.amplitude_jitter * rng.normal()) : 1.0;

        EegEpoch e{Matrix(channels, samples), ds.fs_hz, label};
        for (std::size_t i = 0; i < e.data.data().size(); ++i) {
            const double v = amplitude * (noise.data()[i] + gain * signal.data()[i]);
            e.data.data()[i] = static_cast<float>(v);
        }
        ds.trials.push_back(std::move(e));
    }
    return ds;
}

}  // namespace sgfb
