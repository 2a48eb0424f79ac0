#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sgfb/epoch.hpp"

namespace sgfb {

struct Dataset {
    std::string subject_id;
    double fs_hz = 0.0;
    std::size_t channels = 0;
    std::array<std::string, 2> class_names{"class1", "class2"};
    std::vector<EegEpoch> trials;
    double cue_offset_s = 0.0;

    std::size_t samples_per_trial() const noexcept { return trials.empty() ? 0 : trials.front().samples(); }
    std::size_t count(int label) const noexcept;

    bool operator==(const Dataset&) const = default;
};

// Shared shape and rate, labels in {1, 2}, both classes present, finite data.
void validate_dataset(const Dataset& ds);

// EEGB v1, little-endian:
//   "EEGB" | u32 version | u32 channels | u32 samples | u32 trials |
//   f32 fs_hz | f32 cue_offset_s | u32 len + class name 1 | u32 len + class name 2 |
//   u32 len + subject id | per trial: u8 label, channels x samples f32 (channel-major)
inline constexpr std::uint32_t kEegbVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
// Throws ParseError with the byte offset of the first offending field.
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Header fields only; the payload size is still checked against the file.
struct DatasetHeader {
    std::uint32_t version = 0;
    std::size_t channels = 0;
    std::size_t samples = 0;
    std::size_t trials = 0;
    double fs_hz = 0.0;
    double cue_offset_s = 0.0;
    std::array<std::string, 2> class_names;
    std::string subject_id;
    std::size_t header_bytes = 0;
};
DatasetHeader decode_header(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sgfb
