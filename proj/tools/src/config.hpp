#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgfb/eval.hpp"
#include "sgfb/synthetic.hpp"

namespace sgfb::cli {

// Line-oriented `key = value` text with bracketed sections. Keys are
// addressed as "section.key"; keys before the first section have no prefix.
class ConfigFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static ConfigFile parse(std::string_view text);
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    int line_of(const std::string& key) const;

    // Typed getters mark the key as used; a malformed value raises
    // ConfigError naming the key and its line.
    std::optional<std::string> text(const std::string& key) const;
    std::optional<double> number(const std::string& key) const;
    std::optional<long long> integer(const std::string& key) const;
    std::optional<bool> boolean(const std::string& key) const;
    std::optional<std::vector<double>> numbers(const std::string& key) const;
    std::optional<std::vector<std::string>> list(const std::string& key) const;

    // Throws ConfigError for the first key (in file order) never read.
    void reject_unused() const;

private:
    const Entry* get(const std::string& key) const;

    std::map<std::string, Entry> entries_;
    mutable std::map<std::string, bool> used_;
};

enum class DataSource { file, synthetic };

struct RunConfig {
    DataSource source = DataSource::file;
    std::filesystem::path data_path;
    SynthConfig synth;
    PipelineConfig pipeline;
    EvalConfig eval;
    std::filesystem::path output;
    std::uint64_t seed = 7;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::filesystem::path> out;
};

// Reads every recognised key, applies overrides and checks the values that
// do not depend on the data. Without need_data a file source may omit its
// path. Throws ConfigError.
RunConfig build_run_config(const ConfigFile& file, const Overrides& overrides, bool need_data = true);

std::vector<BandSpec> parse_bands(const std::vector<std::string>& items, int order, const std::string& key, int line);

}  // namespace sgfb::cli
