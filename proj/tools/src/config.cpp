#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "sgfb/dataset.hpp"
#include "sgfb/error.hpp"

namespace sgfb::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

bool valid_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<long long> to_integer(std::string_view s) {
    s = trim(s);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string> split_commas(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        out.emplace_back(trim(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, int line, const std::string& what) {
    throw ConfigError(key + ": " + what, key, line);
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
    ConfigFile cfg;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || !valid_name(trim(line.substr(1, line.size() - 2)))) {
                throw ConfigError("malformed section header '" + std::string(line) + "'", "", line_no);
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", "", line_no);
        }
        const std::string_view name = trim(line.substr(0, eq));
        if (!valid_name(name)) {
            throw ConfigError("invalid key name '" + std::string(name) + "'", "", line_no);
        }
        const std::string key = section.empty() ? std::string(name) : section + "." + std::string(name);
        if (cfg.entries_.count(key) != 0) {
            throw ConfigError("duplicate key " + key + " (first set on line " +
                                  std::to_string(cfg.entries_[key].line) + ")",
                              key, line_no);
        }
        cfg.entries_[key] = Entry{std::string(trim(line.substr(eq + 1))), line_no};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what(), "config");
    }
    return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

int ConfigFile::line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

const ConfigFile::Entry* ConfigFile::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_[key] = true;
    return &it->second;
}

std::optional<std::string> ConfigFile::text(const std::string& key) const {
    const Entry* e = get(key);
    if (e == nullptr) return std::nullopt;
    if (e->value.empty()) bad_value(key, e->line, "empty value");
    return e->value;
}

std::optional<double> ConfigFile::number(const std::string& key) const {
    const Entry* e = get(key);
    if (e == nullptr) return std::nullopt;
    const auto v = to_double(e->value);
    if (!v) bad_value(key, e->line, "expected a finite number, got '" + e->value + "'");
    return v;
}

std::optional<long long> ConfigFile::integer(const std::string& key) const {
    const Entry* e = get(key);
    if (e == nullptr) return std::nullopt;
    const auto v = to_integer(e->value);
    if (!v) bad_value(key, e->line, "expected an integer, got '" + e->value + "'");
    return v;
}

std::optional<bool> ConfigFile::boolean(const std::string& key) const {
    const Entry* e = get(key);
    if (e == nullptr) return std::nullopt;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    bad_value(key, e->line, "expected true or false, got '" + e->value + "'");
}

std::optional<std::vector<std::string>> ConfigFile::list(const std::string& key) const {
    const Entry* e = get(key);
    if (e == nullptr) return std::nullopt;
    std::vector<std::string> items = split_commas(e->value);
    for (const std::string& item : items) {
        if (item.empty()) bad_value(key, e->line, "empty list element");
    }
    return items;
}

std::optional<std::vector<double>> ConfigFile::numbers(const std::string& key) const {
    const auto items = list(key);
    if (!items) return std::nullopt;
    std::vector<double> out;
    for (const std::string& item : *items) {
        const auto v = to_double(item);
        if (!v) bad_value(key, line_of(key), "expected a number, got '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

void ConfigFile::reject_unused() const {
    const Entry* first = nullptr;
    std::string first_key;
    for (const auto& [key, entry] : entries_) {
        if (used_.count(key) == 0 && (first == nullptr || entry.line < first->line)) {
            first = &entry;
            first_key = key;
        }
    }
    if (first != nullptr) {
        throw ConfigError("unknown key " + first_key, first_key, first->line);
    }
}

std::vector<BandSpec> parse_bands(const std::vector<std::string>& items, int order, const std::string& key, int line) {
    std::vector<BandSpec> bands;
    for (const std::string& item : items) {
        const std::size_t dash = item.find('-', 1);
        const auto lo = dash == std::string::npos ? std::nullopt : to_double(std::string_view(item).substr(0, dash));
        const auto hi = dash == std::string::npos ? std::nullopt : to_double(std::string_view(item).substr(dash + 1));
        if (!lo || !hi) bad_value(key, line, "expected a band 'low-high', got '" + item + "'");
        bands.push_back(BandSpec{*lo, *hi, order});
    }
    return bands;
}

RunConfig build_run_config(const ConfigFile& f, const Overrides& ov, bool need_data) {
    RunConfig rc;
    auto int_in = [&](const std::string& key, long long lo, long long hi) -> std::optional<int> {
        const auto v = f.integer(key);
        if (v && (*v < lo || *v > hi)) {
            bad_value(key, f.line_of(key), "value " + std::to_string(*v) + " outside [" + std::to_string(lo) + ", " +
                                              std::to_string(hi) + "]");
        }
        return v ? std::optional<int>(static_cast<int>(*v)) : std::nullopt;
    };

    if (const auto seed = f.integer("seed")) {
        if (*seed < 0) bad_value("seed", f.line_of("seed"), "must be non-negative");
        rc.seed = static_cast<std::uint64_t>(*seed);
    }
    if (ov.seed) rc.seed = *ov.seed;
    if (const auto t = int_in("threads", 0, 1024)) rc.eval.threads = *t;
    if (ov.threads) {
        if (*ov.threads < 0) throw ConfigError("--threads must be non-negative", "threads");
        rc.eval.threads = *ov.threads;
    }

    const std::string source = f.text("data.source").value_or("file");
    if (source == "file") {
        rc.source = DataSource::file;
        const auto path = f.text("data.path");
        if (path) {
            rc.data_path = *path;
        } else if (need_data) {
            throw ConfigError("missing required key data.path", "data.path", f.line_of("data.source"));
        }
    } else if (source == "synthetic") {
        rc.source = DataSource::synthetic;
        if (f.has("data.path")) {
            bad_value("data.path", f.line_of("data.path"), "not used when data.source = synthetic");
        }
    } else {
        bad_value("data.source", f.line_of("data.source"), "expected file or synthetic, got '" + source + "'");
    }

    SynthConfig& s = rc.synth;
    if (const auto v = int_in("synth.channels", 2, 4096)) s.channels = static_cast<std::size_t>(*v);
    if (const auto v = int_in("synth.trials_per_class", 1, 100000)) s.trials_per_class = static_cast<std::size_t>(*v);
    if (const auto v = f.number("synth.fs_hz")) s.fs_hz = *v;
    if (const auto v = f.number("synth.duration_s")) s.duration_s = *v;
    if (const auto v = f.number("synth.cue_offset_s")) s.cue_offset_s = *v;
    if (const auto v = f.numbers("synth.erd_band_hz")) {
        if (v->size() != 2) bad_value("synth.erd_band_hz", f.line_of("synth.erd_band_hz"), "expected 'low, high'");
        s.erd_low_hz = (*v)[0];
        s.erd_high_hz = (*v)[1];
    }
    if (const auto v = f.number("synth.snr_db")) s.snr_db = *v;
    if (const auto v = f.number("synth.amplitude_jitter")) s.amplitude_jitter = *v;
    s.seed = rc.seed;
    if (rc.source == DataSource::synthetic || !need_data) {
        try {
            validate(s);
        } catch (const ParameterError& e) {
            throw ConfigError(e.what(), "synth");
        }
    }

    PipelineConfig& p = rc.pipeline;
    const int order = int_in("filterbank.order", 1, 12).value_or(p.bands.front().order);
    if (const auto items = f.list("filterbank.bands")) {
        p.bands = parse_bands(*items, order, "filterbank.bands", f.line_of("filterbank.bands"));
    } else {
        for (BandSpec& b : p.bands) b.order = order;
    }
    if (const auto m = f.text("pipeline.method")) {
        try {
            p.method = parse_method(*m);
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), "pipeline.method", f.line_of("pipeline.method"));
        }
    }
    if (const auto w = f.numbers("pipeline.window")) {
        if (w->size() != 2) bad_value("pipeline.window", f.line_of("pipeline.window"), "expected 'start, end'");
        p.window_start_s = (*w)[0];
        p.window_end_s = (*w)[1];
    }
    if (const auto v = int_in("pipeline.m_pairs", 1, 4096)) p.csp.m_pairs = *v;
    if (const auto v = f.number("pipeline.shrinkage")) p.csp.shrinkage = *v;
    if (const auto v = f.number("pipeline.lambda")) p.solver.lambda = *v;
    if (const auto v = f.number("pipeline.lambda1")) p.solver.lambda1 = *v;
    if (const auto v = int_in("pipeline.max_outer_iters", 1, 1000000)) p.solver.max_outer_iters = *v;
    if (const auto v = f.number("pipeline.tol")) p.solver.tol = *v;
    if (const auto v = f.number("pipeline.tol_kkt")) p.solver.tol_kkt = *v;
    if (const auto v = int_in("pipeline.src_band", -1, 1024)) p.src_band = *v;

    EvalConfig& e = rc.eval;
    if (const auto v = int_in("eval.folds", 2, 100000)) e.folds = *v;
    if (const auto v = int_in("eval.inner_folds", 2, 100000)) e.inner_folds = *v;
    if (const auto v = f.numbers("eval.lambda_grid")) e.lambda_grid = *v;
    if (const auto v = f.numbers("eval.lambda1_grid")) e.lambda1_grid = *v;
    if (const auto v = f.numbers("eval.fractions")) e.fractions = *v;
    if (const auto v = int_in("eval.repeats", 1, 100000)) e.repeats = *v;
    if (const auto v = f.boolean("eval.timings")) e.timings = *v;
    e.seed = rc.seed;
    try {
        validate(e);
    } catch (const ConfigError& err) {
        throw ConfigError(err.what(), err.key(), f.line_of(err.key()));
    }

    if (const auto out = f.text("output.path")) rc.output = *out;
    if (ov.out) rc.output = *ov.out;

    f.reject_unused();
    return rc;
}

}  // namespace sgfb::cli
