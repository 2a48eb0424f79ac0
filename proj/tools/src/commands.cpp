#include "commands.hpp"

#include <algorithm>
#include <ostream>

#include "sgfb/dataset.hpp"
#include "sgfb/error.hpp"
#include "sgfb/eval.hpp"
#include "sgfb/synthetic.hpp"

namespace sgfb::cli {

namespace {

void describe_data(Report& r, const std::string& command, const RunConfig& rc, const Dataset& ds) {
    ReportSection& s = r.section("run");
    s.set("command", command);
    s.set("seed", std::to_string(rc.seed));
    ReportSection& d = r.section("data");
    d.set("source", rc.source == DataSource::file ? "file" : "synthetic");
    if (rc.source == DataSource::file) {
        d.set("path", rc.data_path.generic_string());
    }
    d.set("subject_id", ds.subject_id);
    d.set("channels", std::to_string(ds.channels));
    d.set("samples_per_trial", std::to_string(ds.samples_per_trial()));
    d.set("fs_hz", format_number(ds.fs_hz));
    d.set("cue_offset_s", format_number(ds.cue_offset_s));
    d.set("class1", ds.class_names[0] + " (" + std::to_string(ds.count(1)) + " trials)");
    d.set("class2", ds.class_names[1] + " (" + std::to_string(ds.count(2)) + " trials)");
    if (rc.source == DataSource::synthetic) {
        const SynthConfig& c = rc.synth;
        d.set("synth_erd_band_hz", format_number(c.erd_low_hz) + "," + format_number(c.erd_high_hz));
        d.set("synth_snr_db", format_number(c.snr_db));
        d.set("synth_amplitude_jitter", format_number(c.amplitude_jitter));
        d.set("synth_duration_s", format_number(c.duration_s));
    }
}

struct Prepared {
    Dataset ds;
    std::vector<PreparedTrial> trials;
};

Prepared prepare(const RunConfig& rc, bool inner) {
    Prepared p{acquire_dataset(rc), {}};
    check_against_data(rc, p.ds, inner);
    p.trials = prepare_trials(p.ds, rc.pipeline, rc.eval.threads);
    return p;
}

std::string kind_of(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const EvaluationError*>(&e)) return "evaluation";
    if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const NumericError*>(&e) ||
        dynamic_cast<const DegenerateSystemError*>(&e) || dynamic_cast<const RankDeficiencyError*>(&e) ||
        dynamic_cast<const AsymmetryError*>(&e)) {
        return "numeric";
    }
    if (dynamic_cast<const Error*>(&e)) return "runtime";
    return "internal";
}

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
        if (c == '"') c = '\'';
    }
    return s;
}

}  // namespace

Dataset acquire_dataset(const RunConfig& rc) {
    if (rc.source == DataSource::synthetic) {
        return generate_synthetic(rc.synth);
    }
    return load_dataset(rc.data_path);
}

void check_against_data(const RunConfig& rc, const Dataset& ds, bool inner) {
    validate(rc.pipeline, ds);
    for (int label : {1, 2}) {
        const auto n = static_cast<long long>(ds.count(label));
        if (n < rc.eval.folds) {
            throw ConfigError("class " + std::to_string(label) + " has " + std::to_string(n) + " trials, fewer than " +
                                  std::to_string(rc.eval.folds) + " folds",
                              "eval.folds");
        }
        // Smallest outer training share of this class.
        const long long train = n - (n + rc.eval.folds - 1) / rc.eval.folds;
        if (inner && train < rc.eval.inner_folds) {
            throw ConfigError("outer training folds keep " + std::to_string(train) + " trials of class " +
                                  std::to_string(label) + ", fewer than " + std::to_string(rc.eval.inner_folds) +
                                  " inner folds",
                              "eval.inner_folds");
        }
    }
}

Report cmd_run(const RunConfig& rc) {
    const Prepared p = prepare(rc, false);
    Report r;
    describe_data(r, "run", rc, p.ds);
    add_pipeline_section(r, rc.pipeline, rc.eval);
    add_cv_section(r, "cv", kfold_cv(p.trials, rc.pipeline, rc.eval), rc.eval);
    return r;
}

Report cmd_gridsearch(const RunConfig& rc) {
    const Prepared p = prepare(rc, true);
    Report r;
    describe_data(r, "gridsearch", rc, p.ds);
    add_pipeline_section(r, rc.pipeline, rc.eval);
    add_grid_section(r, grid_search(p.trials, rc.pipeline, rc.eval), rc.eval);
    return r;
}

Report cmd_fractions(const RunConfig& rc) {
    const Prepared p = prepare(rc, false);
    Report r;
    describe_data(r, "fractions", rc, p.ds);
    add_pipeline_section(r, rc.pipeline, rc.eval);
    add_fraction_section(r, fraction_experiment(p.trials, rc.pipeline, rc.eval), rc.eval);
    return r;
}

Dataset cmd_gen(const RunConfig& rc) {
    return generate_synthetic(rc.synth);
}

Report cmd_inspect(const std::filesystem::path& dataset) {
    const std::vector<std::uint8_t> bytes = read_file(dataset);
    const DatasetHeader h = decode_header(bytes);
    const Dataset ds = decode_dataset(bytes);
    Report r;
    ReportSection& s = r.section("dataset");
    s.set("format", "EEGB v" + std::to_string(h.version));
    s.set("bytes", std::to_string(bytes.size()));
    s.set("subject_id", ds.subject_id);
    s.set("channels", std::to_string(ds.channels));
    s.set("samples_per_trial", std::to_string(ds.samples_per_trial()));
    s.set("trials", std::to_string(ds.trials.size()));
    s.set("fs_hz", format_number(ds.fs_hz));
    s.set("cue_offset_s", format_number(ds.cue_offset_s));
    s.set("duration_s", format_number(static_cast<double>(ds.samples_per_trial()) / ds.fs_hz));
    ReportTable& t = s.add_table("classes", {"label", "name", "trials"});
    for (int label : {1, 2}) {
        t.rows.push_back({std::to_string(label), ds.class_names[static_cast<std::size_t>(label - 1)],
                          std::to_string(ds.count(label))});
    }
    return r;
}

int report_error(std::ostream& err, const std::exception& e) {
    const std::string kind = kind_of(e);
    err << "sgfb: error kind=" << kind;
    int code = 1;
    if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
        code = 2;
        err << " key=" << (c->key().empty() ? "-" : c->key()) << " line=" << c->line();
    }
    if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
        err << " offset=" << p->offset();
    }
    err << " message=\"" << one_line(e.what()) << "\"\n";
    return code;
}

}  // namespace sgfb::cli
