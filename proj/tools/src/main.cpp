#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "sgfb/dataset.hpp"
#include "sgfb/error.hpp"

using namespace sgfb;
using namespace sgfb::cli;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string dataset;
};

RunConfig load_config(const Options& o, bool need_data) {
    Overrides ov;
    ov.seed = o.seed;
    ov.threads = o.threads;
    if (!o.out.empty()) ov.out = o.out;
    const ConfigFile file = o.config.empty() ? ConfigFile::parse("") : ConfigFile::load(o.config);
    if (o.config.empty() && need_data) {
        throw ConfigError("missing --config", "config");
    }
    return build_run_config(file, ov, need_data);
}

void require_output(const RunConfig& rc) {
    if (rc.output.empty()) {
        throw ConfigError("missing required key output.path (or --out)", "output.path");
    }
}

void emit(const Report& r, const std::filesystem::path& out) {
    if (out.empty()) {
        std::cout << format_report(r);
    } else {
        write_report(r, out);
    }
}

int dispatch(const std::string& command, const Options& o) {
    if (command == "inspect") {
        std::filesystem::path path = o.dataset;
        RunConfig rc;
        if (path.empty()) {
            rc = load_config(o, true);
            if (rc.source != DataSource::file) {
                throw ConfigError("inspect needs a dataset path or data.source = file", "data.path");
            }
            path = rc.data_path;
        } else if (!o.out.empty()) {
            rc.output = o.out;
        }
        emit(cmd_inspect(path), rc.output);
        return 0;
    }
    if (command == "gen") {
        const RunConfig rc = load_config(o, false);
        require_output(rc);
        const Dataset ds = cmd_gen(rc);
        save_dataset(ds, rc.output);
        std::cout << "wrote " << rc.output.generic_string() << ": " << ds.trials.size() << " trials, " << ds.channels
                  << " channels, " << ds.samples_per_trial() << " samples\n";
        return 0;
    }
    const RunConfig rc = load_config(o, true);
    require_output(rc);
    Report r;
    if (command == "run") {
        r = cmd_run(rc);
    } else if (command == "gridsearch") {
        r = cmd_gridsearch(rc);
    } else {
        r = cmd_fractions(rc);
    }
    write_report(r, rc.output);
    std::cout << "wrote " << rc.output.generic_string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse group filter bank classification of two-class motor-imagery EEG"};
    app.set_version_flag("--version", "sgfb 0.1.0");
    Options o;
    app.add_option("--config", o.config, "Config file (key = value, [sections])");
    app.add_option("--out", o.out, "Output path (overrides output.path)");
    app.add_option("--seed", o.seed, "Seed (overrides seed)");
    app.add_option("--threads", o.threads, "Worker threads, 0 = hardware concurrency")->check(CLI::NonNegativeNumber);
    app.require_subcommand(1, 1);

    app.add_subcommand("run", "Cross-validate the configured pipeline")->fallthrough();
    app.add_subcommand("gen", "Write a synthetic EEGB dataset")->fallthrough();
    auto* inspect = app.add_subcommand("inspect", "Summarise an EEGB dataset header")->fallthrough();
    inspect->add_option("dataset", o.dataset, "EEGB file (default: data.path of --config)");
    app.add_subcommand("gridsearch", "Nested CV over the lambda/lambda1 grid")->fallthrough();
    app.add_subcommand("fractions", "Accuracy versus training-set fraction")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "sgfb: error kind=usage key=- line=0 message=\"" << e.what() << "\"\n";
        return 2;
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), o);
    } catch (const std::exception& e) {
        return report_error(std::cerr, e);
    }
}
