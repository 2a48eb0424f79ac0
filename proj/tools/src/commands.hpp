#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"
#include "sgfb/report.hpp"

namespace sgfb::cli {

// Each command builds one report (or dataset) and returns it; main() owns the
// file writing and exit codes.
Report cmd_run(const RunConfig& rc);
Report cmd_gridsearch(const RunConfig& rc);
Report cmd_fractions(const RunConfig& rc);
Dataset cmd_gen(const RunConfig& rc);
Report cmd_inspect(const std::filesystem::path& dataset);

// Loads or generates the dataset and checks pipeline/eval settings against
// it before any computation. `inner` also requires inner-fold feasibility.
Dataset acquire_dataset(const RunConfig& rc);
void check_against_data(const RunConfig& rc, const Dataset& ds, bool inner);

// Exit status and one-line `sgfb: error kind=... key=... line=... message="..."`.
int report_error(std::ostream& err, const std::exception& e);

}  // namespace sgfb::cli
