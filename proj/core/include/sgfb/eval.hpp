#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgfb/classify.hpp"
#include "sgfb/csp.hpp"
#include "sgfb/dataset.hpp"
#include "sgfb/dictionary.hpp"
#include "sgfb/filterbank.hpp"
#include "sgfb/report.hpp"
#include "sgfb/solver.hpp"

namespace sgfb {

enum class Method {
    sgfb,  // multi-band coupled code
    src,   // single-task l1 code over one feature vector
};

std::string to_string(Method m);
// Throws ConfigError for unknown names.
Method parse_method(const std::string& name);

struct PipelineConfig {
    std::vector<BandSpec> bands = default_bands();
    double window_start_s = 1.0;  // relative to the cue
    double window_end_s = 2.0;
    CspOptions csp;
    SgfbHyperparams solver;
    Method method = Method::sgfb;
    // src only: -1 stacks all bands into one vector, otherwise that band alone.
    int src_band = -1;
};

// Checks the pipeline against the data it will run on. Throws ConfigError
// whose key names the offending setting.
void validate(const PipelineConfig& cfg, const Dataset& ds);

struct EvalConfig {
    int folds = 10;
    int inner_folds = 10;
    std::vector<double> lambda_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> lambda1_grid{0.1, 0.2, 0.3, 0.4};
    std::vector<double> fractions{0.3, 0.5, 0.7, 1.0};
    int repeats = 10;
    std::uint64_t seed = 7;
    int threads = 1;       // 0 selects the hardware concurrency
    bool timings = false;  // wall-clock entries make reports non-reproducible
};

void validate(const EvalConfig& cfg);

// Runs fn(0) ... fn(n - 1) on up to `threads` workers. Each index is handled
// exactly once; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);
int resolve_threads(int threads);

// A trial split into bands (zero-phase over the whole trial) and then cut
// to the analysis window.
struct PreparedTrial {
    std::vector<EegEpoch> bands;
    int label = 0;
    int id = 0;
};

std::vector<PreparedTrial> prepare_trials(const Dataset& ds, const PipelineConfig& cfg, int threads = 1);

struct FoldModel {
    CspModel csp;
    BandDictionary dict;  // normalised; one block per band, or one stacked block for src
    std::vector<Matrix> grams;
};

// Everything here is computed from trials[train] only.
FoldModel train_fold(std::span<const PreparedTrial> trials, std::span<const std::size_t> train,
                     const PipelineConfig& cfg);

struct Prediction {
    Classification result;
    bool converged = true;
    int iterations = 0;
    int degenerate_steps = 0;
    int floored = 0;
    double kkt_violation = 0.0;
};

Prediction predict(const FoldModel& model, const PreparedTrial& trial, const PipelineConfig& cfg,
                   const SgfbHyperparams& hp);

// FNV-1a over the exact bits of the model.
std::uint64_t hash_csp(const CspModel& model);
std::uint64_t hash_dictionary(const BandDictionary& dict);

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    // Class 1 is the positive class.
    void add(int truth, int predicted);
    std::int64_t total() const noexcept { return tp + tn + fp + fn; }
    Confusion& operator+=(const Confusion& o);
    bool operator==(const Confusion&) const = default;
};

struct Metrics {
    Confusion confusion;
    double acc = 0.0;
    std::optional<double> sen;  // undefined without positives
    std::optional<double> spe;  // undefined without negatives
};

// Throws EvaluationError when the confusion is empty, ParameterError on
// negative counts.
Metrics compute_metrics(const Confusion& c);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single value
    int count = 0;
};
Summary summarize(std::span<const double> values);

struct FoldDiagnostics {
    int unconverged = 0;
    int ties = 0;
    int floored = 0;
    int degenerate_steps = 0;
    int zero_columns = 0;
    double max_kkt = 0.0;

    FoldDiagnostics& operator+=(const FoldDiagnostics& o);
};

struct FoldResult {
    int fold = 0;
    std::size_t train_trials = 0;
    std::size_t test_trials = 0;
    Metrics metrics;
    std::uint64_t csp_hash = 0;
    std::uint64_t dict_hash = 0;
    FoldDiagnostics diagnostics;
    double lambda = 0.0;
    double lambda1 = 0.0;
    double train_seconds = 0.0;
    double test_seconds = 0.0;
};

struct CvResult {
    std::vector<FoldResult> folds;
    Summary acc;
    std::optional<Summary> sen;
    std::optional<Summary> spe;
    Confusion pooled;
    FoldDiagnostics diagnostics;
};

// Fold index per trial: each class is shuffled with a seed-derived stream
// and dealt round-robin, continuing from where the previous class stopped.
// Throws EvaluationError when a class has fewer than k trials.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

// Folds come from stratified_folds(labels, eval.folds, eval.seed).
CvResult kfold_cv(std::span<const PreparedTrial> trials, const PipelineConfig& cfg, const EvalConfig& eval);
// Same with an explicit fold index per trial (values 0 .. k-1).
CvResult kfold_cv(std::span<const PreparedTrial> trials, std::span<const int> assignment, int k,
                  const PipelineConfig& cfg, const EvalConfig& eval);

struct GridResult {
    std::vector<double> lambda_grid;
    std::vector<double> lambda1_grid;
    // [i][j] for lambda_grid[i], lambda1_grid[j]
    std::vector<std::vector<double>> inner_surface;  // mean inner-CV accuracy over outer folds
    std::vector<std::vector<double>> outer_surface;  // mean outer-test accuracy of every point
    double best_lambda = 0.0;   // argmax of inner_surface
    double best_lambda1 = 0.0;
    CvResult selected;          // outer folds evaluated at each fold's inner choice
};

// Nested CV: for every outer fold, inner stratified CV over the grid picks
// (lambda, lambda1) by mean accuracy; ties go to the larger lambda, then the
// larger lambda1.
GridResult grid_search(std::span<const PreparedTrial> trials, const PipelineConfig& cfg, const EvalConfig& eval);

struct FractionRow {
    double fraction = 1.0;
    int repeats = 0;
    CvResult pooled;  // every fold of every repeat
};

// For each fraction, `repeats` runs of kfold_cv whose training folds keep a
// stratified random subset of round(fraction * n) trials per class; test
// folds stay whole.
std::vector<FractionRow> fraction_experiment(std::span<const PreparedTrial> trials, const PipelineConfig& cfg,
                                             const EvalConfig& eval);

// Report sections.
void add_pipeline_section(Report& report, const PipelineConfig& cfg, const EvalConfig& eval);
void add_cv_section(Report& report, const std::string& name, const CvResult& cv, const EvalConfig& eval);
void add_grid_section(Report& report, const GridResult& grid, const EvalConfig& eval);
void add_fraction_section(Report& report, std::span<const FractionRow> rows, const EvalConfig& eval);

}  // namespace sgfb
