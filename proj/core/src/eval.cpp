#include "sgfb/eval.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "sgfb/error.hpp"
#include "sgfb/rng.hpp"

namespace sgfb {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;
constexpr double kTieTol = 1e-12;

class Fnv {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ = (h_ ^ b[i]) * kFnvPrime;
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            const auto byte = static_cast<unsigned char>(v >> (8 * i));
            bytes(&byte, 1);
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (double v : m.data()) {
            f64(v);
        }
    }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = kFnvOffset;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string join_numbers(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i > 0 ? "," : "") + format_number(values[i]);
    }
    return out;
}

SgfbHyperparams with_lambdas(SgfbHyperparams hp, double lambda, double lambda1) {
    hp.lambda = lambda;
    hp.lambda1 = lambda1;
    return hp;
}

// Feature vector seen by the solver: per band for sgfb, one block for src.
FeatureVector solver_features(FeatureVector f, const PipelineConfig& cfg) {
    if (cfg.method == Method::sgfb) {
        return f;
    }
    FeatureVector out;
    out.label = f.label;
    out.floored = f.floored;
    if (cfg.src_band < 0) {
        out.per_band = {f.flattened()};
    } else {
        out.per_band = {f.per_band[static_cast<std::size_t>(cfg.src_band)]};
    }
    return out;
}

struct SolvedTrial {
    Classification result;
    bool converged = true;
    int iterations = 0;
    int degenerate_steps = 0;
    double kkt = 0.0;
};

SolvedTrial solve_features(const FoldModel& model, const FeatureVector& f, const PipelineConfig& cfg,
                           SgfbHyperparams hp) {
    if (cfg.method == Method::src) {
        hp.lambda1 = 0.0;
    }
    const std::vector<Vector> y = normalize_sample(f.per_band);
    const SparseCode code = sgfb_solve(y, model.dict, model.grams, hp);
    SolvedTrial out;
    out.result = classify(y, model.dict, code);
    out.converged = code.converged;
    out.iterations = code.iterations;
    out.degenerate_steps = code.degenerate_steps;
    out.kkt = code.kkt_violation;
    return out;
}

std::vector<std::size_t> indices_where(std::span<const int> assignment, int fold, bool equal) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if ((assignment[i] == fold) == equal) {
            out.push_back(i);
        }
    }
    return out;
}

void finish(CvResult& cv) {
    std::vector<double> acc;
    std::vector<double> sen;
    std::vector<double> spe;
    cv.pooled = {};
    cv.diagnostics = {};
    for (const FoldResult& f : cv.folds) {
        acc.push_back(f.metrics.acc);
        if (f.metrics.sen) sen.push_back(*f.metrics.sen);
        if (f.metrics.spe) spe.push_back(*f.metrics.spe);
        cv.pooled += f.metrics.confusion;
        cv.diagnostics += f.diagnostics;
    }
    cv.acc = summarize(acc);
    cv.sen = sen.empty() ? std::nullopt : std::optional<Summary>(summarize(sen));
    cv.spe = spe.empty() ? std::nullopt : std::optional<Summary>(summarize(spe));
}

using Subsample = std::function<std::vector<std::size_t>(std::vector<std::size_t> train, int fold)>;

CvResult run_cv(std::span<const PreparedTrial> trials, std::span<const int> assignment, int k,
                const PipelineConfig& cfg, const EvalConfig& eval, const Subsample& subsample) {
    if (assignment.size() != trials.size()) {
        throw DimensionError("kfold_cv: one fold index per trial required");
    }
    CvResult cv;
    cv.folds.resize(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), eval.threads, [&](std::size_t fi) {
        const int fold = static_cast<int>(fi);
        std::vector<std::size_t> train = indices_where(assignment, fold, false);
        const std::vector<std::size_t> test = indices_where(assignment, fold, true);
        if (test.empty() || train.empty()) {
            throw EvaluationError("fold " + std::to_string(fold + 1) + " has no training or no test trials");
        }
        if (subsample) {
            train = subsample(std::move(train), fold);
        }
        FoldResult r;
        r.fold = fold + 1;
        r.train_trials = train.size();
        r.test_trials = test.size();
        r.lambda = cfg.solver.lambda;
        r.lambda1 = cfg.method == Method::src ? 0.0 : cfg.solver.lambda1;

        auto t0 = std::chrono::steady_clock::now();
        const FoldModel model = train_fold(trials, train, cfg);
        r.train_seconds = seconds_since(t0);
        r.csp_hash = hash_csp(model.csp);
        r.dict_hash = hash_dictionary(model.dict);
        r.diagnostics.zero_columns = static_cast<int>(model.dict.zero_columns.size());

        t0 = std::chrono::steady_clock::now();
        Confusion conf;
        for (std::size_t i : test) {
            const Prediction p = predict(model, trials[i], cfg, cfg.solver);
            conf.add(trials[i].label, p.result.label);
            r.diagnostics.unconverged += p.converged ? 0 : 1;
            r.diagnostics.ties += p.result.tie ? 1 : 0;
            r.diagnostics.floored += p.floored;
            r.diagnostics.degenerate_steps += p.degenerate_steps;
            r.diagnostics.max_kkt = std::max(r.diagnostics.max_kkt, p.kkt_violation);
        }
        r.test_seconds = seconds_since(t0);
        r.metrics = compute_metrics(conf);
        cv.folds[fi] = std::move(r);
    });
    finish(cv);
    return cv;
}

// True when (a, a1) should replace the current best (b, b1) at accuracy acc vs best.
bool better_point(double acc, double lambda, double lambda1, double best_acc, double best_lambda,
                  double best_lambda1) {
    if (acc > best_acc + kTieTol) return true;
    if (acc < best_acc - kTieTol) return false;
    if (lambda != best_lambda) return lambda > best_lambda;
    return lambda1 > best_lambda1;
}

std::pair<std::size_t, std::size_t> argmax_surface(const std::vector<std::vector<double>>& surface,
                                                   std::span<const double> lg, std::span<const double> l1g) {
    std::pair<std::size_t, std::size_t> best{0, 0};
    for (std::size_t i = 0; i < lg.size(); ++i) {
        for (std::size_t j = 0; j < l1g.size(); ++j) {
            if ((i | j) == 0) continue;
            if (better_point(surface[i][j], lg[i], l1g[j], surface[best.first][best.second], lg[best.first],
                             l1g[best.second])) {
                best = {i, j};
            }
        }
    }
    return best;
}

// Accuracy of every grid point on trials[test] under a model trained on trials[train].
std::vector<std::vector<double>> grid_accuracy(std::span<const PreparedTrial> trials,
                                               std::span<const std::size_t> train,
                                               std::span<const std::size_t> test, const PipelineConfig& cfg,
                                               const EvalConfig& eval, FoldModel* keep_model = nullptr,
                                               std::vector<std::vector<std::vector<SolvedTrial>>>* keep = nullptr) {
    FoldModel model = train_fold(trials, train, cfg);
    std::vector<FeatureVector> features;
    features.reserve(test.size());
    for (std::size_t i : test) {
        features.push_back(solver_features(extract_features(model.csp, trials[i].bands), cfg));
    }
    std::vector<std::vector<double>> acc(eval.lambda_grid.size(), std::vector<double>(eval.lambda1_grid.size()));
    if (keep != nullptr) {
        keep->assign(eval.lambda_grid.size(), std::vector<std::vector<SolvedTrial>>(eval.lambda1_grid.size()));
    }
    for (std::size_t a = 0; a < eval.lambda_grid.size(); ++a) {
        for (std::size_t b = 0; b < eval.lambda1_grid.size(); ++b) {
            const SgfbHyperparams hp = with_lambdas(cfg.solver, eval.lambda_grid[a], eval.lambda1_grid[b]);
            int correct = 0;
            for (std::size_t t = 0; t < test.size(); ++t) {
                SolvedTrial s = solve_features(model, features[t], cfg, hp);
                correct += s.result.label == trials[test[t]].label ? 1 : 0;
                if (keep != nullptr) {
                    (*keep)[a][b].push_back(s);
                }
            }
            acc[a][b] = static_cast<double>(correct) / static_cast<double>(test.size());
        }
    }
    if (keep_model != nullptr) {
        *keep_model = std::move(model);
    }
    return acc;
}

}  // namespace

std::string to_string(Method m) {
    return m == Method::sgfb ? "sgfb" : "src";
}

Method parse_method(const std::string& name) {
    if (name == "sgfb") return Method::sgfb;
    if (name == "src") return Method::src;
    throw ConfigError("unknown method '" + name + "' (expected sgfb or src)", "pipeline.method");
}

void validate(const PipelineConfig& cfg, const Dataset& ds) {
    if (cfg.bands.empty()) {
        throw ConfigError("filter bank needs at least one band", "filterbank.bands");
    }
    std::size_t padding = 0;
    for (const BandSpec& band : cfg.bands) {
        try {
            padding = std::max(padding, zero_phase_padding(design_bandpass(band, ds.fs_hz)));
        } catch (const ParameterError& e) {
            throw ConfigError(e.what(), "filterbank.order");
        } catch (const FilterDesignError& e) {
            throw ConfigError(e.what(), "filterbank.bands");
        }
    }
    if (ds.samples_per_trial() <= padding) {
        throw ConfigError("trials of " + std::to_string(ds.samples_per_trial()) +
                              " samples are too short for zero-phase filtering (need more than " +
                              std::to_string(padding) + ")",
                          "filterbank.order");
    }
    const double first = (ds.cue_offset_s + cfg.window_start_s) * ds.fs_hz;
    const double last = (ds.cue_offset_s + cfg.window_end_s) * ds.fs_hz;
    if (!(cfg.window_end_s > cfg.window_start_s) || std::llround(first) < 0 ||
        std::llround(last) > static_cast<long long>(ds.samples_per_trial()) || std::llround(last) - std::llround(first) < 2) {
        throw ConfigError("window must lie inside the trial and span at least two samples", "pipeline.window");
    }
    if (cfg.csp.m_pairs < 1) {
        throw ConfigError("m_pairs must be at least 1", "pipeline.m_pairs");
    }
    if (!(cfg.csp.shrinkage >= 0.0) || !(cfg.csp.shrinkage < 1.0)) {
        throw ConfigError("shrinkage must lie in [0, 1)", "pipeline.shrinkage");
    }
    if (!(cfg.solver.lambda >= 0.0) || !std::isfinite(cfg.solver.lambda)) {
        throw ConfigError("lambda must be finite and non-negative", "pipeline.lambda");
    }
    if (!(cfg.solver.lambda1 >= 0.0) || !std::isfinite(cfg.solver.lambda1)) {
        throw ConfigError("lambda1 must be finite and non-negative", "pipeline.lambda1");
    }
    if (cfg.solver.max_outer_iters < 1) {
        throw ConfigError("max_outer_iters must be at least 1", "pipeline.max_outer_iters");
    }
    if (!(cfg.solver.tol >= 0.0) || !(cfg.solver.tol_kkt > 0.0)) {
        throw ConfigError("solver tolerances must be positive", "pipeline.tol");
    }
    if (cfg.src_band < -1 || cfg.src_band >= static_cast<int>(cfg.bands.size())) {
        throw ConfigError("src_band must be -1 or a band index", "pipeline.src_band");
    }
}

void validate(const EvalConfig& cfg) {
    if (cfg.folds < 2) throw ConfigError("folds must be at least 2", "eval.folds");
    if (cfg.inner_folds < 2) throw ConfigError("inner_folds must be at least 2", "eval.inner_folds");
    auto check_grid = [](const std::vector<double>& g, const char* key) {
        if (g.empty()) throw ConfigError(std::string(key) + " must not be empty", key);
        for (double v : g) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError(std::string(key) + " values must be finite and non-negative", key);
            }
        }
    };
    check_grid(cfg.lambda_grid, "eval.lambda_grid");
    check_grid(cfg.lambda1_grid, "eval.lambda1_grid");
    if (cfg.fractions.empty()) throw ConfigError("fractions must not be empty", "eval.fractions");
    for (double f : cfg.fractions) {
        if (!(f > 0.0) || !(f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]", "eval.fractions");
    }
    if (cfg.repeats < 1) throw ConfigError("repeats must be at least 1", "eval.repeats");
    if (cfg.threads < 0) throw ConfigError("threads must be non-negative", "threads");
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(resolve_threads(threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    for (std::thread& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::vector<PreparedTrial> prepare_trials(const Dataset& ds, const PipelineConfig& cfg, int threads) {
    const FilterBank bank = make_filter_bank(cfg.bands, ds.fs_hz);
    std::vector<PreparedTrial> out(ds.trials.size());
    parallel_for(ds.trials.size(), threads, [&](std::size_t i) {
        const EegEpoch& trial = ds.trials[i];
        PreparedTrial p;
        p.label = trial.label;
        p.id = static_cast<int>(i);
        for (const EegEpoch& band : split_subbands(trial, bank)) {
            p.bands.push_back(crop_window(band, ds.cue_offset_s, cfg.window_start_s, cfg.window_end_s));
        }
        out[i] = std::move(p);
    });
    return out;
}

FoldModel train_fold(std::span<const PreparedTrial> trials, std::span<const std::size_t> train,
                     const PipelineConfig& cfg) {
    if (train.empty()) {
        throw EvaluationError("train_fold: no training trials");
    }
    const std::size_t bands = trials[train.front()].bands.size();
    std::vector<std::vector<EegEpoch>> band_trials(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        band_trials[b].reserve(train.size());
        for (std::size_t i : train) {
            band_trials[b].push_back(trials[i].bands[b]);
        }
    }
    FoldModel model;
    model.csp = train_csp(band_trials, cfg.csp);
    std::vector<FeatureVector> features;
    std::vector<int> ids;
    features.reserve(train.size());
    for (std::size_t i : train) {
        features.push_back(solver_features(extract_features(model.csp, trials[i].bands), cfg));
        ids.push_back(trials[i].id);
    }
    model.dict = normalize_columns(build_dictionary(features, ids));
    model.grams = dictionary_grams(model.dict);
    return model;
}

Prediction predict(const FoldModel& model, const PreparedTrial& trial, const PipelineConfig& cfg,
                   const SgfbHyperparams& hp) {
    const FeatureVector f = solver_features(extract_features(model.csp, trial.bands), cfg);
    const SolvedTrial s = solve_features(model, f, cfg, hp);
    Prediction p;
    p.result = s.result;
    p.converged = s.converged;
    p.iterations = s.iterations;
    p.degenerate_steps = s.degenerate_steps;
    p.floored = f.floored;
    p.kkt_violation = s.kkt;
    return p;
}

std::uint64_t hash_csp(const CspModel& model) {
    Fnv h;
    h.u64(static_cast<std::uint64_t>(model.m_pairs));
    h.u64(model.per_band.size());
    for (const Matrix& w : model.per_band) {
        h.matrix(w);
    }
    return h.value();
}

std::uint64_t hash_dictionary(const BandDictionary& dict) {
    Fnv h;
    h.u64(dict.blocks.size());
    for (const Matrix& block : dict.blocks) {
        h.matrix(block);
    }
    for (int c : dict.column_class) h.u64(static_cast<std::uint64_t>(c));
    for (int t : dict.column_trial) h.u64(static_cast<std::uint64_t>(t));
    for (const Vector& s : dict.column_scale) {
        for (double v : s) h.f64(v);
    }
    return h.value();
}

void Confusion::add(int truth, int predicted) {
    if (truth == 1) {
        (predicted == 1 ? tp : fn) += 1;
    } else {
        (predicted == 2 ? tn : fp) += 1;
    }
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

Metrics compute_metrics(const Confusion& c) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) {
        throw ParameterError("confusion counts must be non-negative");
    }
    if (c.total() == 0) {
        throw EvaluationError("empty evaluation: no predictions to score");
    }
    Metrics m;
    m.confusion = c;
    m.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fn > 0) m.sen = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) m.spe = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return m;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

FoldDiagnostics& FoldDiagnostics::operator+=(const FoldDiagnostics& o) {
    unconverged += o.unconverged;
    ties += o.ties;
    floored += o.floored;
    degenerate_steps += o.degenerate_steps;
    zero_columns += o.zero_columns;
    max_kkt = std::max(max_kkt, o.max_kkt);
    return *this;
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) {
        throw EvaluationError("need at least 2 folds");
    }
    std::vector<int> assignment(labels.size(), -1);
    std::size_t dealt = 0;
    for (int label : {1, 2}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) idx.push_back(i);
        }
        if (idx.size() < static_cast<std::size_t>(k)) {
            throw EvaluationError("class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                                  " trials, fewer than " + std::to_string(k) + " folds");
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t i : idx) {
            assignment[i] = static_cast<int>(dealt % static_cast<std::size_t>(k));
            ++dealt;
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (assignment[i] < 0) {
            throw EvaluationError("trial " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                                  ", expected 1 or 2");
        }
    }
    return assignment;
}

namespace {

std::vector<int> labels_of(std::span<const PreparedTrial> trials) {
    std::vector<int> labels;
    labels.reserve(trials.size());
    for (const PreparedTrial& t : trials) labels.push_back(t.label);
    return labels;
}

}  // namespace

CvResult kfold_cv(std::span<const PreparedTrial> trials, const PipelineConfig& cfg, const EvalConfig& eval) {
    const std::vector<int> labels = labels_of(trials);
    const std::vector<int> assignment = stratified_folds(labels, eval.folds, eval.seed);
    return run_cv(trials, assignment, eval.folds, cfg, eval, {});
}

CvResult kfold_cv(std::span<const PreparedTrial> trials, std::span<const int> assignment, int k,
                  const PipelineConfig& cfg, const EvalConfig& eval) {
    return run_cv(trials, assignment, k, cfg, eval, {});
}

GridResult grid_search(std::span<const PreparedTrial> trials, const PipelineConfig& cfg, const EvalConfig& eval) {
    const std::vector<int> labels = labels_of(trials);
    const std::vector<int> outer = stratified_folds(labels, eval.folds, eval.seed);
    const std::size_t nl = eval.lambda_grid.size();
    const std::size_t nl1 = eval.lambda1_grid.size();
    using Surface = std::vector<std::vector<double>>;

    struct OuterFold {
        Surface inner;
        Surface outer;
        FoldResult result;
    };
    std::vector<OuterFold> folds(static_cast<std::size_t>(eval.folds));

    parallel_for(folds.size(), eval.threads, [&](std::size_t fi) {
        const int fold = static_cast<int>(fi);
        const std::vector<std::size_t> train = indices_where(outer, fold, false);
        const std::vector<std::size_t> test = indices_where(outer, fold, true);

        std::vector<int> train_labels;
        for (std::size_t i : train) train_labels.push_back(trials[i].label);
        const std::vector<int> inner = stratified_folds(
            train_labels, eval.inner_folds, derive_seed(eval.seed, 0x1000 + static_cast<std::uint64_t>(fold)));

        Surface inner_mean(nl, std::vector<double>(nl1, 0.0));
        for (int f = 0; f < eval.inner_folds; ++f) {
            std::vector<std::size_t> itrain;
            std::vector<std::size_t> itest;
            for (std::size_t p = 0; p < train.size(); ++p) {
                (inner[p] == f ? itest : itrain).push_back(train[p]);
            }
            const Surface acc = grid_accuracy(trials, itrain, itest, cfg, eval);
            for (std::size_t a = 0; a < nl; ++a) {
                for (std::size_t b = 0; b < nl1; ++b) {
                    inner_mean[a][b] += acc[a][b] / static_cast<double>(eval.inner_folds);
                }
            }
        }
        const auto [sa, sb] = argmax_surface(inner_mean, eval.lambda_grid, eval.lambda1_grid);

        auto t0 = std::chrono::steady_clock::now();
        FoldModel model;
        std::vector<std::vector<std::vector<SolvedTrial>>> solved;
        OuterFold out;
        out.inner = inner_mean;
        out.outer = grid_accuracy(trials, train, test, cfg, eval, &model, &solved);

        FoldResult& r = out.result;
        r.fold = fold + 1;
        r.train_trials = train.size();
        r.test_trials = test.size();
        r.lambda = eval.lambda_grid[sa];
        r.lambda1 = cfg.method == Method::src ? 0.0 : eval.lambda1_grid[sb];
        r.csp_hash = hash_csp(model.csp);
        r.dict_hash = hash_dictionary(model.dict);
        r.diagnostics.zero_columns = static_cast<int>(model.dict.zero_columns.size());
        Confusion conf;
        for (std::size_t t = 0; t < test.size(); ++t) {
            const SolvedTrial& s = solved[sa][sb][t];
            conf.add(trials[test[t]].label, s.result.label);
            r.diagnostics.unconverged += s.converged ? 0 : 1;
            r.diagnostics.ties += s.result.tie ? 1 : 0;
            r.diagnostics.degenerate_steps += s.degenerate_steps;
            r.diagnostics.max_kkt = std::max(r.diagnostics.max_kkt, s.kkt);
        }
        r.metrics = compute_metrics(conf);
        r.test_seconds = seconds_since(t0);
        folds[fi] = std::move(out);
    });

    GridResult g;
    g.lambda_grid = eval.lambda_grid;
    g.lambda1_grid = eval.lambda1_grid;
    g.inner_surface.assign(nl, std::vector<double>(nl1, 0.0));
    g.outer_surface.assign(nl, std::vector<double>(nl1, 0.0));
    for (const OuterFold& f : folds) {
        for (std::size_t a = 0; a < nl; ++a) {
            for (std::size_t b = 0; b < nl1; ++b) {
                g.inner_surface[a][b] += f.inner[a][b] / static_cast<double>(folds.size());
                g.outer_surface[a][b] += f.outer[a][b] / static_cast<double>(folds.size());
            }
        }
        g.selected.folds.push_back(f.result);
    }
    const auto [ba, bb] = argmax_surface(g.inner_surface, g.lambda_grid, g.lambda1_grid);
    g.best_lambda = g.lambda_grid[ba];
    g.best_lambda1 = g.lambda1_grid[bb];
    finish(g.selected);
    return g;
}

std::vector<FractionRow> fraction_experiment(std::span<const PreparedTrial> trials, const PipelineConfig& cfg,
                                             const EvalConfig& eval) {
    const std::vector<int> labels = labels_of(trials);
    const std::vector<int> assignment = stratified_folds(labels, eval.folds, eval.seed);
    for (double fraction : eval.fractions) {
        for (int label : {1, 2}) {
            const auto n = static_cast<double>(std::count(labels.begin(), labels.end(), label));
            const auto kept = std::llround(fraction * n);
            if (kept < eval.folds) {
                throw EvaluationError("fraction " + format_number(fraction) + " keeps " + std::to_string(kept) +
                                      " trials of class " + std::to_string(label) + ", fewer than " +
                                      std::to_string(eval.folds) + " folds");
            }
        }
    }

    std::vector<FractionRow> rows;
    for (std::size_t fi = 0; fi < eval.fractions.size(); ++fi) {
        const double fraction = eval.fractions[fi];
        FractionRow row;
        row.fraction = fraction;
        row.repeats = eval.repeats;
        for (int rep = 0; rep < eval.repeats; ++rep) {
            const std::uint64_t stream = derive_seed(derive_seed(eval.seed, 0xF0000 + fi), static_cast<std::uint64_t>(rep));
            Subsample subsample;
            if (fraction < 1.0) {
                subsample = [&, stream, fraction](std::vector<std::size_t> train, int fold) {
                    Rng rng(derive_seed(stream, static_cast<std::uint64_t>(fold)));
                    std::vector<std::size_t> keep;
                    for (int label : {1, 2}) {
                        std::vector<std::size_t> idx;
                        for (std::size_t i : train) {
                            if (trials[i].label == label) idx.push_back(i);
                        }
                        const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
                        if (n == 0) {
                            throw EvaluationError("fraction " + format_number(fraction) + " leaves fold " +
                                                  std::to_string(fold + 1) + " without class " + std::to_string(label));
                        }
                        rng.shuffle(std::span<std::size_t>(idx));
                        keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
                    }
                    std::sort(keep.begin(), keep.end());
                    return keep;
                };
            }
            CvResult cv = run_cv(trials, assignment, eval.folds, cfg, eval, subsample);
            for (FoldResult& f : cv.folds) {
                row.pooled.folds.push_back(std::move(f));
            }
        }
        finish(row.pooled);
        rows.push_back(std::move(row));
    }
    return rows;
}

void add_pipeline_section(Report& report, const PipelineConfig& cfg, const EvalConfig& eval) {
    ReportSection& p = report.section("pipeline");
    std::string bands;
    for (std::size_t i = 0; i < cfg.bands.size(); ++i) {
        bands += (i > 0 ? "," : "") + format_number(cfg.bands[i].low_hz) + "-" + format_number(cfg.bands[i].high_hz);
    }
    p.set("method", to_string(cfg.method));
    p.set("bands", bands);
    p.set("order", std::to_string(cfg.bands.empty() ? 0 : cfg.bands.front().order));
    p.set("filtering", "zero-phase forward-backward, odd reflection padding");
    p.set("window", format_number(cfg.window_start_s) + "," + format_number(cfg.window_end_s));
    p.set("m_pairs", std::to_string(cfg.csp.m_pairs));
    p.set("shrinkage", format_number(cfg.csp.shrinkage));
    p.set("class_covariance", "mean of trace-normalised per-trial covariances after mean removal");
    p.set("lambda", format_number(cfg.solver.lambda));
    p.set("lambda1", format_number(cfg.solver.lambda1));
    p.set("max_outer_iters", std::to_string(cfg.solver.max_outer_iters));
    p.set("tol", format_number(cfg.solver.tol));
    p.set("tol_kkt", format_number(cfg.solver.tol_kkt));
    if (cfg.method == Method::src) {
        p.set("src_band", cfg.src_band < 0 ? std::string("stacked") : std::to_string(cfg.src_band));
    }
    ReportSection& e = report.section("eval");
    e.set("folds", std::to_string(eval.folds));
    e.set("inner_folds", std::to_string(eval.inner_folds));
    e.set("lambda_grid", join_numbers(eval.lambda_grid));
    e.set("lambda1_grid", join_numbers(eval.lambda1_grid));
    e.set("fractions", join_numbers(eval.fractions));
    e.set("repeats", std::to_string(eval.repeats));
    e.set("seed", std::to_string(eval.seed));
}

namespace {

std::string opt_ratio(const std::optional<double>& v) {
    return v ? format_ratio(*v) : std::string("undefined");
}

void put_summary(ReportSection& s, const std::string& prefix, const std::optional<Summary>& sum) {
    s.set(prefix + "_mean", sum ? format_ratio(sum->mean) : "undefined");
    s.set(prefix + "_std", sum ? format_ratio(sum->std) : "undefined");
}

void put_diagnostics(ReportSection& s, const FoldDiagnostics& d) {
    s.set("unconverged_solves", std::to_string(d.unconverged));
    s.set("tied_decisions", std::to_string(d.ties));
    s.set("floored_features", std::to_string(d.floored));
    s.set("degenerate_steps", std::to_string(d.degenerate_steps));
    s.set("zero_dictionary_columns", std::to_string(d.zero_columns));
    s.set("max_kkt_violation", sci(d.max_kkt));
}

}  // namespace

void add_cv_section(Report& report, const std::string& name, const CvResult& cv, const EvalConfig& eval) {
    ReportSection& s = report.section(name);
    put_summary(s, "acc", cv.acc);
    put_summary(s, "sen", cv.sen);
    put_summary(s, "spe", cv.spe);
    s.set("tp", std::to_string(cv.pooled.tp));
    s.set("tn", std::to_string(cv.pooled.tn));
    s.set("fp", std::to_string(cv.pooled.fp));
    s.set("fn", std::to_string(cv.pooled.fn));
    put_diagnostics(s, cv.diagnostics);
    std::vector<std::string> cols{"fold", "train", "test", "tp", "tn", "fp", "fn", "acc", "sen", "spe",
                                  "lambda", "lambda1", "csp_hash", "dict_hash", "unconverged", "ties",
                                  "floored", "zero_columns", "max_kkt"};
    if (eval.timings) {
        cols.push_back("train_s");
        cols.push_back("test_s");
    }
    ReportTable& t = s.add_table("folds", cols);
    for (const FoldResult& f : cv.folds) {
        const Confusion& c = f.metrics.confusion;
        std::vector<std::string> row{std::to_string(f.fold), std::to_string(f.train_trials),
                                     std::to_string(f.test_trials), std::to_string(c.tp), std::to_string(c.tn),
                                     std::to_string(c.fp), std::to_string(c.fn), format_ratio(f.metrics.acc),
                                     opt_ratio(f.metrics.sen), opt_ratio(f.metrics.spe), format_number(f.lambda),
                                     format_number(f.lambda1), hex64(f.csp_hash), hex64(f.dict_hash),
                                     std::to_string(f.diagnostics.unconverged), std::to_string(f.diagnostics.ties),
                                     std::to_string(f.diagnostics.floored),
                                     std::to_string(f.diagnostics.zero_columns), sci(f.diagnostics.max_kkt)};
        if (eval.timings) {
            row.push_back(format_ratio(f.train_seconds));
            row.push_back(format_ratio(f.test_seconds));
        }
        t.rows.push_back(std::move(row));
    }
}

void add_grid_section(Report& report, const GridResult& grid, const EvalConfig& eval) {
    ReportSection& s = report.section("grid");
    s.set("best_lambda", format_number(grid.best_lambda));
    s.set("best_lambda1", format_number(grid.best_lambda1));
    s.set("cells", std::to_string(grid.lambda_grid.size() * grid.lambda1_grid.size()));
    auto surface_table = [&](const std::string& name, const std::vector<std::vector<double>>& surface) {
        std::vector<std::string> cols{"lambda\\lambda1"};
        for (double l1 : grid.lambda1_grid) cols.push_back(format_number(l1));
        ReportTable& t = s.add_table(name, cols);
        for (std::size_t a = 0; a < grid.lambda_grid.size(); ++a) {
            std::vector<std::string> row{format_number(grid.lambda_grid[a])};
            for (double v : surface[a]) row.push_back(format_ratio(v));
            t.rows.push_back(std::move(row));
        }
    };
    surface_table("inner_surface", grid.inner_surface);
    surface_table("outer_surface", grid.outer_surface);
    add_cv_section(report, "grid.selected", grid.selected, eval);
}

void add_fraction_section(Report& report, std::span<const FractionRow> rows, const EvalConfig& eval) {
    ReportSection& s = report.section("fractions");
    s.set("repeats", std::to_string(eval.repeats));
    s.set("subsampling", "stratified, training folds only");
    ReportTable& t = s.add_table("table", {"fraction", "runs", "acc_mean", "acc_std", "sen_mean", "sen_std",
                                           "spe_mean", "spe_std", "unconverged", "ties", "max_kkt"});
    for (const FractionRow& r : rows) {
        const CvResult& cv = r.pooled;
        t.rows.push_back({format_number(r.fraction), std::to_string(cv.folds.size()), format_ratio(cv.acc.mean),
                          format_ratio(cv.acc.std), cv.sen ? format_ratio(cv.sen->mean) : "undefined",
                          cv.sen ? format_ratio(cv.sen->std) : "undefined",
                          cv.spe ? format_ratio(cv.spe->mean) : "undefined",
                          cv.spe ? format_ratio(cv.spe->std) : "undefined", std::to_string(cv.diagnostics.unconverged),
                          std::to_string(cv.diagnostics.ties), sci(cv.diagnostics.max_kkt)});
    }
}

}  // namespace sgfb
