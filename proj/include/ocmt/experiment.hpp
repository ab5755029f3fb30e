#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <ocmt/dgp.hpp>
#include <ocmt/evaluation.hpp>
#include <ocmt/postselect.hpp>

namespace ocmt {

/// Stream tags for derive_seed.
inline constexpr std::uint64_t kCalibrationStream = 0xCA11B;
inline constexpr std::uint64_t kReplicationStream = 0x5EED;
inline constexpr std::uint64_t kCrossValidationStream = 0xC5;

/// One column of a results table: a selector, how its forecast coefficients
/// are obtained, the weighting protocol and the lambda grid.
struct MethodCell
{
    std::string method;
    SelectorTag tag = SelectorTag::kOcmt;
    Estimator estimator = Estimator::kLeastSquares;
    Protocol protocol = Protocol::kNoWeighting;
    WeightLabel weights = WeightLabel::kNone;

    std::string label() const
    {
        return method + "/" + to_string(protocol) + "/" + to_string(weights);
    }
};

/// Method names: ocmt, oracle, lasso, alasso, boosting (native
/// coefficients) and lasso-ls, alasso-ls, boosting-ls (post-selection LS).
inline MethodCell parse_method(const std::string& name)
{
    MethodCell c;
    c.method = name;
    if (name == "ocmt") {
        c.tag = SelectorTag::kOcmt;
    } else if (name == "oracle") {
        c.tag = SelectorTag::kOracle;
    } else if (name == "lasso" || name == "lasso-ls") {
        c.tag = SelectorTag::kLasso;
    } else if (name == "alasso" || name == "alasso-ls") {
        c.tag = SelectorTag::kAdaptiveLasso;
    } else if (name == "boosting" || name == "boosting-ls") {
        c.tag = SelectorTag::kBoosting;
    } else {
        throw DomainError("unknown method '" + name + "'");
    }
    const bool ls = name.size() > 3 && name.compare(name.size() - 3, 3, "-ls") == 0;
    const bool penalized = c.tag == SelectorTag::kLasso || c.tag == SelectorTag::kAdaptiveLasso ||
                           c.tag == SelectorTag::kBoosting;
    c.estimator = penalized && !ls ? Estimator::kNative : Estimator::kLeastSquares;
    return c;
}

/**
 * Cells for every method: the unweighted run, plus for each weight label the
 * "estimation weighted" and "selection and estimation weighted" protocols.
 * Native estimators skip the former (selection and estimation cannot use
 * different samples).
 */
inline std::vector<MethodCell> make_cells(const std::vector<std::string>& methods,
                                          const std::vector<WeightLabel>& weights)
{
    std::vector<MethodCell> cells;
    for (const auto& m : methods) {
        MethodCell base = parse_method(m);
        cells.push_back(base);
        for (WeightLabel w : weights) {
            if (w == WeightLabel::kNone) continue;
            if (w == WeightLabel::kCustom) throw DomainError("make_cells: custom grids are not table cells");
            if (base.estimator == Estimator::kLeastSquares) {
                MethodCell c = base;
                c.protocol = Protocol::kSelectUnweightedEstimateWeighted;
                c.weights = w;
                cells.push_back(c);
            }
            MethodCell c = base;
            c.protocol = Protocol::kSelectAndEstimateWeighted;
            c.weights = w;
            cells.push_back(c);
        }
    }
    return cells;
}

struct SelectorSettings
{
    OcmtConfig ocmt;
    LassoConfig lasso;
    BoostConfig boost;
};

/// Scores of one cell in one replication.
struct ReplicationScore
{
    Index replication = 0;
    std::size_t cell = 0;
    bool ok = false;
    double khat = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double forecast = 0.0;
    double realized = 0.0;
    double squared_error = 0.0;
    std::string error;
};

struct CellSummary
{
    MethodCell cell;
    double khat = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double msfe = 0.0;
    Index successes = 0;
    Index failures = 0;
};

struct ExperimentSummary
{
    DgpConfig config;
    TauCalibration calibration;
    std::vector<CellSummary> cells;
    /// Replication-major: records[r * cells.size() + c].
    std::vector<ReplicationScore> records;
    Index replications = 0;
    Index failures = 0;
};

/// Worker count: OCMT_THREADS if set, else `requested`, else hardware.
inline unsigned resolve_threads(unsigned requested = 0)
{
    if (const char* env = std::getenv("OCMT_THREADS"); env != nullptr && *env != '\0') {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Replication r's stream seed; depends only on (master, r).
inline std::uint64_t replication_seed(std::uint64_t master, Index r)
{
    return derive_seed(master, kReplicationStream, static_cast<std::uint64_t>(r));
}

inline std::uint64_t calibration_seed(std::uint64_t master)
{
    return derive_seed(master, kCalibrationStream, 0);
}

/// Scores every cell on one simulated draw.
inline std::vector<ReplicationScore> score_replication(const DgpConfig& cfg,
                                                       const BreakSchedule& schedule,
                                                       const CorrelationRoots& roots,
                                                       const TauCalibration& calib,
                                                       const std::vector<MethodCell>& cells,
                                                       const SelectorSettings& settings, Index r)
{
    const std::uint64_t seed = replication_seed(cfg.master_seed, r);
    Rng rng(seed);
    const SimulatedSample sample = simulate_replication(cfg, schedule, roots, calib, rng);
    const FitSplit split = split_sample(sample, cfg.dynamic);

    std::vector<bool> truth(static_cast<std::size_t>(cfg.N), false);
    std::vector<Index> signals;
    for (Index i = 0; i < cfg.k; ++i) {
        truth[static_cast<std::size_t>(i)] = true;
        signals.push_back(i);
    }
    SelectorSpec spec;
    spec.ocmt = settings.ocmt;
    spec.lasso = settings.lasso;
    spec.lasso.seed = derive_seed(seed, kCrossValidationStream, 0);
    spec.boost = settings.boost;
    spec.oracle_indices = signals;

    SelectionCache cache;
    std::vector<ReplicationScore> out(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        ReplicationScore& s = out[c];
        s.replication = r;
        s.cell = c;
        s.realized = *split.next.realized;
        spec.tag = cells[c].tag;
        try {
            const ForecastRecord rec = grid_forecast(split.data, split.next, cells[c].protocol, spec,
                                                     standard_grid(cells[c].weights),
                                                     cells[c].estimator, &cache);
            for (const auto& lf : rec.per_lambda) {
                const auto rates = tpr_fpr(lf.selection, truth);
                s.khat += static_cast<double>(lf.selection.count());
                s.tpr += rates.tpr;
                s.fpr += rates.fpr;
            }
            const auto m = static_cast<double>(rec.per_lambda.size());
            s.khat /= m;
            s.tpr /= m;
            s.fpr /= m;
            s.forecast = rec.point_forecast;
            const double e = s.realized - s.forecast;
            s.squared_error = e * e;
            s.ok = std::isfinite(s.squared_error);
            if (!s.ok) s.error = "non-finite forecast";
        } catch (const Error& e) {
            s = ReplicationScore{};
            s.replication = r;
            s.cell = c;
            s.realized = *split.next.realized;
            s.error = e.what();
        }
    }
    return out;
}

/// Means over successful replications, in replication order.
inline std::vector<CellSummary> summarize(const std::vector<MethodCell>& cells,
                                          const std::vector<ReplicationScore>& records)
{
    std::vector<CellSummary> out(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) out[c].cell = cells[c];
    for (const auto& s : records) {
        CellSummary& cs = out[s.cell];
        if (!s.ok) {
            ++cs.failures;
            continue;
        }
        ++cs.successes;
        cs.khat += s.khat;
        cs.tpr += s.tpr;
        cs.fpr += s.fpr;
        cs.msfe += s.squared_error;
    }
    for (auto& cs : out) {
        if (cs.successes == 0) continue;
        const auto n = static_cast<double>(cs.successes);
        cs.khat /= n;
        cs.tpr /= n;
        cs.fpr /= n;
        cs.msfe /= n;
    }
    return out;
}

struct RunOptions
{
    unsigned threads = 0;
    CalibrationSettings calibration;
    /// Skips calibration when set (e.g. to share constants across variants).
    std::optional<TauCalibration> fixed_calibration;
};

/**
 * Runs R replications. Replication r draws from its own stream
 * replication_seed(master_seed, r) and is scored by every cell; results are
 * stored by index, so the summary does not depend on the thread count.
 */
inline ExperimentSummary run_experiment(const DgpConfig& cfg, const std::vector<MethodCell>& cells,
                                        const SelectorSettings& settings = {},
                                        const RunOptions& options = {})
{
    cfg.validate();
    if (cells.empty()) throw DomainError("run_experiment: no method cells");
    ExperimentSummary summary;
    summary.config = cfg;
    summary.replications = cfg.R;
    summary.calibration = options.fixed_calibration
                              ? *options.fixed_calibration
                              : calibrate_tau_u(cfg, calibration_seed(cfg.master_seed), options.calibration);
    const BreakSchedule schedule = make_break_schedule(cfg);
    const CorrelationRoots roots = CorrelationRoots::make(cfg.N);

    summary.records.resize(static_cast<std::size_t>(cfg.R) * cells.size());
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const Index r = next.fetch_add(1);
            if (r >= cfg.R) return;
            try {
                auto scores = score_replication(cfg, schedule, roots, summary.calibration, cells, settings, r);
                std::move(scores.begin(), scores.end(),
                          summary.records.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * cells.size()));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(cfg.R);
                return;
            }
        }
    };
    const unsigned n_threads = std::min<unsigned>(resolve_threads(options.threads),
                                                  static_cast<unsigned>(std::max<Index>(cfg.R, 1)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    summary.cells = summarize(cells, summary.records);
    for (const auto& cs : summary.cells) summary.failures += cs.failures;
    return summary;
}

} // namespace ocmt
