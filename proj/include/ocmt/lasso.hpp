#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <ocmt/dataset.hpp>
#include <ocmt/random.hpp>

namespace ocmt {

// ---------------------------------------------------------------------------
// Column normalization and the penalty path
// ---------------------------------------------------------------------------

struct NormalizedColumns
{
    MatrixXd X;
    VectorXd norms;
};

/// Divides every column by its Euclidean norm.
inline NormalizedColumns normalize_columns(const MatrixXd& x)
{
    NormalizedColumns out{x, VectorXd(x.cols())};
    for (Index j = 0; j < x.cols(); ++j) {
        const double n = x.col(j).norm();
        if (!(n > 0.0)) {
            throw DegenerateError("normalize_columns: column " + std::to_string(j) +
                                  " has zero norm");
        }
        out.norms(j) = n;
        out.X.col(j) /= n;
    }
    return out;
}

/// Descending, log-spaced penalties from phi_max = max_i |x_i'y| down to
/// ratio * phi_max.
struct PenaltyPath
{
    std::vector<double> values;
    double phi_max = 0.0;
    double phi_min = 0.0;

    Index size() const noexcept { return static_cast<Index>(values.size()); }
};

inline PenaltyPath make_penalty_path(const VectorXd& y, const MatrixXd& x, Index count = 100,
                                     double ratio = 1e-3)
{
    if (count < 2) throw DomainError("penalty path: need at least two values");
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("penalty path: ratio must lie in (0, 1)");
    PenaltyPath path;
    path.phi_max = (x.transpose() * y).cwiseAbs().maxCoeff();
    if (!(path.phi_max > 0.0)) {
        throw DegenerateError("penalty path: target is orthogonal to every covariate");
    }
    path.phi_min = ratio * path.phi_max;
    path.values.resize(static_cast<std::size_t>(count));
    const double lmax = std::log(path.phi_max);
    const double lmin = std::log(path.phi_min);
    for (Index k = 0; k < count; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
        path.values[static_cast<std::size_t>(k)] = std::exp(lmax + frac * (lmin - lmax));
    }
    path.values.front() = path.phi_max;
    path.values.back() = path.phi_min;
    return path;
}

// ---------------------------------------------------------------------------
// Coordinate descent for ||y - X g||^2 + phi ||g||_1
// ---------------------------------------------------------------------------

struct LassoOptions
{
    double tol = 1e-7;
    long max_sweeps = 100000;
    /// Record the objective after every sweep in LassoFit::objective.
    bool track_objective = false;
};

struct LassoFit
{
    VectorXd coef;
    long sweeps = 0;
    std::vector<double> objective;
};

inline double soft_threshold(double z, double gamma)
{
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

/// Sufficient statistics of a least-squares problem: G = X'X, c = X'y, y'y.
struct GramProblem
{
    MatrixXd gram;
    VectorXd xty;
    double yty = 0.0;

    static GramProblem from(const VectorXd& y, const MatrixXd& x)
    {
        return {x.transpose() * x, x.transpose() * y, y.squaredNorm()};
    }

    Index size() const noexcept { return xty.size(); }

    double objective(const VectorXd& g, double phi) const
    {
        return yty - 2.0 * xty.dot(g) + g.dot(gram * g) + phi * g.lpNorm<1>();
    }
};

/**
 * Cyclic coordinate descent on the Gram form. The coordinate update is
 * g_j = soft(c_j - sum_{k != j} G_jk g_k, phi / 2) / G_jj, the exact
 * minimizer of the stated objective in g_j. Converged when the largest
 * coefficient change in a sweep falls below tol.
 */
inline LassoFit lasso_fit(const GramProblem& prob, double phi, const VectorXd& warm,
                          const LassoOptions& opts = {})
{
    if (!(phi >= 0.0)) throw DomainError("lasso_fit: penalty must be non-negative");
    const Index n = prob.size();
    if (warm.size() != n) throw DimensionError("lasso_fit: warm start has wrong length");
    LassoFit fit{warm, 0, {}};
    VectorXd& g = fit.coef;
    VectorXd gg = prob.gram * g;
    const double half = 0.5 * phi;
#ifndef NDEBUG
    double previous = prob.objective(g, phi);
#endif
    while (fit.sweeps < opts.max_sweeps) {
        ++fit.sweeps;
        double max_change = 0.0;
        for (Index j = 0; j < n; ++j) {
            const double gjj = prob.gram(j, j);
            const double old = g(j);
            double fresh = 0.0;
            if (gjj > 0.0) {
                const double rho = prob.xty(j) - gg(j) + gjj * old;
                fresh = soft_threshold(rho, half) / gjj;
            }
            const double delta = fresh - old;
            if (delta != 0.0) {
                g(j) = fresh;
                gg.noalias() += delta * prob.gram.col(j);
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (opts.track_objective) fit.objective.push_back(prob.objective(g, phi));
#ifndef NDEBUG
        const double current = prob.objective(g, phi);
        assert(current <= previous + 1e-9 * (1.0 + std::abs(previous)));
        previous = current;
#endif
        if (max_change < opts.tol) return fit;
    }
    throw ConvergenceError("lasso_fit: no convergence after " + std::to_string(fit.sweeps) +
                               " sweeps",
                           fit.coef, fit.sweeps);
}

inline LassoFit lasso_fit(const VectorXd& y, const MatrixXd& x, double phi,
                          const LassoOptions& opts = {})
{
    return lasso_fit(GramProblem::from(y, x), phi, VectorXd::Zero(x.cols()), opts);
}

/// Fits every penalty of the path in order, warm-starting each from the last.
inline std::vector<VectorXd> lasso_path_fit(const GramProblem& prob, const PenaltyPath& path,
                                            const LassoOptions& opts = {},
                                            Index last = -1)
{
    const Index stop = last < 0 ? path.size() : std::min(last + 1, path.size());
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(stop));
    VectorXd g = VectorXd::Zero(prob.size());
    for (Index k = 0; k < stop; ++k) {
        g = lasso_fit(prob, path.values[static_cast<std::size_t>(k)], g, opts).coef;
        out.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// K-fold cross-validation
// ---------------------------------------------------------------------------

/// fold[t] in 1..K: the cyclic labelling 1..K,1..K,... randomly permuted.
struct CvPlan
{
    Index K = 0;
    std::vector<int> fold;
};

inline CvPlan make_cv_plan(Index t, Index k, std::uint64_t seed)
{
    if (k < 2) throw DomainError("cv: need at least two folds");
    if (k > t) throw DomainError("cv: more folds than observations leaves a fold empty");
    CvPlan plan{k, std::vector<int>(static_cast<std::size_t>(t))};
    for (Index r = 0; r < t; ++r) plan.fold[static_cast<std::size_t>(r)] = static_cast<int>(r % k) + 1;
    Rng rng(seed);
    rng.shuffle(plan.fold);
    return plan;
}

struct CvResult
{
    double phi_opt = 0.0;
    Index index_opt = 0;
    std::vector<double> cv_mse;
};

/**
 * For each fold, fits the whole path on the other folds and predicts the
 * held-out rows; cv_mse[j] = T^{-1} sum of squared prediction errors at
 * penalty j. The minimizer is returned, ties going to the larger penalty.
 */
inline CvResult kfold_cv(const VectorXd& y, const MatrixXd& x, const PenaltyPath& path,
                         const CvPlan& plan, const LassoOptions& opts = {})
{
    const Index t = y.size();
    if (static_cast<Index>(plan.fold.size()) != t) throw DimensionError("cv: plan length differs from T");
    std::vector<double> sse(static_cast<std::size_t>(path.size()), 0.0);
    for (int ell = 1; ell <= plan.K; ++ell) {
        std::vector<Index> train;
        std::vector<Index> test;
        for (Index r = 0; r < t; ++r) {
            (plan.fold[static_cast<std::size_t>(r)] == ell ? test : train).push_back(r);
        }
        if (test.empty()) throw DomainError("cv: fold " + std::to_string(ell) + " is empty");
        const MatrixXd xtr = x(train, Eigen::all);
        const VectorXd ytr = y(train);
        const MatrixXd xte = x(test, Eigen::all);
        const VectorXd yte = y(test);
        const auto fits = lasso_path_fit(GramProblem::from(ytr, xtr), path, opts);
        for (Index k = 0; k < path.size(); ++k) {
            sse[static_cast<std::size_t>(k)] +=
                (yte - xte * fits[static_cast<std::size_t>(k)]).squaredNorm();
        }
    }
    CvResult out;
    out.cv_mse.resize(sse.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sse.size(); ++k) {
        out.cv_mse[k] = sse[k] / static_cast<double>(t);
        if (out.cv_mse[k] < best) {
            best = out.cv_mse[k];
            out.index_opt = static_cast<Index>(k);
        }
    }
    out.phi_opt = path.values[static_cast<std::size_t>(out.index_opt)];
    return out;
}

inline CvResult kfold_cv(const VectorXd& y, const MatrixXd& x, const PenaltyPath& path, Index k,
                         std::uint64_t seed, const LassoOptions& opts = {})
{
    return kfold_cv(y, x, path, make_cv_plan(y.size(), k, seed), opts);
}

// ---------------------------------------------------------------------------
// Lasso and adaptive Lasso selectors
// ---------------------------------------------------------------------------

struct LassoConfig
{
    Index folds = 10;
    std::uint64_t seed = 0;
    Index path_length = 100;
    double path_ratio = 1e-3;
    LassoOptions solver;
};

inline constexpr double kNonZeroThreshold = 1e-10;

/// Everything the Lasso pipeline produced, for callers that need more than
/// the selection.
struct LassoOutcome
{
    SelectionResult selection;
    /// Coefficients on the normalized filtered covariates (zero for
    /// degenerate columns).
    VectorXd normalized_coef;
    VectorXd norms;
    PenaltyPath path;
    CvResult cv;
};

namespace detail {

inline std::vector<Index> usable_columns(const TimeSeriesDataset& data)
{
    std::vector<Index> cols;
    for (Index i = 0; i < data.N(); ++i) {
        if (!data.zero_variance()[static_cast<std::size_t>(i)]) cols.push_back(i);
    }
    return cols;
}

inline SelectionResult empty_selection(Index n, SelectorTag tag, const char* reason)
{
    SelectionResult out;
    out.selector_tag = tag;
    out.included.assign(static_cast<std::size_t>(n), false);
    out.coefficients = VectorXd::Zero(n);
    out.diagnostics[reason] = 1.0;
    out.diagnostics["k_hat"] = 0.0;
    return out;
}

inline void finish_penalized(SelectionResult& out, const TimeSeriesDataset& data, VectorXd coef)
{
    out.included.assign(static_cast<std::size_t>(data.N()), false);
    for (Index i = 0; i < data.N(); ++i) {
        if (std::abs(coef(i)) > kNonZeroThreshold) {
            out.included[static_cast<std::size_t>(i)] = true;
        } else {
            coef(i) = 0.0;
        }
    }
    out.conditioning_coefficients = conditioning_coefficients(data, coef);
    out.coefficients = std::move(coef);
    out.diagnostics["k_hat"] = static_cast<double>(out.count());
}

} // namespace detail

/**
 * Project on Z, normalize, build the 100-point path, choose the penalty by
 * K-fold CV, refit along the path to the chosen penalty, unscale by the
 * column norms and recover the conditioning coefficients.
 */
inline LassoOutcome lasso_run(const TimeSeriesDataset& data, const LassoConfig& cfg = {})
{
    const Index n = data.N();
    LassoOutcome out;
    out.normalized_coef = VectorXd::Zero(n);
    out.norms = VectorXd::Zero(n);

    const auto cols = detail::usable_columns(data);
    const FilteredData f = partial_out(data);
    if (cols.empty()) {
        out.selection = detail::empty_selection(n, SelectorTag::kLasso, "no_usable_columns");
        out.selection.conditioning_coefficients = conditioning_coefficients(data, VectorXd::Zero(n));
        return out;
    }
    const auto norm = normalize_columns(f.X(Eigen::all, cols));
    try {
        out.path = make_penalty_path(f.y, norm.X, cfg.path_length, cfg.path_ratio);
    } catch (const DegenerateError&) {
        out.selection = detail::empty_selection(n, SelectorTag::kLasso, "zero_phi_max");
        out.selection.conditioning_coefficients = conditioning_coefficients(data, VectorXd::Zero(n));
        return out;
    }
    out.cv = kfold_cv(f.y, norm.X, out.path, cfg.folds, cfg.seed, cfg.solver);
    const auto fits = lasso_path_fit(GramProblem::from(f.y, norm.X), out.path, cfg.solver,
                                     out.cv.index_opt);
    const VectorXd& star = fits.back();

    VectorXd coef = VectorXd::Zero(n);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto jj = static_cast<Index>(j);
        out.normalized_coef(cols[j]) = star(jj);
        out.norms(cols[j]) = norm.norms(jj);
        coef(cols[j]) = star(jj) / norm.norms(jj);
    }
    out.selection.selector_tag = SelectorTag::kLasso;
    detail::finish_penalized(out.selection, data, std::move(coef));
    out.selection.diagnostics["phi_opt"] = out.cv.phi_opt;
    out.selection.diagnostics["phi_max"] = out.path.phi_max;
    out.selection.diagnostics["phi_index"] = static_cast<double>(out.cv.index_opt);
    out.selection.diagnostics["degenerate"] = static_cast<double>(data.zero_variance_count());
    return out;
}

inline SelectionResult lasso_select(const TimeSeriesDataset& data, const LassoConfig& cfg = {})
{
    return lasso_run(data, cfg).selection;
}

/**
 * Adaptive Lasso on top of a completed Lasso stage: restrict to the Lasso
 * support S, rescale those filtered columns by the Lasso coefficients, rerun
 * the penalized fit with its own path and CV (same fold plan), and map the
 * solution back. Coefficients outside S are zero.
 */
inline SelectionResult adaptive_lasso_select(const TimeSeriesDataset& data,
                                             const LassoOutcome& first,
                                             const LassoConfig& cfg = {})
{
    const Index n = data.N();
    const auto support = first.selection.selected_indices();
    if (support.empty()) {
        auto out = detail::empty_selection(n, SelectorTag::kAdaptiveLasso, "lasso_support_empty");
        out.conditioning_coefficients = conditioning_coefficients(data, VectorXd::Zero(n));
        return out;
    }
    const FilteredData f = partial_out(data);
    const VectorXd gamma = (*first.selection.coefficients)(support);
    const MatrixXd design = f.X(Eigen::all, support) * gamma.asDiagonal();

    SelectionResult out;
    out.selector_tag = SelectorTag::kAdaptiveLasso;
    PenaltyPath path;
    try {
        path = make_penalty_path(f.y, design, cfg.path_length, cfg.path_ratio);
    } catch (const DegenerateError&) {
        auto empty = detail::empty_selection(n, SelectorTag::kAdaptiveLasso, "zero_psi_max");
        empty.conditioning_coefficients = conditioning_coefficients(data, VectorXd::Zero(n));
        return empty;
    }
    const CvResult cv = kfold_cv(f.y, design, path, cfg.folds, cfg.seed, cfg.solver);
    const auto fits = lasso_path_fit(GramProblem::from(f.y, design), path, cfg.solver, cv.index_opt);
    const VectorXd delta = gamma.cwiseProduct(fits.back());

    VectorXd coef = VectorXd::Zero(n);
    for (std::size_t j = 0; j < support.size(); ++j) coef(support[j]) = delta(static_cast<Index>(j));
    detail::finish_penalized(out, data, std::move(coef));
    out.diagnostics["psi_opt"] = cv.phi_opt;
    out.diagnostics["psi_max"] = path.phi_max;
    out.diagnostics["psi_index"] = static_cast<double>(cv.index_opt);
    out.diagnostics["lasso_k_hat"] = static_cast<double>(support.size());
    return out;
}

inline SelectionResult adaptive_lasso_select(const TimeSeriesDataset& data,
                                             const LassoConfig& cfg = {})
{
    return adaptive_lasso_select(data, lasso_run(data, cfg), cfg);
}

} // namespace ocmt
