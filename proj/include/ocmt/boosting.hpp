#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <ocmt/dataset.hpp>
#include <ocmt/lasso.hpp>

namespace ocmt {

struct BoostConfig
{
    double nu = 0.5;
    Index m_max = 500;

    void validate() const
    {
        if (!(nu > 0.0 && nu <= 1.0)) throw DomainError("boosting: step size must lie in (0, 1]");
        if (m_max < 1) throw DomainError("boosting: m_max must be at least 1");
    }
};

struct BaseLearnerFit
{
    Index index = 0;
    double delta = 0.0;
    double rss = 0.0;
};

/**
 * Componentwise least squares: fits e on each column separately and returns
 * the column with the smallest residual sum of squares (lowest index on
 * ties) with its slope.
 */
inline BaseLearnerFit base_learner(const VectorXd& e, const MatrixXd& x)
{
    if (x.cols() == 0) throw DimensionError("base_learner: no columns");
    if (x.rows() != e.size()) throw DimensionError("base_learner: row count differs from residual length");
    const double ee = e.squaredNorm();
    BaseLearnerFit best;
    best.rss = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < x.cols(); ++i) {
        const double xx = x.col(i).squaredNorm();
        if (!(xx > 0.0)) continue;
        const double xe = x.col(i).dot(e);
        const double delta = xe / xx;
        const double rss = std::max(ee - delta * xe, 0.0);
        if (rss < best.rss) best = {i, delta, rss};
    }
    if (!std::isfinite(best.rss)) throw DegenerateError("base_learner: every column has zero norm");
    return best;
}

/// Per-iteration record of a boosting run. Vectors are indexed by m - 1.
struct BoostTrace
{
    std::vector<Index> selected;
    std::vector<double> step;
    std::vector<double> rss;
    std::vector<double> trace_b;
    std::vector<double> bic;
    /// Fitted values B_m y after the stopping iteration.
    VectorXd fitted;
    Index M = 1;
};

struct BoostOutcome
{
    SelectionResult selection;
    BoostTrace trace;
};

/**
 * L2-boosting with the componentwise least-squares learner on the filtered,
 * normalized covariates, stopped at the BIC minimizer over 1..m_max.
 *
 * tr(B_m) is tracked without forming T x T matrices: with
 * P_m = (I - nu H_m) ... (I - nu H_1) and unit-norm columns,
 * tr(P_m) = tr(P_{m-1}) - nu x_s' P_{m-1} x_s, and the rows A = X'P are
 * updated by A <- A - nu (X'x_s)(x_s'P_{m-1}).
 */
inline BoostOutcome boost_run(const TimeSeriesDataset& data, const BoostConfig& cfg = {})
{
    cfg.validate();
    const Index n = data.N();
    BoostOutcome out;
    out.selection.selector_tag = SelectorTag::kBoosting;
    out.selection.included.assign(static_cast<std::size_t>(n), false);

    const auto cols = detail::usable_columns(data);
    const FilteredData f = partial_out(data);
    const Index t = data.T();
    if (cols.empty()) {
        out.selection = detail::empty_selection(n, SelectorTag::kBoosting, "no_usable_columns");
        out.selection.conditioning_coefficients = conditioning_coefficients(data, VectorXd::Zero(n));
        out.trace.fitted = VectorXd::Zero(t);
        return out;
    }
    const auto norm = normalize_columns(f.X(Eigen::all, cols));
    const MatrixXd& xs = norm.X;
    const MatrixXd gram = xs.transpose() * xs;
    MatrixXd rows = xs.transpose();  // X' P_m
    double trace_p = static_cast<double>(t);
    const double log_t = std::log(static_cast<double>(t));

    auto& tr = out.trace;
    VectorXd resid = f.y;
    double best_bic = std::numeric_limits<double>::infinity();
    for (Index m = 1; m <= cfg.m_max; ++m) {
        const auto fit = base_learner(resid, xs);
        const Index s = fit.index;
        const double step = cfg.nu * fit.delta;
        resid.noalias() -= step * xs.col(s);

        const Eigen::RowVectorXd ps = rows.row(s);
        trace_p -= cfg.nu * ps.dot(xs.col(s)) / gram(s, s);
        rows.noalias() -= (cfg.nu / gram(s, s)) * gram.col(s) * ps;

        const double rss = resid.squaredNorm();
        const double trace_b = static_cast<double>(t) - trace_p;
        const double sigma2 = rss / static_cast<double>(t);
        const double bic = std::log(sigma2) + 1.0 + trace_b * log_t / static_cast<double>(t);
        tr.selected.push_back(s);
        tr.step.push_back(step);
        tr.rss.push_back(rss);
        tr.trace_b.push_back(trace_b);
        tr.bic.push_back(bic);
        if (bic < best_bic) {
            best_bic = bic;
            tr.M = m;
        }
    }

    VectorXd star = VectorXd::Zero(static_cast<Index>(cols.size()));
    for (Index m = 0; m < tr.M; ++m) star(tr.selected[static_cast<std::size_t>(m)]) += tr.step[static_cast<std::size_t>(m)];
    tr.fitted = xs * star;

    VectorXd coef = VectorXd::Zero(n);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto jj = static_cast<Index>(j);
        coef(cols[j]) = star(jj) / norm.norms(jj);
    }
    detail::finish_penalized(out.selection, data, std::move(coef));
    out.selection.diagnostics["stopping_iteration"] = static_cast<double>(tr.M);
    out.selection.diagnostics["bic_min"] = best_bic;
    out.selection.diagnostics["trace_b"] = tr.trace_b[static_cast<std::size_t>(tr.M - 1)];
    out.selection.diagnostics["degenerate"] = static_cast<double>(data.zero_variance_count());
    return out;
}

inline SelectionResult boost_select(const TimeSeriesDataset& data, const BoostConfig& cfg = {})
{
    return boost_run(data, cfg).selection;
}

} // namespace ocmt
