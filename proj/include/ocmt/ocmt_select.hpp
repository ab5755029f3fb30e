#pragma once

#include <cmath>
#include <string>

#include <ocmt/dataset.hpp>
#include <ocmt/normal.hpp>

namespace ocmt {

/// Nominal size p and critical-value exponent delta; hac switches the
/// t-ratio's standard error to Newey-West.
struct OcmtConfig
{
    double p = 0.05;
    double delta = 1.0;
    bool hac = false;

    void validate(Index n) const
    {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("ocmt: p must lie in (0, 1)");
        if (!(delta > 0.0)) throw DomainError("ocmt: delta must be positive");
        if (n >= 1 && !(p / (2.0 * std::pow(static_cast<double>(n), delta)) < 0.5)) {
            throw DomainError("ocmt: p / (2 N^delta) must be below 0.5");
        }
    }
};

/// c_p(N, delta) = Phi^{-1}(1 - p / (2 N^delta)).
inline double critical_value(double p, Index n, double delta)
{
    if (n < 1) throw DomainError("critical_value: N must be at least 1");
    if (!(delta > 0.0)) throw DomainError("critical_value: delta must be positive");
    const double tail = p / (2.0 * std::pow(static_cast<double>(n), delta));
    if (!(tail > 0.0 && tail < 1.0)) {
        throw DomainError("critical_value: quantile argument outside (0, 1)");
    }
    // Phi^{-1}(1 - a) = -Phi^{-1}(a); avoids rounding 1 - a for tiny a.
    return -normal_quantile(tail);
}

/// Bartlett bandwidth floor(4 (T/100)^{2/9}).
inline Index newey_west_bandwidth(Index t)
{
    return static_cast<Index>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0)));
}

namespace detail {

struct SimpleRegression
{
    double sxy = 0.0;
    double sxx = 0.0;
    double phi = 0.0;
    VectorXd resid;
};

inline SimpleRegression simple_regression(const VectorXd& y, const VectorXd& x)
{
    if (y.size() != x.size()) throw DimensionError("t_ratio: y and x lengths differ");
    SimpleRegression r;
    r.sxx = x.squaredNorm();
    if (!(r.sxx > 0.0)) throw DegenerateError("t_ratio: covariate has zero sum of squares");
    r.sxy = x.dot(y);
    r.phi = r.sxy / r.sxx;
    r.resid = y - r.phi * x;
    return r;
}

inline void check_not_perfect(double ssr, const VectorXd& y)
{
    if (!(ssr > 1e-24 * y.squaredNorm())) {
        throw DegenerateError("t_ratio: perfect fit leaves no residual variance");
    }
}

} // namespace detail

/**
 * t-ratio of the slope in the no-intercept regression of y_f on x_f:
 * (x'y) / (sigma * sqrt(x'x)), sigma^2 = T^{-1} sum of squared residuals.
 * Inputs are expected to be already filtered by the conditioning set.
 */
inline double t_ratio(const VectorXd& y_f, const VectorXd& x_f)
{
    const auto reg = detail::simple_regression(y_f, x_f);
    if (reg.sxy == 0.0) return 0.0;
    const double ssr = reg.resid.squaredNorm();
    detail::check_not_perfect(ssr, y_f);
    const double sigma = std::sqrt(ssr / static_cast<double>(y_f.size()));
    return reg.sxy / (sigma * std::sqrt(reg.sxx));
}

/// Same slope, Newey-West standard error with Bartlett weights.
inline double t_ratio_hac(const VectorXd& y_f, const VectorXd& x_f, Index bandwidth)
{
    const auto reg = detail::simple_regression(y_f, x_f);
    if (reg.sxy == 0.0) return 0.0;
    detail::check_not_perfect(reg.resid.squaredNorm(), y_f);
    const VectorXd score = x_f.cwiseProduct(reg.resid);
    const Index t = score.size();
    double s = score.squaredNorm();
    for (Index lag = 1; lag <= bandwidth && lag < t; ++lag) {
        const double w = 1.0 - static_cast<double>(lag) / static_cast<double>(bandwidth + 1);
        s += 2.0 * w * score.tail(t - lag).dot(score.head(t - lag));
    }
    if (!(s > 0.0)) throw DegenerateError("t_ratio_hac: non-positive long-run variance");
    return reg.phi / (std::sqrt(s) / reg.sxx);
}

/**
 * One-covariate-at-a-time multiple testing. Projects y and X off Z, computes
 * every covariate's t-ratio and keeps those with |t| > c_p(N, delta).
 * Columns flagged zero-variance get t = 0, are never selected, and are
 * counted in diagnostics["degenerate"].
 */
inline SelectionResult ocmt_select(const TimeSeriesDataset& data, const OcmtConfig& cfg = {})
{
    const Index n = data.N();
    if (n == 0) throw DimensionError("ocmt_select: empty active set");
    cfg.validate(n);
    if (data.zero_variance_count() == n) {
        throw DegenerateError("ocmt_select: every covariate is degenerate after projection");
    }
    const FilteredData f = partial_out(data);
    const double cv = critical_value(cfg.p, n, cfg.delta);
    const Index bw = newey_west_bandwidth(data.T());

    SelectionResult out;
    out.selector_tag = SelectorTag::kOcmt;
    out.critical_value = cv;
    out.included.assign(static_cast<std::size_t>(n), false);
    VectorXd t = VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i) {
        if (data.zero_variance()[static_cast<std::size_t>(i)]) continue;
        t(i) = cfg.hac ? t_ratio_hac(f.y, f.X.col(i), bw) : t_ratio(f.y, f.X.col(i));
        out.included[static_cast<std::size_t>(i)] = std::abs(t(i)) > cv;
    }
    out.t_stats = std::move(t);
    out.diagnostics["critical_value"] = cv;
    out.diagnostics["k_hat"] = static_cast<double>(out.count());
    out.diagnostics["degenerate"] = static_cast<double>(data.zero_variance_count());
    return out;
}

} // namespace ocmt
