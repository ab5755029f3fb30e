#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <ocmt/dataset.hpp>

namespace ocmt {

/// Mean of the squared errors.
inline double msfe(const VectorXd& errors)
{
    if (errors.size() == 0) throw DimensionError("msfe: no errors");
    return errors.squaredNorm() / static_cast<double>(errors.size());
}

struct SelectionRates
{
    double tpr = 0.0;
    double fpr = 0.0;
};

inline SelectionRates tpr_fpr(const std::vector<bool>& included, const std::vector<bool>& truth)
{
    if (included.size() != truth.size()) throw DimensionError("tpr_fpr: selection and truth lengths differ");
    std::size_t pos = 0, neg = 0, tp = 0, fp = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            ++pos;
            tp += included[i] ? 1 : 0;
        } else {
            ++neg;
            fp += included[i] ? 1 : 0;
        }
    }
    if (pos == 0 || neg == 0) throw DomainError("tpr_fpr: truth needs at least one signal and one noise variable");
    return {static_cast<double>(tp) / static_cast<double>(pos), static_cast<double>(fp) / static_cast<double>(neg)};
}

inline SelectionRates tpr_fpr(const SelectionResult& selection, const std::vector<bool>& truth)
{
    return tpr_fpr(selection.included, truth);
}

/// Loss differentials q_lt = e_A^2 - e_B^2, one vector per series.
struct LossPanel
{
    std::vector<VectorXd> q;
    Index horizon = 1;

    static LossPanel from_errors(const std::vector<VectorXd>& a, const std::vector<VectorXd>& b,
                                 Index horizon = 1)
    {
        if (a.size() != b.size()) throw DimensionError("loss panel: series counts differ");
        LossPanel p;
        p.horizon = horizon;
        for (std::size_t l = 0; l < a.size(); ++l) {
            if (a[l].size() != b[l].size()) throw DimensionError("loss panel: series " + std::to_string(l) + " lengths differ");
            p.q.push_back(a[l].cwiseAbs2() - b[l].cwiseAbs2());
        }
        return p;
    }

    Index total() const
    {
        Index n = 0;
        for (const auto& s : q) n += s.size();
        return n;
    }
};

/// Long-run variance about the series mean with Bartlett weights over
/// `lags` lags (lags = 0 gives the plain 1/T variance).
inline double bartlett_variance(const VectorXd& x, Index lags)
{
    const Index t = x.size();
    const VectorXd d = x.array() - x.mean();
    double s = d.squaredNorm();
    for (Index j = 1; j <= lags && j < t; ++j) {
        const double w = 1.0 - static_cast<double>(j) / static_cast<double>(lags + 1);
        s += 2.0 * w * d.tail(t - j).dot(d.head(t - j));
    }
    return s / static_cast<double>(t);
}

/// Pooled Diebold-Mariano statistic; positive values favour method B.
inline double panel_dm(const LossPanel& panel)
{
    if (panel.q.empty()) throw DimensionError("panel_dm: empty panel");
    if (panel.horizon < 1) throw DomainError("panel_dm: horizon must be at least 1");
    double sum = 0.0, v = 0.0;
    for (std::size_t l = 0; l < panel.q.size(); ++l) {
        const VectorXd& s = panel.q[l];
        if (s.size() < 2) throw DimensionError("panel_dm: series " + std::to_string(l) + " has fewer than two periods");
        if (!s.allFinite()) throw DomainError("panel_dm: non-finite loss differential in series " + std::to_string(l));
        sum += s.sum();
        v += static_cast<double>(s.size()) * bartlett_variance(s, panel.horizon - 1);
    }
    const double n = static_cast<double>(panel.total());
    v /= n * n;
    if (!(v > 0.0)) throw DegenerateError("panel_dm: zero variance of the mean loss differential");
    return (sum / n) / std::sqrt(v);
}

/// Realized values and forecasts per series; only their signs matter.
struct DirectionPanel
{
    std::vector<VectorXd> realized;
    std::vector<VectorXd> forecast;

    void check() const
    {
        if (realized.size() != forecast.size()) throw DimensionError("direction panel: series counts differ");
        for (std::size_t l = 0; l < realized.size(); ++l) {
            if (realized[l].size() != forecast[l].size()) {
                throw DimensionError("direction panel: series " + std::to_string(l) + " lengths differ");
            }
        }
    }
};

struct DirectionCounts
{
    double n = 0.0;
    double hits = 0.0;
    double realized_up = 0.0;
    double forecast_up = 0.0;
};

inline DirectionCounts direction_counts(const DirectionPanel& panel)
{
    panel.check();
    DirectionCounts c;
    for (std::size_t l = 0; l < panel.realized.size(); ++l) {
        for (Index t = 0; t < panel.realized[l].size(); ++t) {
            const double y = panel.realized[l](t);
            const double f = panel.forecast[l](t);
            c.n += 1.0;
            c.hits += (y > 0.0 && f > 0.0) || (y < 0.0 && f < 0.0) ? 1.0 : 0.0;
            c.realized_up += y > 0.0 ? 1.0 : 0.0;
            c.forecast_up += f > 0.0 ? 1.0 : 0.0;
        }
    }
    return c;
}

/// Percentage of periods with sgn(y y^f) > 0.
inline double mdfa(const DirectionPanel& panel)
{
    const auto c = direction_counts(panel);
    if (c.n == 0.0) throw DimensionError("mdfa: empty panel");
    return 100.0 * c.hits / c.n;
}

/// Pooled PT directional accuracy statistic. `include_last_term` keeps the
/// O(T^-2) term of the variance of P*.
inline double pt_test(const DirectionPanel& panel, bool include_last_term = true)
{
    const auto c = direction_counts(panel);
    if (c.n == 0.0) throw DimensionError("pt_test: empty panel");
    const double p = c.hits / c.n;
    const double dy = c.realized_up / c.n;
    const double df = c.forecast_up / c.n;
    if (dy == 0.0 || dy == 1.0 || df == 0.0 || df == 1.0) {
        throw DegenerateError("pt_test: realized or forecast signs never change");
    }
    const double p_star = dy * df + (1.0 - dy) * (1.0 - df);
    const double v_p = p_star * (1.0 - p_star) / c.n;
    double v_star = (2.0 * dy - 1.0) * (2.0 * dy - 1.0) * df * (1.0 - df) / c.n +
                    (2.0 * df - 1.0) * (2.0 * df - 1.0) * dy * (1.0 - dy) / c.n;
    if (include_last_term) v_star += 4.0 * dy * df * (1.0 - dy) * (1.0 - df) / (c.n * c.n);
    const double v = v_p - v_star;
    if (!(v > 0.0)) throw DegenerateError("pt_test: non-positive variance difference");
    return (p - p_star) / std::sqrt(v);
}

struct IrcResult
{
    bool satisfied = false;
    double lhs = 0.0;
};

/// Sample correlation matrix of the columns of x.
inline MatrixXd sample_correlation(const MatrixXd& x)
{
    if (x.rows() < 2) throw DimensionError("sample_correlation: need at least two rows");
    const MatrixXd c = x.rowwise() - x.colwise().mean();
    const VectorXd sd = c.colwise().norm().transpose();
    for (Index j = 0; j < sd.size(); ++j) {
        if (!(sd(j) > 0.0)) throw DegenerateError("sample_correlation: column " + std::to_string(j) + " is constant");
    }
    const MatrixXd s = c * sd.cwiseInverse().asDiagonal();
    return s.transpose() * s;
}

/// || R21 R11^{-1} sign(beta) ||_inf from the sample correlations of x.
inline IrcResult irc_check(const MatrixXd& x, const std::vector<Index>& signals,
                           const VectorXd& beta_signs)
{
    const Index n = x.cols();
    if (static_cast<Index>(signals.size()) != beta_signs.size()) {
        throw DimensionError("irc_check: one sign per signal is required");
    }
    if (signals.empty()) throw DimensionError("irc_check: no signals");
    std::vector<bool> is_signal(static_cast<std::size_t>(n), false);
    for (Index s : signals) {
        if (s < 0 || s >= n) throw DimensionError("irc_check: signal index out of range");
        if (is_signal[static_cast<std::size_t>(s)]) throw DimensionError("irc_check: duplicate signal index");
        is_signal[static_cast<std::size_t>(s)] = true;
    }
    std::vector<Index> rest;
    for (Index i = 0; i < n; ++i) {
        if (!is_signal[static_cast<std::size_t>(i)]) rest.push_back(i);
    }
    const MatrixXd r = sample_correlation(x);
    const MatrixXd r11 = r(signals, signals);
    if (detail::first_dependent_column(r11) >= 0) throw RankError("irc_check: signal correlation block is singular", 0);
    const VectorXd sgn = beta_signs.unaryExpr([](double b) { return static_cast<double>((b > 0.0) - (b < 0.0)); });
    IrcResult out;
    if (!rest.empty()) {
        const VectorXd v = r(rest, signals) * r11.partialPivLu().solve(sgn);
        out.lhs = v.cwiseAbs().maxCoeff();
    }
    out.satisfied = out.lhs <= 1.0;
    return out;
}

} // namespace ocmt
