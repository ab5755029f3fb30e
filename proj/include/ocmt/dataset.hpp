#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <ocmt/errors.hpp>

namespace ocmt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kZeroVarianceTolerance = 1e-10;

inline bool all_finite(const MatrixXd& m)
{
    return m.size() == 0 || m.allFinite();
}

// Ratio of smallest to largest singular value; 0 for an all-zero matrix.
inline double condition_ratio(const MatrixXd& a)
{
    if (a.cols() == 0) return 1.0;
    Eigen::JacobiSVD<MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    const double largest = s(0);
    if (!(largest > 0.0)) return 0.0;
    return s(s.size() - 1) / largest;
}

// Index of the first column that makes the leading block rank deficient,
// or -1 when the matrix has full column rank.
inline Index first_dependent_column(const MatrixXd& a, double tol = kRankTolerance)
{
    if (a.cols() == 0) return -1;
    if (a.rows() < a.cols() || condition_ratio(a) < tol) {
        for (Index k = 0; k < a.cols(); ++k) {
            if (k >= a.rows() || condition_ratio(a.leftCols(k + 1)) < tol) return k;
        }
    }
    return -1;
}

} // namespace detail

/// Orthonormal basis of span(Z). Throws RankError when Z is rank deficient
/// (smallest / largest singular value below 1e-10).
inline MatrixXd conditioning_basis(const MatrixXd& z)
{
    if (z.cols() == 0) return MatrixXd(z.rows(), 0);
    if (const Index bad = detail::first_dependent_column(z); bad >= 0) {
        throw RankError("conditioning matrix is rank deficient: column " +
                            std::to_string(bad) +
                            " depends on the preceding columns",
                        static_cast<std::size_t>(bad));
    }
    Eigen::HouseholderQR<MatrixXd> qr(z);
    return qr.householderQ() * MatrixXd::Identity(z.rows(), z.cols());
}

/// M_z a for an orthonormal basis Q of span(Z).
inline MatrixXd annihilate(const MatrixXd& basis, const MatrixXd& a)
{
    if (basis.cols() == 0) return a;
    return a - basis * (basis.transpose() * a);
}

/**
 * The universal input record: target y (T), active set X (T x N) and
 * conditioning set Z (T x m). Column 0 of Z is the unit column when an
 * intercept was requested. Immutable after construction.
 *
 * Construction validates finiteness and T >= m + 2, and flags every X column
 * whose residual after projection on Z has (numerically) zero norm. Those
 * columns are excluded by the selectors instead of producing NaN statistics.
 */
class TimeSeriesDataset
{
public:
    TimeSeriesDataset(VectorXd y, MatrixXd x, MatrixXd z,
                      std::optional<std::vector<std::int64_t>> timestamps = std::nullopt)
        : y_(std::move(y)), x_(std::move(x)), z_(std::move(z)),
          timestamps_(std::move(timestamps))
    {
        const Index t = y_.size();
        if (x_.rows() != t || z_.rows() != t) {
            throw DimensionError("dataset: y, X and Z must have the same number of rows");
        }
        if (timestamps_ && static_cast<Index>(timestamps_->size()) != t) {
            throw DimensionError("dataset: timestamp count differs from T");
        }
        if (t < z_.cols() + 2) {
            throw DimensionError("dataset: need T >= m + 2 (T = " + std::to_string(t) +
                                 ", m = " + std::to_string(z_.cols()) + ")");
        }
        if (!detail::all_finite(y_) || !detail::all_finite(x_) || !detail::all_finite(z_)) {
            throw DomainError("dataset: non-finite entry");
        }
        compute_zero_variance_flags();
    }

    Index T() const noexcept { return y_.size(); }
    Index N() const noexcept { return x_.cols(); }
    Index m() const noexcept { return z_.cols(); }

    const VectorXd& y() const noexcept { return y_; }
    const MatrixXd& X() const noexcept { return x_; }
    const MatrixXd& Z() const noexcept { return z_; }
    const std::optional<std::vector<std::int64_t>>& timestamps() const noexcept
    {
        return timestamps_;
    }

    /// zero_variance()[i] is true when M_z x_i vanishes.
    const std::vector<bool>& zero_variance() const noexcept { return zero_variance_; }
    Index zero_variance_count() const noexcept
    {
        return std::count(zero_variance_.begin(), zero_variance_.end(), true);
    }

    /// Same observations restricted to the given X columns (in that order).
    TimeSeriesDataset with_columns(const std::vector<Index>& columns) const
    {
        MatrixXd sub(T(), static_cast<Index>(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j] < 0 || columns[j] >= N()) {
                throw DimensionError("dataset: column index out of range");
            }
            sub.col(static_cast<Index>(j)) = x_.col(columns[j]);
        }
        return TimeSeriesDataset(y_, std::move(sub), z_, timestamps_);
    }

private:
    void compute_zero_variance_flags()
    {
        zero_variance_.assign(static_cast<std::size_t>(N()), false);
        if (N() == 0) return;
        MatrixXd basis;
        if (m() > 0) {
            // Span basis even when Z is rank deficient; partial_out reports that.
            Eigen::ColPivHouseholderQR<MatrixXd> qr(z_);
            qr.setThreshold(detail::kRankTolerance);
            const Index r = qr.rank();
            MatrixXd q = qr.householderQ() * MatrixXd::Identity(T(), m());
            basis = q.leftCols(r);
        } else {
            basis = MatrixXd(T(), 0);
        }
        const MatrixXd filtered = annihilate(basis, x_);
        for (Index i = 0; i < N(); ++i) {
            const double raw = x_.col(i).norm();
            const double res = filtered.col(i).norm();
            zero_variance_[static_cast<std::size_t>(i)] =
                raw == 0.0 || res <= detail::kZeroVarianceTolerance * raw;
        }
    }

    VectorXd y_;
    MatrixXd x_;
    MatrixXd z_;
    std::optional<std::vector<std::int64_t>> timestamps_;
    std::vector<bool> zero_variance_;
};

/// Output of partial_out: y and X filtered by M_z, plus an orthonormal basis
/// of span(Z).
struct FilteredData
{
    VectorXd y;
    MatrixXd X;
    MatrixXd basis;
};

/// Projects y and every column of X off span(Z).
inline FilteredData partial_out(const TimeSeriesDataset& data)
{
    MatrixXd basis = conditioning_basis(data.Z());
    VectorXd y = annihilate(basis, data.y());
    MatrixXd x = annihilate(basis, data.X());
    return {std::move(y), std::move(x), std::move(basis)};
}

/// Least-squares coefficients of the conditioning set given active-set
/// coefficients: (Z'Z)^{-1} Z'(y - X gamma_x).
inline VectorXd conditioning_coefficients(const TimeSeriesDataset& data,
                                          const VectorXd& gamma_x)
{
    if (gamma_x.size() != data.N()) {
        throw DimensionError("conditioning_coefficients: gamma_x has wrong length");
    }
    if (data.m() == 0) return VectorXd(0);
    const VectorXd resid = data.y() - data.X() * gamma_x;
    return data.Z().colPivHouseholderQr().solve(resid);
}

enum class SelectorTag { kOcmt, kLasso, kAdaptiveLasso, kBoosting, kOracle };

inline const char* to_string(SelectorTag tag)
{
    switch (tag) {
    case SelectorTag::kOcmt: return "ocmt";
    case SelectorTag::kLasso: return "lasso";
    case SelectorTag::kAdaptiveLasso: return "alasso";
    case SelectorTag::kBoosting: return "boosting";
    case SelectorTag::kOracle: return "oracle";
    }
    return "?";
}

/**
 * Per-covariate inclusion decisions plus whatever the selector produced along
 * the way. coefficients (when present) are selector-native, in the units of
 * the original X columns, and zero for excluded covariates.
 */
struct SelectionResult
{
    std::vector<bool> included;
    std::optional<VectorXd> t_stats;
    std::optional<double> critical_value;
    std::optional<VectorXd> coefficients;
    std::optional<VectorXd> conditioning_coefficients;
    SelectorTag selector_tag = SelectorTag::kOcmt;
    std::map<std::string, double> diagnostics;

    Index count() const
    {
        return std::count(included.begin(), included.end(), true);
    }

    std::vector<Index> selected_indices() const
    {
        std::vector<Index> out;
        for (std::size_t i = 0; i < included.size(); ++i) {
            if (included[i]) out.push_back(static_cast<Index>(i));
        }
        return out;
    }

    /// Checks the record's invariants: included/coefficients agree, and for
    /// OCMT the inclusion flags are exactly |t| > critical value.
    bool consistent() const
    {
        const auto n = static_cast<Index>(included.size());
        if (coefficients) {
            if (coefficients->size() != n) return false;
            for (Index i = 0; i < n; ++i) {
                if (!included[static_cast<std::size_t>(i)] && (*coefficients)(i) != 0.0) {
                    return false;
                }
            }
        }
        if (selector_tag == SelectorTag::kOcmt && t_stats && critical_value) {
            if (t_stats->size() != n) return false;
            for (Index i = 0; i < n; ++i) {
                const bool rule = std::abs((*t_stats)(i)) > *critical_value;
                if (rule != included[static_cast<std::size_t>(i)]) return false;
            }
        }
        return true;
    }
};

/// Selection from an explicit index set (true signal identities, or a
/// user-supplied model).
inline SelectionResult fixed_selection(Index n, const std::vector<Index>& indices,
                                       SelectorTag tag = SelectorTag::kOracle)
{
    SelectionResult out;
    out.included.assign(static_cast<std::size_t>(n), false);
    for (Index i : indices) {
        if (i < 0 || i >= n) throw DimensionError("fixed_selection: index out of range");
        out.included[static_cast<std::size_t>(i)] = true;
    }
    out.selector_tag = tag;
    out.diagnostics["k_hat"] = static_cast<double>(out.count());
    return out;
}

enum class WeightLabel { kNone, kLight, kHeavy, kCustom };

inline const char* to_string(WeightLabel label)
{
    switch (label) {
    case WeightLabel::kNone: return "none";
    case WeightLabel::kLight: return "light";
    case WeightLabel::kHeavy: return "heavy";
    case WeightLabel::kCustom: return "custom";
    }
    return "?";
}

/// A grid of exponential down-weighting coefficients, each in (0, 1].
class WeightScheme
{
public:
    WeightScheme(std::vector<double> grid, WeightLabel label)
        : grid_(std::move(grid)), label_(label)
    {
        if (grid_.empty()) throw DomainError("weight scheme: empty grid");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double l = grid_[i];
            if (!(l > 0.0 && l <= 1.0)) {
                throw DomainError("weight scheme: lambda must lie in (0, 1]");
            }
            if (i > 0 && !(grid_[i - 1] < l)) {
                throw DomainError("weight scheme: grid must be strictly ascending");
            }
        }
        const bool unit = grid_.size() == 1 && grid_[0] == 1.0;
        if ((label_ == WeightLabel::kNone) != unit) {
            throw DomainError("weight scheme: label NONE must go with the grid {1}");
        }
    }

    /// Custom grid in any order; sorted and de-duplicated. {1} maps to NONE.
    static WeightScheme custom(std::vector<double> grid)
    {
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        const bool unit = grid.size() == 1 && grid[0] == 1.0;
        return WeightScheme(std::move(grid), unit ? WeightLabel::kNone : WeightLabel::kCustom);
    }

    const std::vector<double>& grid() const noexcept { return grid_; }
    WeightLabel label() const noexcept { return label_; }

private:
    std::vector<double> grid_;
    WeightLabel label_;
};

} // namespace ocmt
