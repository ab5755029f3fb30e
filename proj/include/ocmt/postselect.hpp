#pragma once

#include <map>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include <ocmt/boosting.hpp>
#include <ocmt/dataset.hpp>
#include <ocmt/downweight.hpp>
#include <ocmt/lasso.hpp>
#include <ocmt/ocmt_select.hpp>

namespace ocmt {

/// LS of y on W = [Z, X_selected]; coefficients ordered as W's columns.
inline VectorXd ls_estimate(const TimeSeriesDataset& data, const SelectionResult& selection)
{
    if (static_cast<Index>(selection.included.size()) != data.N()) {
        throw DimensionError("ls_estimate: selection length differs from N");
    }
    const auto sel = selection.selected_indices();
    MatrixXd w(data.T(), data.m() + static_cast<Index>(sel.size()));
    w.leftCols(data.m()) = data.Z();
    for (std::size_t j = 0; j < sel.size(); ++j) w.col(data.m() + static_cast<Index>(j)) = data.X().col(sel[j]);
    if (w.cols() == 0) return VectorXd(0);
    if (w.cols() > data.T()) throw RankError("ls_estimate: more regressors than observations", static_cast<std::size_t>(data.T()));
    if (const Index bad = detail::first_dependent_column(w); bad >= 0) {
        std::string name = bad < data.m() ? "Z column " + std::to_string(bad)
                                          : "X column " + std::to_string(sel[static_cast<std::size_t>(bad - data.m())]);
        throw RankError("ls_estimate: post-selection design is rank deficient at " + name,
                        static_cast<std::size_t>(bad));
    }
    return w.colPivHouseholderQr().solve(data.y());
}

/// Inner product of coefficients with [z_next, x_next_selected].
inline double forecast_one_step(const VectorXd& coefficients, const VectorXd& z_next,
                                const VectorXd& x_next_selected)
{
    if (coefficients.size() != z_next.size() + x_next_selected.size()) {
        throw DimensionError("forecast_one_step: coefficient length " +
                             std::to_string(coefficients.size()) + " != " +
                             std::to_string(z_next.size() + x_next_selected.size()));
    }
    return coefficients.head(z_next.size()).dot(z_next) +
           coefficients.tail(x_next_selected.size()).dot(x_next_selected);
}

enum class Protocol {
    kNoWeighting,
    kSelectUnweightedEstimateWeighted,
    kSelectAndEstimateWeighted,
};

inline const char* to_string(Protocol p)
{
    switch (p) {
    case Protocol::kNoWeighting: return "none";
    case Protocol::kSelectUnweightedEstimateWeighted: return "est-weighted";
    case Protocol::kSelectAndEstimateWeighted: return "both-weighted";
    }
    return "?";
}

/// How coefficients for forecasting are obtained once a model is selected:
/// post-selection LS, or the selector's own (penalized / boosted) fit.
enum class Estimator { kLeastSquares, kNative };

/// Selections already computed on one dataset, keyed by selector and
/// lambda, so that several protocols or estimators on the same draw share
/// work. A cache must only ever see one base dataset.
class SelectionCache
{
public:
    const SelectionResult* find(SelectorTag tag, double lambda) const
    {
        const auto it = selections_.find({static_cast<int>(tag), lambda});
        return it == selections_.end() ? nullptr : &it->second;
    }
    const SelectionResult& store(SelectorTag tag, double lambda, SelectionResult s)
    {
        return selections_.insert_or_assign({static_cast<int>(tag), lambda}, std::move(s)).first->second;
    }
    const LassoOutcome* find_lasso(double lambda) const
    {
        const auto it = lasso_.find(lambda);
        return it == lasso_.end() ? nullptr : &it->second;
    }
    const LassoOutcome& store_lasso(double lambda, LassoOutcome o)
    {
        return lasso_.insert_or_assign(lambda, std::move(o)).first->second;
    }

private:
    std::map<std::pair<int, double>, SelectionResult> selections_;
    std::map<double, LassoOutcome> lasso_;
};

/// A selector with its tuning, runnable on any dataset.
struct SelectorSpec
{
    SelectorTag tag = SelectorTag::kOcmt;
    OcmtConfig ocmt;
    LassoConfig lasso;
    BoostConfig boost;
    /// True signal indices, used by the oracle.
    std::vector<Index> oracle_indices;

    SelectionResult select(const TimeSeriesDataset& data) const
    {
        switch (tag) {
        case SelectorTag::kOcmt: return ocmt_select(data, ocmt);
        case SelectorTag::kLasso: return lasso_select(data, lasso);
        case SelectorTag::kAdaptiveLasso: return adaptive_lasso_select(data, lasso);
        case SelectorTag::kBoosting: return boost_select(data, boost);
        case SelectorTag::kOracle: return fixed_selection(data.N(), oracle_indices);
        }
        throw DomainError("unknown selector");
    }

    /// As select(), memoized in `cache` under `lambda` (the weighting that
    /// produced `data` from the cache's base dataset).
    const SelectionResult& select(const TimeSeriesDataset& data, double lambda, SelectionCache& cache) const
    {
        if (const auto* hit = cache.find(tag, lambda)) return *hit;
        if (tag == SelectorTag::kLasso || tag == SelectorTag::kAdaptiveLasso) {
            const LassoOutcome* first = cache.find_lasso(lambda);
            if (first == nullptr) first = &cache.store_lasso(lambda, lasso_run(data, lasso));
            if (tag == SelectorTag::kLasso) return cache.store(tag, lambda, first->selection);
            return cache.store(tag, lambda, adaptive_lasso_select(data, *first, lasso));
        }
        return cache.store(tag, lambda, select(data));
    }
};

/// Regressors of the period being forecast (unweighted).
struct NextObservation
{
    VectorXd z;
    VectorXd x;
    std::optional<double> realized;
};

struct LambdaForecast
{
    double lambda = 1.0;
    double forecast = 0.0;
    SelectionResult selection;
    /// Over [Z, selected X].
    VectorXd coefficients;
};

struct ForecastRecord
{
    double point_forecast = 0.0;
    std::optional<double> realized;
    WeightLabel weights = WeightLabel::kNone;
    Protocol protocol = Protocol::kNoWeighting;
    Estimator estimator = Estimator::kLeastSquares;
    SelectorTag selector_tag = SelectorTag::kOcmt;
    std::vector<LambdaForecast> per_lambda;

    /// Coefficients of the last grid point (lambda = 1 for the standard grids).
    const VectorXd& estimation_coefficients() const { return per_lambda.back().coefficients; }
};

namespace detail {

inline VectorXd native_coefficients(const TimeSeriesDataset& data, const SelectionResult& s)
{
    if (!s.coefficients || !s.conditioning_coefficients) {
        throw DomainError(std::string("native estimation is not available for ") + to_string(s.selector_tag));
    }
    const auto sel = s.selected_indices();
    VectorXd out(data.m() + static_cast<Index>(sel.size()));
    out.head(data.m()) = *s.conditioning_coefficients;
    for (std::size_t j = 0; j < sel.size(); ++j) out(data.m() + static_cast<Index>(j)) = (*s.coefficients)(sel[j]);
    return out;
}

} // namespace detail

/**
 * Select / estimate / forecast for every lambda of the scheme and average the
 * forecasts with equal weights.
 *
 *  - kNoWeighting: the grid is ignored, one unweighted run.
 *  - kSelectUnweightedEstimateWeighted: one selection on the unweighted data,
 *    then LS on each lambda-weighted sample.
 *  - kSelectAndEstimateWeighted: selection and estimation both on the
 *    lambda-weighted sample.
 *
 * With Estimator::kNative the selector's own coefficients are used, which
 * only makes sense when selection and estimation share the sample.
 */
inline ForecastRecord grid_forecast(const TimeSeriesDataset& data, const NextObservation& next,
                                    Protocol protocol, const SelectorSpec& selector,
                                    const WeightScheme& scheme,
                                    Estimator estimator = Estimator::kLeastSquares,
                                    SelectionCache* cache = nullptr)
{
    SelectionCache local;
    SelectionCache& memo = cache != nullptr ? *cache : local;
    if (next.z.size() != data.m() || next.x.size() != data.N()) {
        throw DimensionError("grid_forecast: next observation has wrong dimensions");
    }
    if (estimator == Estimator::kNative && protocol == Protocol::kSelectUnweightedEstimateWeighted) {
        throw DomainError("grid_forecast: native estimation cannot separate selection and estimation samples");
    }
    ForecastRecord rec;
    rec.realized = next.realized;
    rec.protocol = protocol;
    rec.estimator = estimator;
    rec.selector_tag = selector.tag;
    const WeightScheme grid = protocol == Protocol::kNoWeighting ? standard_grid(WeightLabel::kNone) : scheme;
    rec.weights = grid.label();

    std::optional<SelectionResult> unweighted;
    if (protocol == Protocol::kSelectUnweightedEstimateWeighted) unweighted = selector.select(data, 1.0, memo);

    double sum = 0.0;
    for (double lambda : grid.grid()) {
        try {
            const TimeSeriesDataset sample = lambda == 1.0 ? data : apply_weights(data, lambda).as_dataset();
            LambdaForecast lf;
            lf.lambda = lambda;
            lf.selection = unweighted ? *unweighted : selector.select(sample, lambda, memo);
            lf.coefficients = estimator == Estimator::kNative
                                  ? detail::native_coefficients(sample, lf.selection)
                                  : ls_estimate(sample, lf.selection);
            const auto sel = lf.selection.selected_indices();
            lf.forecast = forecast_one_step(lf.coefficients, next.z, next.x(sel));
            sum += lf.forecast;
            rec.per_lambda.push_back(std::move(lf));
        } catch (const RankError& e) {
            throw RankError("lambda = " + std::to_string(lambda) + ": " + e.what(), e.column());
        } catch (const Error& e) {
            throw Error("lambda = " + std::to_string(lambda) + ": " + e.what());
        }
    }
    rec.point_forecast = sum / static_cast<double>(rec.per_lambda.size());
    return rec;
}

} // namespace ocmt
