#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <ocmt/dataset.hpp>

namespace ocmt {

/// Observations scaled by lambda^(T-t), t = 1..T; the last row is unscaled.
struct WeightedDataset
{
    double lambda = 1.0;
    VectorXd wy;
    MatrixXd wX;
    MatrixXd wZ;

    /// The weighted observations as an ordinary dataset, ready for any selector.
    TimeSeriesDataset as_dataset() const { return TimeSeriesDataset(wy, wX, wZ); }
};

/// lambda^(T-t) for t = 1..T.
inline VectorXd observation_weights(Index t, double lambda)
{
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw DomainError("down-weighting coefficient must lie in (0, 1], got " +
                          std::to_string(lambda));
    }
    VectorXd w(t);
    for (Index r = 0; r < t; ++r) w(r) = std::pow(lambda, static_cast<double>(t - 1 - r));
    return w;
}

inline WeightedDataset apply_weights(const TimeSeriesDataset& data, double lambda)
{
    const VectorXd w = observation_weights(data.T(), lambda);
    WeightedDataset out;
    out.lambda = lambda;
    if (lambda == 1.0) {
        out.wy = data.y();
        out.wX = data.X();
        out.wZ = data.Z();
        return out;
    }
    out.wy = data.y().cwiseProduct(w);
    out.wX = w.asDiagonal() * data.X();
    out.wZ = w.asDiagonal() * data.Z();
    return out;
}

/// The standard grids: light {0.975, ..., 1}, heavy {0.95, ..., 1}, none {1}.
inline WeightScheme standard_grid(WeightLabel label)
{
    switch (label) {
    case WeightLabel::kLight:
        return WeightScheme({0.975, 0.98, 0.985, 0.99, 0.995, 1.0}, WeightLabel::kLight);
    case WeightLabel::kHeavy:
        return WeightScheme({0.95, 0.96, 0.97, 0.98, 0.99, 1.0}, WeightLabel::kHeavy);
    case WeightLabel::kNone:
        return WeightScheme({1.0}, WeightLabel::kNone);
    case WeightLabel::kCustom:
        break;
    }
    throw DomainError("standard_grid: CUSTOM has no standard grid");
}

} // namespace ocmt
