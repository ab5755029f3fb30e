#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include <ocmt/dataset.hpp>
#include <ocmt/postselect.hpp>
#include <ocmt/random.hpp>

namespace ocmt {

enum class FitTarget { kLow, kHigh };

inline double r_squared_target(FitTarget f) { return f == FitTarget::kLow ? 0.30 : 0.50; }
inline const char* to_string(FitTarget f) { return f == FitTarget::kLow ? "low" : "high"; }

/// One Monte Carlo experiment: y_t = d_t + rho_{y,t} y_{t-1} + sum_j beta_jt x_jt + tau_u u_t
/// with the first k of N covariates as signals.
struct DgpConfig
{
    Index N = 20;
    Index T = 100;
    Index k = 4;
    bool dynamic = false;
    bool instability = false;
    FitTarget fit = FitTarget::kLow;
    Index R = 2000;
    std::uint64_t master_seed = 0;

    void validate() const
    {
        if (k != 4) throw DomainError("dgp: the design has exactly k = 4 signals");
        if (N < k) throw DomainError("dgp: need N >= k");
        if (T < 20) throw DomainError("dgp: need T >= 20");
        if (R < 1) throw DomainError("dgp: need R >= 1");
    }
};

/// Deterministic paths for t = 1..T+1 (row t-1); the forecast period T+1
/// stays in the final regime.
struct BreakSchedule
{
    MatrixXd b;      // slope means, (T+1) x 4
    MatrixXd mu;     // signal means, (T+1) x 4
    VectorXd rho_y;  // autoregressive coefficient of y
    VectorXd r;      // correlation parameter of the covariates
};

/// Nearest integer of a positive ratio.
inline Index nearest_integer(double v) { return static_cast<Index>(std::lround(v)); }

inline BreakSchedule make_break_schedule(const DgpConfig& cfg)
{
    const Index rows = cfg.T + 1;
    const double t = static_cast<double>(cfg.T);
    const Index third = nearest_integer(t / 3.0);
    const Index two_thirds = nearest_integer(2.0 * t / 3.0);
    const Index half = nearest_integer(t / 2.0);

    BreakSchedule s{MatrixXd::Ones(rows, 4), MatrixXd::Ones(rows, 4), VectorXd::Zero(rows),
                    VectorXd::Zero(rows)};
    for (Index i = 0; i < rows; ++i) {
        const Index period = i + 1;
        s.r(i) = period <= half ? 0.9 : 0.4;
        if (cfg.instability) {
            const double b12 = period <= third ? 2.0 : (period <= two_thirds ? 0.0 : 1.0);
            const double b34 = period <= half ? 0.5 : 1.5;
            const double m12 = period <= third ? 0.6 : (period <= two_thirds ? 1.5 : 0.9);
            const double m34 = period <= half ? 0.9 : 1.1;
            s.b.row(i) << b12, b12, b34, b34;
            s.mu.row(i) << m12, m12, m34, m34;
            if (cfg.dynamic) s.rho_y(i) = period <= half ? 0.2 : 0.4;
        } else if (cfg.dynamic) {
            s.rho_y(i) = 0.3;
        }
    }
    return s;
}

/// Heterogeneous AR/GARCH parameters of the covariate processes, plus the
/// fixed parameters of u and eta.
struct GarchParams
{
    VectorXd rho_eps;
    VectorXd a1_eps;
    VectorXd a2_eps;
    double a1_u = 0.2;
    double a2_u = 0.75;
    double rho_eta = 0.5;
    double a1_eta = 0.2;
    double a2_eta = 0.75;

    static GarchParams draw(Index n, Rng& rng)
    {
        GarchParams p{VectorXd(n), VectorXd(n), VectorXd(n)};
        for (Index i = 0; i < n; ++i) {
            p.rho_eps(i) = rng.uniform(0.0, 0.95);
            p.a1_eps(i) = rng.uniform(0.0, 0.2);
            p.a2_eps(i) = rng.uniform(0.6, 0.75);
        }
        return p;
    }
};

/// GARCH(1,1) innovations e_1..e_n with unit unconditional variance,
/// started from sigma_0^2 = 1 and e_0 ~ N(0, 1).
inline VectorXd garch_innovations(Index n, double a1, double a2, Rng& rng)
{
    const double omega = 1.0 - a1 - a2;
    double e_prev = rng.normal();
    double s2 = 1.0;
    VectorXd e(n);
    for (Index t = 0; t < n; ++t) {
        s2 = omega + a1 * e_prev * e_prev + a2 * s2;
        e_prev = std::sqrt(s2) * rng.normal();
        e(t) = e_prev;
    }
    return e;
}

/// AR(1) with GARCH(1,1) innovations scaled by sqrt(1 - rho^2), from a
/// N(0, 1) starting value; returns periods 1..n.
inline VectorXd ar_garch_path(Index n, double rho, double a1, double a2, Rng& rng)
{
    double level = rng.normal();
    const VectorXd e = garch_innovations(n, a1, a2, rng);
    const double scale = std::sqrt(1.0 - rho * rho);
    VectorXd out(n);
    for (Index t = 0; t < n; ++t) {
        level = rho * level + scale * e(t);
        out(t) = level;
    }
    return out;
}

/// Symmetric square root of the N x N matrix with entries r^|i-j|.
inline MatrixXd correlation_root(Index n, double r)
{
    if (!(std::abs(r) < 1.0)) throw DomainError("correlation_root: need |r| < 1");
    MatrixXd c(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) c(i, j) = std::pow(r, static_cast<double>(std::abs(i - j)));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
    const VectorXd ev = es.eigenvalues();
    if (!(ev.minCoeff() > 0.0)) throw DomainError("correlation_root: matrix is not positive definite");
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// Square roots for the two correlation regimes, keyed by r.
struct CorrelationRoots
{
    double r_first = 0.9;
    double r_second = 0.4;
    MatrixXd first;
    MatrixXd second;

    static CorrelationRoots make(Index n)
    {
        CorrelationRoots out;
        out.first = correlation_root(n, out.r_first);
        out.second = correlation_root(n, out.r_second);
        return out;
    }

    const MatrixXd& at(double r) const
    {
        if (r == r_first) return first;
        if (r == r_second) return second;
        throw DomainError("correlation roots: no root cached for r = " + std::to_string(r));
    }
};

/// (T+1) x N covariates x_t = R_t^{1/2} eps_t.
inline MatrixXd gen_covariates(const DgpConfig& cfg, const BreakSchedule& schedule,
                               const GarchParams& params, const CorrelationRoots& roots, Rng& rng)
{
    const Index rows = cfg.T + 1;
    MatrixXd eps(rows, cfg.N);
    for (Index i = 0; i < cfg.N; ++i) {
        eps.col(i) = ar_garch_path(rows, params.rho_eps(i), params.a1_eps(i), params.a2_eps(i), rng);
    }
    MatrixXd x(rows, cfg.N);
    for (Index t = 0; t < rows; ++t) {
        x.row(t).noalias() = eps.row(t) * roots.at(schedule.r(t));  // roots are symmetric
    }
    return x;
}

/// (T+1) x 4 slopes: b_jt + tau_eta_j eta_jt under instability, else ones.
inline MatrixXd gen_coefficients(const DgpConfig& cfg, const BreakSchedule& schedule,
                                 const GarchParams& params, const std::array<double, 4>& tau_eta,
                                 Rng& rng)
{
    const Index rows = cfg.T + 1;
    if (!cfg.instability) return MatrixXd::Ones(rows, 4);
    MatrixXd beta = schedule.b;
    for (Index j = 0; j < 4; ++j) {
        beta.col(j) += tau_eta[static_cast<std::size_t>(j)] *
                       ar_garch_path(rows, params.rho_eta, params.a1_eta, params.a2_eta, rng);
    }
    return beta;
}

/**
 * tau_eta_j such that T^{-1} sum b_jt^2 / T^{-1} sum E[beta_jt^2] = share.
 * E[eta_t] and E[eta_t^2] are estimated from `draws` simulated paths; the
 * ratio equation is then a quadratic in tau solved in closed form.
 */
inline std::array<double, 4> calibrate_tau_eta(const DgpConfig& cfg, const BreakSchedule& schedule,
                                               std::uint64_t seed, Index draws = 10000,
                                               double share = 0.95)
{
    const Index t = cfg.T;
    VectorXd m1 = VectorXd::Zero(t);
    VectorXd m2 = VectorXd::Zero(t);
    Rng rng(seed);
    const GarchParams fixed{};
    for (Index d = 0; d < draws; ++d) {
        const VectorXd eta = ar_garch_path(t, fixed.rho_eta, fixed.a1_eta, fixed.a2_eta, rng);
        m1 += eta;
        m2 += eta.cwiseAbs2();
    }
    m1 /= static_cast<double>(draws);
    m2 /= static_cast<double>(draws);
    if (!m1.allFinite() || !m2.allFinite()) throw Error("calibrate_tau_eta: non-finite simulated moments");

    std::array<double, 4> tau{};
    for (Index j = 0; j < 4; ++j) {
        const VectorXd b = schedule.b.col(j).head(t);
        const double sb2 = b.squaredNorm();
        const double s1 = b.dot(m1);
        const double s2 = m2.sum();
        const double c = sb2 * (1.0 / share - 1.0);
        tau[static_cast<std::size_t>(j)] = (-s1 + std::sqrt(s1 * s1 + s2 * c)) / s2;
    }
    return tau;
}

/// One simulated draw over periods 0..T+1.
struct SimulatedSample
{
    double y0 = 0.0;
    VectorXd y;  // periods 1..T+1
    MatrixXd X;  // periods 1..T+1
};

/// The ingredients of y that do not depend on tau_u.
struct SampleParts
{
    MatrixXd X;
    MatrixXd beta;
    VectorXd d;
    VectorXd u;
};

inline SampleParts draw_sample_parts(const DgpConfig& cfg, const BreakSchedule& schedule,
                                     const CorrelationRoots& roots,
                                     const std::array<double, 4>& tau_eta, Rng& rng)
{
    const GarchParams params = GarchParams::draw(cfg.N, rng);
    SampleParts p;
    p.X = gen_covariates(cfg, schedule, params, roots, rng);
    const Index rows = cfg.T + 1;
    {
        // u_0 ~ N(0,1), sigma_{u,0}^2 = 1
        p.u = garch_innovations(rows, params.a1_u, params.a2_u, rng);
    }
    p.beta = gen_coefficients(cfg, schedule, params, tau_eta, rng);
    if (cfg.instability) {
        p.d = (p.beta.cwiseProduct(schedule.mu)).rowwise().sum();
    } else {
        p.d = VectorXd::Constant(rows, 4.0);
    }
    return p;
}

inline SimulatedSample assemble_sample(const SampleParts& p, const BreakSchedule& schedule,
                                       double tau_u)
{
    const Index rows = p.X.rows();
    SimulatedSample s;
    s.y0 = p.d(0) / (1.0 - schedule.rho_y(0));
    s.X = p.X;
    s.y.resize(rows);
    double prev = s.y0;
    for (Index t = 0; t < rows; ++t) {
        const double signal = p.beta.row(t).dot(p.X.row(t).head(4));
        prev = p.d(t) + schedule.rho_y(t) * prev + signal + tau_u * p.u(t);
        s.y(t) = prev;
    }
    return s;
}

/// Conditioning set: intercept, plus y_{t-1} in dynamic designs.
inline Index conditioning_width(bool dynamic) { return dynamic ? 2 : 1; }

/// Estimation dataset over periods 1..T and the regressors of period T+1.
struct FitSplit
{
    TimeSeriesDataset data;
    NextObservation next;
};

inline FitSplit split_sample(const SimulatedSample& s, bool dynamic)
{
    const Index t = s.y.size() - 1;
    const Index m = conditioning_width(dynamic);
    MatrixXd z(t, m);
    z.col(0).setOnes();
    if (dynamic) {
        z(0, 1) = s.y0;
        z.col(1).tail(t - 1) = s.y.head(t - 1);
    }
    VectorXd z_next(m);
    z_next(0) = 1.0;
    if (dynamic) z_next(1) = s.y(t - 1);
    NextObservation next{std::move(z_next), s.X.row(t).transpose(), s.y(t)};
    return {TimeSeriesDataset(s.y.head(t), s.X.topRows(t), std::move(z)), std::move(next)};
}

/// Calibration regressors [1, signals, (y_{t-1})] over periods 1..T.
inline MatrixXd calibration_design(const SimulatedSample& s, Index t, bool dynamic)
{
    const Index cols = 1 + 4 + (dynamic ? 1 : 0);
    MatrixXd w(t, cols);
    w.col(0).setOnes();
    w.middleCols(1, 4) = s.X.topLeftCorner(t, 4);
    if (dynamic) {
        w(0, 5) = s.y0;
        w.col(5).tail(t - 1) = s.y.head(t - 1);
    }
    return w;
}

/// Sample R^2 of y on the calibration regressors within one draw.
inline double calibration_r_squared(const SimulatedSample& s, Index t, bool dynamic)
{
    const MatrixXd w = calibration_design(s, t, dynamic);
    const VectorXd y = s.y.head(t);
    const VectorXd beta = w.colPivHouseholderQr().solve(y);
    const double ssr = (y - w * beta).squaredNorm();
    const double sst = (y.array() - y.mean()).matrix().squaredNorm();
    return 1.0 - ssr / sst;
}

struct TauCalibration
{
    double tau_u = 0.0;
    double r_squared = 0.0;
    int iterations = 0;
    std::array<double, 4> tau_eta{};
};

/**
 * Population R^2 of the linear projection of y on the calibration
 * regressors, estimated by one regression on the batch stacked over draws
 * and periods 1..T (so it carries no small-sample upward bias).
 */
inline double batch_r_squared(const std::vector<SampleParts>& batch, const BreakSchedule& schedule,
                              double tau_u, Index t, bool dynamic)
{
    const Index cols = 1 + 4 + (dynamic ? 1 : 0);
    MatrixXd wtw = MatrixXd::Zero(cols, cols);
    VectorXd wty = VectorXd::Zero(cols);
    double yty = 0.0, ysum = 0.0;
    for (const auto& p : batch) {
        const SimulatedSample s = assemble_sample(p, schedule, tau_u);
        const MatrixXd w = calibration_design(s, t, dynamic);
        const VectorXd y = s.y.head(t);
        wtw.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
        wty.noalias() += w.transpose() * y;
        yty += y.squaredNorm();
        ysum += y.sum();
    }
    wtw.triangularView<Eigen::StrictlyUpper>() = wtw.transpose();
    const double n = static_cast<double>(t) * static_cast<double>(batch.size());
    const VectorXd beta = wtw.ldlt().solve(wty);
    const double ssr = yty - beta.dot(wty);
    const double sst = yty - ysum * ysum / n;
    return 1.0 - ssr / sst;
}

/// Which variant of an experiment tau_u is calibrated on; the other
/// variant reuses the value. kStable reproduces the reference tables'
/// noise levels, kInstability follows the design text literally.
enum class CalibrationDesign
{
    kInstability,
    kStable,
};

inline const char* to_string(CalibrationDesign d)
{
    return d == CalibrationDesign::kStable ? "stable" : "instability";
}

struct CalibrationSettings
{
    CalibrationDesign design = CalibrationDesign::kStable;
    Index batch = 1000;
    Index eta_draws = 10000;
    int max_iterations = 60;
    /// Bisection stops once the bracket's relative width is below this.
    double relative_width = 1e-6;
};

/**
 * tau_u of one variant of cfg (same N, T, dynamics and fit; see
 * CalibrationSettings::design), found by bisection in log tau on the pooled
 * R^2 of a fixed batch of simulated samples (common random numbers across
 * trial values). tau_eta always comes from the instability variant.
 */
inline TauCalibration calibrate_tau_u(const DgpConfig& cfg, std::uint64_t seed,
                                      const CalibrationSettings& settings = {})
{
    cfg.validate();
    DgpConfig unstable = cfg;
    unstable.instability = true;
    const BreakSchedule schedule = make_break_schedule(unstable);
    const CorrelationRoots roots = CorrelationRoots::make(cfg.N);
    TauCalibration out;
    out.tau_eta = calibrate_tau_eta(unstable, schedule, derive_seed(seed, 1, 0), settings.eta_draws);

    DgpConfig design = unstable;
    design.instability = settings.design == CalibrationDesign::kInstability;
    const BreakSchedule design_schedule = make_break_schedule(design);
    std::vector<SampleParts> batch;
    batch.reserve(static_cast<std::size_t>(settings.batch));
    for (Index b = 0; b < settings.batch; ++b) {
        Rng rng(derive_seed(seed, 2, static_cast<std::uint64_t>(b)));
        batch.push_back(draw_sample_parts(design, design_schedule, roots, out.tau_eta, rng));
    }
    const double target = r_squared_target(cfg.fit);
    auto r2 = [&](double tau) { return batch_r_squared(batch, design_schedule, tau, cfg.T, cfg.dynamic); };

    double lo = 1.0, hi = 1.0;
    double r_lo = r2(lo), r_hi = r_lo;
    for (int i = 0; i < settings.max_iterations && r_lo < target; ++i) r_lo = r2(lo *= 0.5);
    for (int i = 0; i < settings.max_iterations && r_hi > target; ++i) r_hi = r2(hi *= 2.0);
    if (!(r_lo >= target && r_hi <= target)) {
        throw Error("calibrate_tau_u: could not bracket R^2 = " + std::to_string(target) +
                    " (tau in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "], R^2 in [" + std::to_string(r_hi) + ", " + std::to_string(r_lo) + "])");
    }
    int it = 0;
    while (it < settings.max_iterations && hi / lo - 1.0 > settings.relative_width) {
        ++it;
        const double mid = std::sqrt(lo * hi);
        if (r2(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.tau_u = std::sqrt(lo * hi);
    out.r_squared = r2(out.tau_u);
    out.iterations = it;
    return out;
}

/// One replication's draw under fixed calibration constants.
inline SimulatedSample simulate_replication(const DgpConfig& cfg, const BreakSchedule& schedule,
                                            const CorrelationRoots& roots,
                                            const TauCalibration& calib, Rng& rng)
{
    return assemble_sample(draw_sample_parts(cfg, schedule, roots, calib.tau_eta, rng), schedule,
                           calib.tau_u);
}

} // namespace ocmt
