#include <gtest/gtest.h>

#include <random>

#include <ocmt/boosting.hpp>

using namespace ocmt;

namespace {

MatrixXd gaussian(Index rows, Index cols, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
    }
    return m;
}

// Boosting with explicit T x T operators: B_m = I - prod (I - nu H_s).
struct DenseBoost
{
    std::vector<Index> selected;
    std::vector<double> bic;
    std::vector<double> trace;
    Index best = 0;
    VectorXd fitted;
};

DenseBoost dense_boost(const VectorXd& y, const MatrixXd& x, double nu, Index m_max)
{
    const Index t = y.size();
    const double lt = std::log(static_cast<double>(t));
    MatrixXd p = MatrixXd::Identity(t, t);
    DenseBoost out;
    double best = std::numeric_limits<double>::infinity();
    std::vector<MatrixXd> fits;
    for (Index m = 1; m <= m_max; ++m) {
        const VectorXd e = p * y;
        Index s = 0;
        double rss = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < x.cols(); ++i) {
            const double d = x.col(i).dot(e) / x.col(i).squaredNorm();
            const double r = (e - d * x.col(i)).squaredNorm();
            if (r < rss) {
                rss = r;
                s = i;
            }
        }
        const MatrixXd h = x.col(s) * x.col(s).transpose() / x.col(s).squaredNorm();
        p = (MatrixXd::Identity(t, t) - nu * h) * p;
        const MatrixXd b = MatrixXd::Identity(t, t) - p;
        const double sigma2 = (y - b * y).squaredNorm() / static_cast<double>(t);
        const double bic = std::log(sigma2) + 1.0 + b.trace() * lt / static_cast<double>(t);
        out.selected.push_back(s);
        out.bic.push_back(bic);
        out.trace.push_back(b.trace());
        if (bic < best) {
            best = bic;
            out.best = m;
            out.fitted = b * y;
        }
    }
    return out;
}

} // namespace

TEST(BaseLearner, PicksSmallestResidualAndLowestIndexOnTies)
{
    MatrixXd x(4, 3);
    x << 1, 0, 1,
         0, 1, 0,
         0, 0, 0,
         0, 0, 0;
    VectorXd e(4);
    e << 2, 1, 0, 0;
    const auto fit = base_learner(e, x);
    EXPECT_EQ(fit.index, 0);
    EXPECT_DOUBLE_EQ(fit.delta, 2.0);
    EXPECT_DOUBLE_EQ(fit.rss, 1.0);

    MatrixXd zero = MatrixXd::Zero(4, 1);
    EXPECT_THROW((void)base_learner(e, zero), DegenerateError);
    EXPECT_THROW((void)base_learner(e, MatrixXd(4, 0)), DimensionError);
}

TEST(Boosting, MatchesDenseOperatorOracle)
{
    const Index t = 60;
    MatrixXd x = gaussian(t, 8, 1);
    VectorXd y = 1.2 * x.col(1) - 0.8 * x.col(5) + gaussian(t, 1, 2).col(0);
    const TimeSeriesDataset data(y, x, MatrixXd::Ones(t, 1));
    BoostConfig cfg;
    cfg.m_max = 80;
    const auto out = boost_run(data, cfg);

    const VectorXd yf = y.array() - y.mean();
    MatrixXd xf = x.rowwise() - x.colwise().mean();
    for (Index j = 0; j < xf.cols(); ++j) xf.col(j).normalize();
    const auto oracle = dense_boost(yf, xf, cfg.nu, cfg.m_max);

    ASSERT_EQ(out.trace.selected.size(), oracle.selected.size());
    EXPECT_EQ(out.trace.selected, oracle.selected);
    for (std::size_t m = 0; m < oracle.bic.size(); ++m) {
        EXPECT_NEAR(out.trace.bic[m], oracle.bic[m], 1e-9) << m;
        EXPECT_NEAR(out.trace.trace_b[m], oracle.trace[m], 1e-9) << m;
    }
    EXPECT_EQ(out.trace.M, oracle.best);
    EXPECT_LT((out.trace.fitted - oracle.fitted).cwiseAbs().maxCoeff(), 1e-9);

    // Coefficients on the original scale reproduce the fitted values.
    const VectorXd fitted = (x.rowwise() - x.colwise().mean()) * *out.selection.coefficients;
    EXPECT_LT((fitted - oracle.fitted).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(out.selection.included[1]);
    EXPECT_TRUE(out.selection.included[5]);
    EXPECT_TRUE(out.selection.consistent());
    EXPECT_NEAR((*out.selection.conditioning_coefficients)(0),
                (y - x * *out.selection.coefficients).mean(), 1e-10);
}

TEST(Boosting, RssFallsAndTraceGrows)
{
    const auto data = TimeSeriesDataset(gaussian(50, 1, 3).col(0), gaussian(50, 5, 4), MatrixXd::Ones(50, 1));
    BoostConfig cfg;
    cfg.m_max = 40;
    const auto out = boost_run(data, cfg);
    double previous = 0.0;
    for (std::size_t m = 0; m < out.trace.trace_b.size(); ++m) {
        EXPECT_GT(out.trace.trace_b[m], previous - 1e-12);
        EXPECT_LE(out.trace.trace_b[m], 5.0 + 1e-9);
        previous = out.trace.trace_b[m];
        if (m > 0) EXPECT_LE(out.trace.rss[m], out.trace.rss[m - 1] * (1 + 1e-12));
    }
    EXPECT_NEAR(out.trace.trace_b.front(), cfg.nu, 1e-12);
}

TEST(Boosting, FullStepOnOrthonormalDesignIsForwardSelection)
{
    const MatrixXd q = gaussian(30, 4, 5).householderQr().householderQ() * MatrixXd::Identity(30, 4);
    VectorXd y = 5.0 * q.col(2) + 3.0 * q.col(0) + 0.01 * q.col(3);
    const auto data = TimeSeriesDataset(y, q, MatrixXd(30, 0));
    BoostConfig cfg;
    cfg.nu = 1.0;
    cfg.m_max = 3;
    const auto out = boost_run(data, cfg);
    EXPECT_EQ(out.trace.selected, (std::vector<Index>{2, 0, 3}));
    EXPECT_NEAR(out.trace.step[0], 5.0, 1e-12);
    EXPECT_NEAR(out.trace.step[1], 3.0, 1e-12);
    EXPECT_NEAR(out.trace.trace_b[2], 3.0, 1e-12);
}

TEST(Boosting, NullDesignSelectsFew)
{
    double fpr = 0.0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
        const auto data = TimeSeriesDataset(gaussian(100, 1, 100 + r).col(0), gaussian(100, 20, 200 + r),
                                            MatrixXd::Ones(100, 1));
        fpr += static_cast<double>(boost_select(data).count()) / 20.0;
    }
    EXPECT_LT(fpr / reps, 0.2);
}

TEST(Boosting, DegenerateColumnsAndValidation)
{
    MatrixXd x = gaussian(40, 3, 6);
    x.col(1).setConstant(2.0);
    const VectorXd y = x.col(0) + gaussian(40, 1, 7).col(0);
    const auto s = boost_select(TimeSeriesDataset(y, x, MatrixXd::Ones(40, 1)));
    EXPECT_FALSE(s.included[1]);
    EXPECT_TRUE(s.included[0]);

    MatrixXd flat = MatrixXd::Constant(40, 2, 1.0);
    const auto empty = boost_run(TimeSeriesDataset(y, flat, MatrixXd::Ones(40, 1)));
    EXPECT_EQ(empty.selection.count(), 0);
    EXPECT_EQ(empty.selection.diagnostics.count("no_usable_columns"), 1u);

    BoostConfig bad;
    bad.nu = 0.0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad.nu = 1.5;
    EXPECT_THROW(bad.validate(), DomainError);
    bad.nu = 0.5;
    bad.m_max = 0;
    EXPECT_THROW(bad.validate(), DomainError);
}
