#include <gtest/gtest.h>

#include <sstream>

#include <ocmt/csv.hpp>
#include <ocmt/dgp.hpp>

using namespace ocmt;

namespace {

CsvTable table_from(const std::string& text)
{
    std::istringstream in(text);
    return parse_csv(in);
}

} // namespace

TEST(Csv, ThreeRowsWithIntercept)
{
    const auto ds = dataset_from_table(table_from("y,a,b\n1,2,3\n4,5,6.5\n7,8,9\n"), "y", {}, true);
    EXPECT_EQ(ds.data.T(), 3);
    EXPECT_EQ(ds.data.N(), 2);
    EXPECT_EQ(ds.data.m(), 1);
    EXPECT_EQ(ds.data.Z(), MatrixXd::Ones(3, 1));
    EXPECT_EQ(ds.x_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_DOUBLE_EQ(ds.data.X()(1, 1), 6.5);
    EXPECT_DOUBLE_EQ(ds.data.y()(2), 7.0);
}

TEST(Csv, ConditioningColumnsFollowIntercept)
{
    const auto ds = dataset_from_table(table_from("a,y,c,b\n1,2,3,4\n5,6,7,8\n9,10,11,13\n2,2,2,1\n"),
                                       "y", {"c"}, true);
    EXPECT_EQ(ds.data.m(), 2);
    EXPECT_DOUBLE_EQ(ds.data.Z()(1, 1), 7.0);
    EXPECT_EQ(ds.x_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_DOUBLE_EQ(ds.data.X()(2, 1), 13.0);
}

TEST(Csv, ConstantCovariateLoadsAndIsFlagged)
{
    const auto ds = dataset_from_table(table_from("y,a,k\n1,2,5\n2,1,5\n3,7,5\n4,3,5\n"), "y", {}, true);
    EXPECT_FALSE(ds.data.zero_variance()[0]);
    EXPECT_TRUE(ds.data.zero_variance()[1]);
}

TEST(Csv, MissingColumnIsNamed)
{
    try {
        (void)dataset_from_table(table_from("y,a\n1,2\n3,4\n5,6\n"), "target", {}, false);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("target"), std::string::npos);
    }
}

TEST(Csv, NonNumericCellReportsLocation)
{
    try {
        (void)table_from("y,a\n1,2\n3,oops\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.col(), 2u);
    }
    EXPECT_THROW((void)table_from("y,a\n1,\n"), ParseError);
    EXPECT_THROW((void)table_from("y,a\n1,2,3\n"), ParseError);
}

TEST(Csv, TooFewRowsIsDimensionError)
{
    EXPECT_THROW((void)dataset_from_table(table_from("y,a\n1,2\n3,4\n"), "y", {}, true), DimensionError);
}

TEST(Csv, SimulatedPanelRoundTripsBitIdentically)
{
    DgpConfig cfg;
    cfg.N = 40;
    cfg.T = 200;
    cfg.instability = true;
    const auto schedule = make_break_schedule(cfg);
    const auto roots = CorrelationRoots::make(cfg.N);
    TauCalibration calib;
    calib.tau_u = 3.7;
    calib.tau_eta = {0.3, 0.3, 0.25, 0.25};
    Rng rng(99);
    const auto s = simulate_replication(cfg, schedule, roots, calib, rng);

    std::vector<std::string> names;
    for (Index i = 0; i < cfg.N; ++i) names.push_back("x" + std::to_string(i + 1));
    const LabeledDataset original{TimeSeriesDataset(s.y.head(cfg.T), s.X.topRows(cfg.T), MatrixXd::Ones(cfg.T, 1)),
                                  "y", names, {}, true, std::nullopt};
    std::stringstream buffer;
    write_csv(buffer, original);
    const auto table = parse_csv(buffer);
    ASSERT_EQ(table.header.size(), 41u);
    ASSERT_EQ(table.rows.size(), 200u);
    const auto back = dataset_from_table(table, "y", {}, true);
    EXPECT_EQ(back.x_names, names);
    for (Index r = 0; r < cfg.T; ++r) {
        ASSERT_EQ(back.data.y()(r), original.data.y()(r));
        for (Index j = 0; j < cfg.N; ++j) ASSERT_EQ(back.data.X()(r, j), original.data.X()(r, j));
    }
}

TEST(Csv, TimestampsRoundTrip)
{
    const auto ds = dataset_from_table(table_from("t,y,a\n201001,1,2\n201002,2,1\n201003,4,3\n"), "y", {}, true,
                                       std::string("t"));
    ASSERT_TRUE(ds.data.timestamps());
    EXPECT_EQ((*ds.data.timestamps())[2], 201003);
    std::stringstream buffer;
    write_csv(buffer, ds);
    EXPECT_EQ(buffer.str(), "t,y,a\n201001,1,2\n201002,2,1\n201003,4,3\n");
}
