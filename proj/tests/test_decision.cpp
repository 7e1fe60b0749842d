#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ssddr/decision.hpp"

using namespace ssddr;
namespace fs = std::filesystem;

namespace {

// Straight-line reimplementation of the three-branch rule, used as the
// oracle for the decide() equivalence checks.
int three_branch(double p, double lo, double hi) {
    if (p < lo) return 0;
    if (p > hi) return 1;
    return 2;
}

}  // namespace

TEST_CASE("decide matches the three-branch oracle on an exhaustive grid") {
    for (int di = 0; di <= 10; ++di) {
        const double delta = di * 0.05;
        const DecisionPolicy policy = DecisionPolicy::symmetric(delta);
        for (int pi = 0; pi <= 1000; ++pi) {
            const double p = pi / 1000.0;
            CHECK(static_cast<int>(decide(p, policy)) ==
                  three_branch(p, delta, 1.0 - delta));
        }
    }
}

TEST_CASE("band boundaries abstain") {
    const DecisionPolicy policy = DecisionPolicy::symmetric(0.25);
    CHECK(decide(0.25, policy) == Decision::Reject);
    CHECK(decide(0.75, policy) == Decision::Reject);
    CHECK(decide(0.2499999, policy) == Decision::Negative);
    CHECK(decide(0.7500001, policy) == Decision::Positive);
    CHECK(decide(0.0, policy) == Decision::Negative);
    CHECK(decide(1.0, policy) == Decision::Positive);
}

TEST_CASE("delta extremes") {
    // delta = 0: the band is the whole interval, everything abstains.
    const DecisionPolicy all_reject = DecisionPolicy::symmetric(0.0);
    for (double p : {0.0, 0.3, 0.5, 1.0}) CHECK(decide(p, all_reject) == Decision::Reject);

    // delta = 0.5: the band collapses to the point 0.5.
    const DecisionPolicy all_classify = DecisionPolicy::symmetric(0.5);
    CHECK(decide(0.499999, all_classify) == Decision::Negative);
    CHECK(decide(0.500001, all_classify) == Decision::Positive);
    CHECK(decide(0.5, all_classify) == Decision::Reject);
}

TEST_CASE("decide validates its inputs") {
    const DecisionPolicy policy = DecisionPolicy::symmetric(0.1);
    CHECK_THROWS_AS(decide(-0.01, policy), std::invalid_argument);
    CHECK_THROWS_AS(decide(1.01, policy), std::invalid_argument);
    CHECK_THROWS_AS(decide(std::nan(""), policy), std::invalid_argument);
    CHECK_THROWS_AS(DecisionPolicy::symmetric(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(DecisionPolicy::symmetric(0.6), std::invalid_argument);
    DecisionPolicy backwards{0.8, 0.2};
    CHECK_THROWS_AS(backwards.validate(), std::invalid_argument);
}

TEST_CASE("default delta grid is 0, 0.005, ..., 0.5") {
    const std::vector<double> g = default_delta_grid();
    REQUIRE(g.size() == 101);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 0.5);
    CHECK(g[1] == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(g[50] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("sweep computes coverage and conditional accuracy per group") {
    // Hand-checkable setup: 6 rows, 2 groups.
    Eigen::VectorXd p(6), y(6);
    p << 0.05, 0.45, 0.95, 0.10, 0.55, 0.85;
    y << 0.0, 1.0, 1.0, 1.0, 1.0, 1.0;
    const std::vector<int> groups = {0, 0, 0, 1, 1, 1};

    const std::vector<CurvePoint> pts = sweep(p, y, groups, 2, {0.2, 0.5});
    REQUIRE(pts.size() == 2);

    // delta = 0.2: band [0.2, 0.8]; classified are p=0.05(0), 0.95(1),
    // 0.10(0), 0.85(1).
    const CurvePoint& a = pts[0];
    CHECK(a.delta == 0.2);
    CHECK(a.overall.prop_classified == doctest::Approx(4.0 / 6.0));
    CHECK(a.overall.prop_rejected == doctest::Approx(2.0 / 6.0));
    // Decisions 0,1 vs labels 0,1 in group 0: both right. In group 1 the
    // p=0.10 row decides 0 but the label is 1.
    REQUIRE(a.overall.accuracy.has_value());
    CHECK(*a.overall.accuracy == doctest::Approx(3.0 / 4.0));
    REQUIRE(a.groups.size() == 2);
    CHECK(*a.groups[0].accuracy == doctest::Approx(1.0));
    CHECK(*a.groups[1].accuracy == doctest::Approx(0.5));
    CHECK(a.groups[1].prop_classified == doctest::Approx(2.0 / 3.0));

    // delta = 0.5 classifies everything here (no p is exactly 0.5); the rows
    // with p = 0.45 and p = 0.10 decide 0 against label 1.
    const CurvePoint& b = pts[1];
    CHECK(b.overall.prop_classified == 1.0);
    CHECK(*b.overall.accuracy == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("sweep accuracy is empty when nothing is classified") {
    Eigen::VectorXd p(2), y(2);
    p << 0.4, 0.6;
    y << 0.0, 1.0;
    const std::vector<CurvePoint> pts = sweep(p, y, {0, 0}, 1, {0.1});
    CHECK(pts[0].overall.prop_classified == 0.0);
    CHECK(!pts[0].overall.accuracy.has_value());
    CHECK(!pts[0].groups[0].accuracy.has_value());
}

TEST_CASE("sweep validates shapes and values") {
    Eigen::VectorXd p(2), y(2), y3(3);
    p << 0.1, 0.9;
    y << 0.0, 1.0;
    y3 << 0.0, 1.0, 1.0;
    CHECK_THROWS_AS(sweep(p, y3, {0, 0}, 1, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(sweep(p, y, {0}, 1, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(sweep(p, y, {0, 5}, 1, {0.1}), std::invalid_argument);
    Eigen::VectorXd bad = y;
    bad[0] = 0.5;
    CHECK_THROWS_AS(sweep(p, bad, {0, 0}, 1, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(sweep(p, y, {0, 0}, 1, {0.7}), std::invalid_argument);
}

TEST_CASE("write_curves_csv layout: one overall plus one row per group") {
    Eigen::VectorXd p(4), y(4);
    p << 0.05, 0.45, 0.95, 0.10;
    y << 0.0, 1.0, 1.0, 0.0;
    const std::vector<int> groups = {0, 1, 0, 1};
    const std::vector<CurvePoint> pts = sweep(p, y, groups, 2, {0.0, 0.2, 0.5});
    const fs::path out = fs::temp_directory_path() / "curves_test.csv";
    write_curves_csv(pts, {"A", "B"}, out);

    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "delta,group,prop_classified,accuracy,prop_rejected");
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    // 3 deltas x (overall + 2 groups).
    REQUIRE(rows.size() == 9);
    CHECK(rows[0].substr(0, 10) == "0,overall,");
    CHECK(rows[1].substr(0, 4) == "0,A,");
    CHECK(rows[2].substr(0, 4) == "0,B,");
    // Nothing is classified at delta = 0, so accuracy prints as NA.
    CHECK(rows[0].find(",NA,") != std::string::npos);
    // Everything is classified at delta = 0.5.
    CHECK(rows[6].find("0.5,overall,1,") == 0);

    CHECK_THROWS_AS(write_curves_csv(pts, {"A"}, out), std::invalid_argument);
}

TEST_CASE("decide_dataset routes and counts by cell") {
    // A one-cell Bernoulli model with a single linear feature that directly
    // sets the logit.
    FittedModel m;
    m.spec.family = Family::Bernoulli;
    m.spec.sensitive = {{"g", {"only"}}};
    m.spec.spline.reset();
    m.spec.linear_features = {"x"};
    m.stats.feature_names = {"x"};
    m.stats.min = Eigen::VectorXd::Zero(1);
    m.stats.max = Eigen::VectorXd::Ones(1);
    ParamCoefs pc;
    pc.group = Eigen::VectorXd::Zero(1);
    pc.linear = Eigen::VectorXd(1);
    pc.linear << 1.0;
    m.params = {pc};

    Dataset d;
    d.schema = DataSchema{{{"g", {"only"}}}, {"x"}, "y", OutcomeKind::Binary};
    d.sensitive_codes = {{0, 0, 0}};
    d.features.resize(3, 1);
    d.features << -5.0, 0.0, 5.0;  // logits -> p ~ 0.007, 0.5, 0.993
    d.outcome.resize(3);
    d.outcome << 0.0, 1.0, 1.0;

    const DecideResult r = decide_dataset(m, d, DecisionPolicy::symmetric(0.1));
    REQUIRE(r.decisions.size() == 3);
    CHECK(r.decisions[0] == Decision::Negative);
    CHECK(r.decisions[1] == Decision::Reject);
    CHECK(r.decisions[2] == Decision::Positive);
    CHECK(r.overall.negative == 1);
    CHECK(r.overall.positive == 1);
    CHECK(r.overall.rejected == 1);
    CHECK(r.overall.total() == 3);
    REQUIRE(r.by_group.size() == 1);
    CHECK(r.by_group[0].rejected == 1);
    CHECK(r.group_labels == std::vector<std::string>{"only"});

    const fs::path out = fs::temp_directory_path() / "routing_test.csv";
    write_routing_csv(r, out);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "group,decided_negative,decided_positive,rejected,total");
    std::getline(in, line);
    CHECK(line == "only,1,1,1,3");
    std::getline(in, line);
    CHECK(line == "overall,1,1,1,3");
}
