#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "ssddr/datagen.hpp"
#include "ssddr/optimizer.hpp"

using namespace ssddr;
namespace fs = std::filesystem;

namespace {

FitConfig tight_config(int max_epochs = 5000, double tol = 1e-12) {
    FitConfig c;
    c.max_epochs = max_epochs;
    c.tol = tol;
    return c;
}

// Small but realistic training set from the generator.
Dataset small_train(int n, std::uint64_t seed) {
    DGPConfig g;
    g.n = n;
    g.seed = seed;
    return generate(g).data;
}

ModelSpec small_spec() {
    ModelSpec spec;
    spec.family = Family::Gamma;
    spec.sensitive = {{"gender", {"Male", "Female"}},
                      {"citizenship", {"German", "NonGerman"}}};
    SplineConfig sc;
    spec.spline = sc;
    spec.linear_features.clear();
    for (int i = 1; i <= 30; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "x%02d", i);
        spec.linear_features.push_back(buf);
    }
    return spec;
}

}  // namespace

TEST_CASE("proximal gradient solves a separable lasso in closed form") {
    // 0.5 * sum a_i (x_i - b_i)^2 with L1 on all coordinates: the solution is
    // the soft threshold of each b_i at lambda / a_i.
    const int p = 6;
    Eigen::VectorXd a(p), b(p);
    a << 1.0, 2.0, 0.5, 3.0, 1.5, 1.0;
    b << 0.8, -0.3, 0.05, 0.0, -2.0, 0.009;
    ProxProblem prob;
    prob.lambda = 0.01;
    prob.l1_ranges = {{0, p}};
    prob.smooth = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) *grad = a.cwiseProduct(x - b);
        return 0.5 * (a.array() * (x - b).array().square()).sum();
    };
    FitConfig config;
    config.max_epochs = 50000;
    config.tol = 1e-14;
    const ProxTrace trace =
        proximal_gradient(prob, Eigen::VectorXd::Zero(p), config);
    CHECK(trace.converged);
    // Stopping on relative objective change leaves x-accuracy around the
    // square root of the tolerance.
    for (int i = 0; i < p; ++i) {
        const double expected = oracle::soft_threshold(b[i], prob.lambda / a[i], 1.0);
        CHECK(trace.x[i] == doctest::Approx(expected).epsilon(1e-5));
    }
    // b[3] = 0 and |a_5 b_5| < lambda: from a zero start these coordinates
    // never leave the prox's dead zone, so they are exactly zero.
    CHECK(trace.x[3] == 0.0);
    CHECK(trace.x[5] == 0.0);
}

TEST_CASE("L1 applies only to the declared ranges") {
    // Without a range over coordinate 0 it converges to b exactly, not to a
    // thresholded value.
    Eigen::VectorXd b(2);
    b << 0.05, 0.05;
    ProxProblem prob;
    prob.lambda = 0.1;  // would zero both if applied everywhere
    prob.l1_ranges = {{1, 2}};
    prob.smooth = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) *grad = x - b;
        return 0.5 * (x - b).squaredNorm();
    };
    const ProxTrace trace =
        proximal_gradient(prob, Eigen::VectorXd::Zero(2), tight_config());
    CHECK(trace.x[0] == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(trace.x[1] == 0.0);
}

TEST_CASE("objective history is monotonically non-increasing") {
    // A badly conditioned quadratic forces plenty of restarts.
    const int p = 20;
    Eigen::VectorXd a(p);
    for (int i = 0; i < p; ++i) a[i] = std::pow(10.0, -3.0 + 6.0 * i / (p - 1));
    ProxProblem prob;
    prob.lambda = 1e-3;
    prob.l1_ranges = {{0, p}};
    prob.smooth = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) *grad = a.cwiseProduct(x) - Eigen::VectorXd::Ones(p);
        return 0.5 * x.dot(a.cwiseProduct(x)) - x.sum();
    };
    const ProxTrace trace =
        proximal_gradient(prob, Eigen::VectorXd::Zero(p), tight_config(2000, 1e-14));
    REQUIRE(trace.objective.size() > 1);
    for (std::size_t i = 1; i < trace.objective.size(); ++i)
        CHECK(trace.objective[i] <= trace.objective[i - 1]);
    CHECK(trace.final_objective == trace.objective.back());
}

TEST_CASE("fit recovers a well-separated Gamma signal") {
    const Dataset raw = small_train(6000, 21);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    FitConfig cfg = tight_config(4000, 1e-10);
    const FittedModel model = fit(spec, train, stats, cfg);

    CHECK(model.info.converged);
    CHECK(model.info.epochs_run > 0);
    CHECK(model.params.size() == 2);
    CHECK(model.params[0].group.size() == 4);
    CHECK(model.params[0].spline.size() == 22);
    CHECK(model.params[0].linear.size() == 30);

    // Group means increase across cells by construction of the generator
    // defaults (Male-German lowest, Female-NonGerman highest).
    CHECK(model.params[0].group[0] < model.params[0].group[3]);
    CHECK(model.params[1].group[0] < model.params[1].group[3]);

    // The strongest planted signal (x01, +1.0) dominates and keeps its sign.
    CHECK(model.params[0].linear[0] > 0.5);
    CHECK(model.params[0].linear[1] < -0.3);

    // Objective history from the fit is non-increasing as well.
    const auto& hist = model.info.objective_history;
    REQUIRE(!hist.empty());
    for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1]);
}

TEST_CASE("fit is deterministic: identical runs serialize identically") {
    const Dataset raw = small_train(1500, 4);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    FitConfig cfg = tight_config(400, 1e-9);
    const FittedModel m1 = fit(spec, train, stats, cfg);
    const FittedModel m2 = fit(spec, train, stats, cfg);
    const fs::path p1 = fs::temp_directory_path() / "det1.json";
    const fs::path p2 = fs::temp_directory_path() / "det2.json";
    save_model(m1, p1);
    save_model(m2, p2);
    std::ifstream a(p1), b(p2);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("fit validates family against outcome kind") {
    const Dataset raw = small_train(200, 8);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    spec.family = Family::Bernoulli;  // duration outcome -> mismatch
    CHECK_THROWS_AS(fit(spec, train, stats, tight_config(10)), std::invalid_argument);
}

TEST_CASE("fit rejects data that does not match the spec") {
    const Dataset raw = small_train(200, 8);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    spec.sensitive[0].categories = {"Male"};
    CHECK_THROWS_AS(fit(spec, train, stats, tight_config(10)), std::invalid_argument);
}

TEST_CASE("config override: FitConfig lambda wins over the spec") {
    const Dataset raw = small_train(800, 13);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    spec.lambda = 1e-4;
    FitConfig cfg = tight_config(300, 1e-9);
    cfg.lambda = 0.5;  // heavy enough to zero every linear coefficient
    const FittedModel heavy = fit(spec, train, stats, cfg);
    CHECK(heavy.info.lambda == 0.5);
    CHECK(heavy.params[0].linear.cwiseAbs().maxCoeff() == 0.0);
    CHECK(heavy.params[1].linear.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tune_lambda picks the best validation score") {
    const Dataset raw_tr = small_train(1200, 31);
    const Dataset raw_va = small_train(1200, 32);
    const auto [train, stats] = standardize(raw_tr);
    const auto [validation, ignored] = standardize(raw_va, stats);
    (void)ignored;
    ModelSpec spec = small_spec();
    FitConfig cfg = tight_config(250, 1e-8);
    const std::vector<double> grid = {1e-5, 1e-3, 0.4};

    const TuneResult seq = tune_lambda(spec, train, stats, validation, grid, cfg, false);
    REQUIRE(seq.entries.size() == 3);
    for (const auto& e : seq.entries) CHECK(e.error.empty());
    double best = seq.entries[seq.selected].validation_nll;
    for (const auto& e : seq.entries) CHECK(best <= e.validation_nll);
    CHECK(seq.best.info.lambda == seq.entries[seq.selected].lambda);

    // Parallel execution returns the same selection and scores.
    const TuneResult par = tune_lambda(spec, train, stats, validation, grid, cfg, true);
    CHECK(par.selected == seq.selected);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(par.entries[i].lambda == seq.entries[i].lambda);
        CHECK(par.entries[i].validation_nll == seq.entries[i].validation_nll);
    }
}

TEST_CASE("tune_lambda rejects bad grids and reports total failure") {
    const Dataset raw = small_train(300, 40);
    const auto [train, stats] = standardize(raw);
    ModelSpec spec = small_spec();
    FitConfig cfg = tight_config(50, 1e-6);

    // Malformed grids are rejected up front, before any fitting.
    CHECK_THROWS_AS(tune_lambda(spec, train, stats, train, {}, cfg, false),
                    std::invalid_argument);
    CHECK_THROWS_AS(tune_lambda(spec, train, stats, train, {-1.0, 1e-4}, cfg, false),
                    std::invalid_argument);

    // When every fit fails (here: Bernoulli spec against duration data), the
    // error carries the per-lambda messages.
    spec.family = Family::Bernoulli;
    try {
        tune_lambda(spec, train, stats, train, {1e-4, 1e-3}, cfg, false);
        FAIL("expected tune_lambda to throw");
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        CHECK(what.find("every fit failed") != std::string::npos);
        CHECK(what.find("lambda=0.001") != std::string::npos);
    }
}

TEST_CASE("default lambda grid spans [1e-5, 0.05] log-uniformly") {
    const std::vector<double> g = default_lambda_grid();
    REQUIRE(g.size() == 20);
    CHECK(g.front() == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(g.back() == doctest::Approx(0.05).epsilon(1e-12));
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] > g[i - 1]);
        // Constant ratio between consecutive points.
        CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-9));
    }
}
