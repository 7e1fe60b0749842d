#ifndef SSDDR_OPTIMIZER_HPP
#define SSDDR_OPTIMIZER_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssddr/dataset.hpp"
#include "ssddr/model.hpp"

namespace ssddr {

struct FitConfig {
    std::optional<double> lambda;  // overrides ModelSpec::lambda when set
    int max_epochs = 60;
    double tol = 1e-8;             // relative objective change for convergence
    double step_init = 1.0;
    double step_shrink = 0.5;
    double sufficient_decrease = 1e-4;  // slack factor in the line-search test
    std::uint64_t seed = 0;             // recorded in the model metadata
};

// Composite problem: a smooth term with gradient plus an L1 penalty on a
// subset of coordinates.  `smooth` returns the value at x and fills *grad
// when grad is non-null.
struct ProxProblem {
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> smooth;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> l1_ranges;  // [begin, end)
    double lambda = 0.0;
};

struct ProxTrace {
    Eigen::VectorXd x;
    std::vector<double> objective;  // penalized objective after each epoch
    int epochs = 0;
    bool converged = false;
    double final_objective = 0.0;   // at the returned (thresholded) x
};

// Monotone accelerated proximal gradient with backtracking line search and
// adaptive restart.  The recorded objective sequence is non-increasing: a
// momentum step that would increase the objective is discarded (the previous
// iterate is kept) and the momentum is reset.  L1 coordinates smaller than
// 1e-12 in the solution are snapped to exactly zero.
ProxTrace proximal_gradient(const ProxProblem& problem, Eigen::VectorXd x0,
                            const FitConfig& config);

// Fit a model by penalized maximum likelihood on standardized training data.
// The penalized objective is
//   mean NLL + lambda * sum_k ||linear_k||_1 + lambda_s * sum_k spline_k' D'D spline_k
// with the sum over the family's distribution parameters.  Coefficients are
// initialized at zero; the procedure is deterministic up to bit level.
FittedModel fit(const ModelSpec& spec, const Dataset& train,
                const StandardizationStats& stats, const FitConfig& config = {});

struct TuneEntry {
    double lambda = 0.0;
    double validation_nll = 0.0;  // NaN when the fit failed
    std::string error;            // empty when the fit succeeded
};

struct TuneResult {
    std::vector<TuneEntry> entries;  // grid order
    std::size_t selected = 0;        // index of the winning lambda
    FittedModel best;
};

// Fit once per grid value and score the mean validation NLL; the smallest
// score wins (first on ties).  Individual fit failures are recorded per
// entry; if every value fails, throws with the collected messages.  When
// `parallel` is set, grid points run on a thread pool; results are identical
// to the sequential order.
TuneResult tune_lambda(const ModelSpec& spec, const Dataset& train,
                       const StandardizationStats& stats, const Dataset& validation,
                       const std::vector<double>& grid, const FitConfig& config = {},
                       bool parallel = true);

// 20 points, log-uniform on [1e-5, 0.05].
std::vector<double> default_lambda_grid();

}  // namespace ssddr

#endif
