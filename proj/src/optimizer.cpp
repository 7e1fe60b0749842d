#include "ssddr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ssddr/logging.hpp"

namespace ssddr {

namespace {

double l1_norm(const Eigen::VectorXd& x,
               const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ranges) {
    double total = 0.0;
    for (const auto& [begin, end] : ranges)
        total += x.segment(begin, end - begin).cwiseAbs().sum();
    return total;
}

void soft_threshold(Eigen::VectorXd& x, double amount,
                    const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ranges) {
    for (const auto& [begin, end] : ranges) {
        for (Eigen::Index i = begin; i < end; ++i) {
            const double v = x[i];
            if (v > amount)
                x[i] = v - amount;
            else if (v < -amount)
                x[i] = v + amount;
            else
                x[i] = 0.0;
        }
    }
}

}  // namespace

ProxTrace proximal_gradient(const ProxProblem& problem, Eigen::VectorXd x0,
                            const FitConfig& config) {
    if (!problem.smooth) throw std::invalid_argument("proximal_gradient: missing smooth term");
    if (config.max_epochs < 1)
        throw std::invalid_argument("proximal_gradient: max_epochs must be >= 1");
    for (const auto& [begin, end] : problem.l1_ranges)
        if (begin < 0 || end < begin || end > x0.size())
            throw std::invalid_argument("proximal_gradient: L1 range out of bounds");

    const double lambda = problem.lambda;
    auto objective = [&](const Eigen::VectorXd& x) {
        return problem.smooth(x, nullptr) + lambda * l1_norm(x, problem.l1_ranges);
    };

    ProxTrace trace;
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd x_prev = x;
    Eigen::VectorXd z = x;  // latest prox point, feeds the momentum
    double f_x = objective(x);
    if (!std::isfinite(f_x))
        throw std::invalid_argument("proximal_gradient: objective not finite at the start");

    double t_mom = 1.0;
    double step = config.step_init;
    Eigen::VectorXd grad(x.size());

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        Eigen::VectorXd y = x + (t_mom / t_next) * (z - x) +
                            ((t_mom - 1.0) / t_next) * (x - x_prev);
        double s_y = problem.smooth(y, &grad);
        if (!std::isfinite(s_y)) {
            // Momentum overshot into a bad region; restart from the iterate.
            y = x;
            s_y = problem.smooth(y, &grad);
        }

        // Backtracking: accept the largest step whose prox point satisfies
        // the quadratic majorization at y (with a small slack).
        step = std::min(config.step_init, step * 2.0);
        Eigen::VectorXd z_new;
        double s_z = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 80; ++trial) {
            z_new = y - step * grad;
            soft_threshold(z_new, step * lambda, problem.l1_ranges);
            s_z = problem.smooth(z_new, nullptr);
            const Eigen::VectorXd diff = z_new - y;
            const double dd = diff.squaredNorm();
            const double bound = s_y + grad.dot(diff) + dd / (2.0 * step) +
                                 config.sufficient_decrease * dd;
            if (std::isfinite(s_z) && s_z <= bound) break;
            step *= config.step_shrink;
            if (step < 1e-18)
                throw std::runtime_error(
                    "proximal_gradient: line search failed at epoch " + std::to_string(epoch) +
                    "; last finite objective " + std::to_string(f_x));
        }

        const double f_z = s_z + lambda * l1_norm(z_new, problem.l1_ranges);
        const double f_before = f_x;
        bool accepted = false;
        if (std::isfinite(f_z) && f_z <= f_x) {
            x_prev = x;
            x = z_new;
            z = std::move(z_new);
            f_x = f_z;
            t_mom = t_next;
            accepted = true;
        } else {
            // Keep x (monotone safeguard) and restart the momentum.
            x_prev = x;
            z = std::move(z_new);
            t_mom = 1.0;
        }
        trace.objective.push_back(f_x);
        trace.epochs = epoch;

        if (accepted &&
            std::abs(f_before - f_x) <= config.tol * std::max(1.0, std::abs(f_before))) {
            trace.converged = true;
            break;
        }
    }

    // Snap noise-level L1 coefficients to exact zeros.
    for (const auto& [begin, end] : problem.l1_ranges)
        for (Eigen::Index i = begin; i < end; ++i)
            if (std::abs(x[i]) < 1e-12) x[i] = 0.0;

    trace.final_objective = objective(x);
    trace.x = std::move(x);
    return trace;
}

FittedModel fit(const ModelSpec& spec, const Dataset& train,
                const StandardizationStats& stats, const FitConfig& config) {
    spec.validate();
    if (train.n_rows() == 0) throw std::invalid_argument("fit: empty training set");
    const bool gamma = spec.family == Family::Gamma;
    if (gamma && train.schema.outcome_kind != OutcomeKind::Duration)
        throw std::invalid_argument("fit: the Gamma family requires a duration outcome");
    if (!gamma && train.schema.outcome_kind != OutcomeKind::Binary)
        throw std::invalid_argument("fit: the Bernoulli family requires a binary outcome");
    if (train.schema.sensitive.size() != spec.sensitive.size())
        throw std::invalid_argument("fit: data sensitive schema does not match the spec");
    for (std::size_t j = 0; j < spec.sensitive.size(); ++j)
        if (train.schema.sensitive[j].name != spec.sensitive[j].name ||
            train.schema.sensitive[j].categories != spec.sensitive[j].categories)
            throw std::invalid_argument("fit: data sensitive schema does not match the spec");

    // Assemble the additive design, shared by all distribution parameters:
    // [ one-hot cells | spline basis | linear features ].
    const DesignBlock groups = one_hot(train);
    DesignBlock smooth_block;
    if (spec.spline.has_value())
        smooth_block = bspline_block(
            train.features.col(train.feature_index(spec.spline->feature)), *spec.spline);
    Eigen::MatrixXd linear_cols(train.n_rows(),
                                static_cast<Eigen::Index>(spec.linear_features.size()));
    for (std::size_t j = 0; j < spec.linear_features.size(); ++j)
        linear_cols.col(static_cast<Eigen::Index>(j)) =
            train.features.col(train.feature_index(spec.linear_features[j]));

    const Eigen::Index n = train.n_rows();
    const Eigen::Index n_group = groups.matrix.cols();
    const Eigen::Index n_spline = spec.spline.has_value() ? smooth_block.matrix.cols() : 0;
    const Eigen::Index n_linear = linear_cols.cols();
    const Eigen::Index p = n_group + n_spline + n_linear;
    const int n_params = gamma ? 2 : 1;

    Eigen::MatrixXd design(n, p);
    design.leftCols(n_group) = groups.matrix;
    if (n_spline > 0) design.middleCols(n_group, n_spline) = smooth_block.matrix;
    if (n_linear > 0) design.rightCols(n_linear) = linear_cols;

    const double lambda = config.lambda.value_or(spec.lambda);
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("fit: lambda must be finite and >= 0");
    const double lambda_s = spec.spline.has_value() ? spec.spline->lambda_s : 0.0;
    const Eigen::VectorXd y = train.outcome;
    const double inv_n = 1.0 / static_cast<double>(n);

    ProxProblem problem;
    problem.lambda = lambda;
    for (int k = 0; k < n_params; ++k)
        problem.l1_ranges.push_back(
            {k * p + n_group + n_spline, k * p + n_group + n_spline + n_linear});

    problem.smooth = [&, gamma, n_params, p, n_group, n_spline, lambda_s, inv_n](
                         const Eigen::VectorXd& x, Eigen::VectorXd* grad) -> double {
        Eigen::MatrixXd eta(n, n_params);
        for (int k = 0; k < n_params; ++k)
            eta.col(k).noalias() = design * x.segment(k * p, p);
        // exp() overflow territory means the trial step is hopeless anyway.
        if (!eta.allFinite() || eta.cwiseAbs().maxCoeff() > 200.0) {
            if (grad != nullptr) grad->setZero();
            return std::numeric_limits<double>::infinity();
        }

        double total = 0.0;
        Eigen::MatrixXd score;
        if (grad != nullptr) score.resize(n, n_params);
        if (gamma) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const GammaNll nll = gamma_nll(y[i], eta(i, 0), eta(i, 1));
                total += nll.value;
                if (grad != nullptr) {
                    score(i, 0) = nll.d_eta_mean;
                    score(i, 1) = nll.d_eta_var;
                }
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                const BernoulliNll nll = bernoulli_nll(y[i], eta(i, 0));
                total += nll.value;
                if (grad != nullptr) score(i, 0) = nll.d_eta;
            }
        }
        total *= inv_n;
        if (!std::isfinite(total)) {
            if (grad != nullptr) grad->setZero();
            return std::numeric_limits<double>::infinity();
        }

        if (grad != nullptr)
            for (int k = 0; k < n_params; ++k)
                grad->segment(k * p, p).noalias() = inv_n * (design.transpose() * score.col(k));

        if (n_spline > 0 && lambda_s > 0.0) {
            for (int k = 0; k < n_params; ++k) {
                const auto coefs = x.segment(k * p + n_group, n_spline);
                const Eigen::VectorXd pc = smooth_block.penalty_matrix * coefs;
                total += lambda_s * coefs.dot(pc);
                if (grad != nullptr)
                    grad->segment(k * p + n_group, n_spline).noalias() += 2.0 * lambda_s * pc;
            }
        }
        return total;
    };

    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n_params * p);
    const ProxTrace trace = proximal_gradient(problem, x0, config);
    if (!trace.converged)
        log_info("fit: stopped at the epoch limit (" + std::to_string(trace.epochs) +
                 ") without meeting the tolerance");

    FittedModel model;
    model.spec = spec;
    model.spec.lambda = lambda;
    model.stats = stats;
    for (int k = 0; k < n_params; ++k) {
        ParamCoefs c;
        c.group = trace.x.segment(k * p, n_group);
        c.spline = trace.x.segment(k * p + n_group, n_spline);
        c.linear = trace.x.segment(k * p + n_group + n_spline, n_linear);
        model.params.push_back(std::move(c));
    }
    model.info.lambda = lambda;
    model.info.lambda_s = lambda_s;
    model.info.epochs_run = trace.epochs;
    model.info.converged = trace.converged;
    model.info.final_objective = trace.final_objective;
    model.info.seed = config.seed;
    model.info.objective_history = trace.objective;
    return model;
}

TuneResult tune_lambda(const ModelSpec& spec, const Dataset& train,
                       const StandardizationStats& stats, const Dataset& validation,
                       const std::vector<double>& grid, const FitConfig& config,
                       bool parallel) {
    if (grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
    for (double l : grid)
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("tune_lambda: grid values must be finite and >= 0");

    struct Slot {
        TuneEntry entry;
        std::optional<FittedModel> model;
    };
    std::vector<Slot> slots(grid.size());

    auto run_one = [&](std::size_t i) {
        Slot slot;
        slot.entry.lambda = grid[i];
        slot.entry.validation_nll = std::numeric_limits<double>::quiet_NaN();
        try {
            FitConfig local = config;
            local.lambda = grid[i];
            FittedModel m = fit(spec, train, stats, local);
            slot.entry.validation_nll = mean_nll(m, validation);
            slot.model = std::move(m);
        } catch (const std::exception& e) {
            slot.entry.error = e.what();
        }
        return slot;
    };

    if (parallel && grid.size() > 1) {
        const std::size_t width =
            std::max<std::size_t>(1, std::thread::hardware_concurrency());
        for (std::size_t start = 0; start < grid.size(); start += width) {
            const std::size_t stop = std::min(grid.size(), start + width);
            std::vector<std::future<Slot>> batch;
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(std::async(std::launch::async, run_one, i));
            for (std::size_t i = start; i < stop; ++i)
                slots[i] = batch[i - start].get();
        }
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i) slots[i] = run_one(i);
    }

    TuneResult result;
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        result.entries.push_back(slots[i].entry);
        if (slots[i].model.has_value() &&
            (!best.has_value() ||
             slots[i].entry.validation_nll < slots[*best].entry.validation_nll))
            best = i;
    }
    if (!best.has_value()) {
        std::ostringstream msg;
        msg << "tune_lambda: every fit failed:";
        for (const auto& e : result.entries)
            msg << "\n  lambda=" << e.lambda << ": " << e.error;
        throw std::runtime_error(msg.str());
    }
    result.selected = *best;
    result.best = std::move(*slots[*best].model);
    return result;
}

std::vector<double> default_lambda_grid() {
    const double lo = std::log(1e-5);
    const double hi = std::log(0.05);
    std::vector<double> grid(20);
    for (int i = 0; i < 20; ++i)
        grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / 19.0);
    return grid;
}

}  // namespace ssddr
