#include "ssddr/decision.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ssddr {

namespace {

std::string report_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

DecisionPolicy DecisionPolicy::symmetric(double delta) {
    if (!(delta >= 0.0 && delta <= 0.5))
        throw std::invalid_argument("DecisionPolicy: delta must be in [0, 0.5]");
    return {delta, 1.0 - delta};
}

void DecisionPolicy::validate() const {
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || t_lo > t_hi ||
        t_lo < 0.0 || t_hi > 1.0)
        throw std::invalid_argument("DecisionPolicy: need 0 <= t_lo <= t_hi <= 1");
}

Decision decide(double p, const DecisionPolicy& policy) {
    policy.validate();
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw std::invalid_argument("decide: probability must be in [0, 1]");
    if (p < policy.t_lo) return Decision::Negative;
    if (p > policy.t_hi) return Decision::Positive;
    return Decision::Reject;
}

std::vector<CurvePoint> sweep(const Eigen::VectorXd& p, const Eigen::VectorXd& labels,
                              const std::vector<int>& groups, int n_groups,
                              const std::vector<double>& delta_grid) {
    const Eigen::Index n = p.size();
    if (labels.size() != n || static_cast<Eigen::Index>(groups.size()) != n)
        throw std::invalid_argument("sweep: p, labels and groups must have equal length");
    if (n == 0) throw std::invalid_argument("sweep: empty inputs");
    if (n_groups < 1) throw std::invalid_argument("sweep: n_groups must be >= 1");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] != 0.0 && labels[i] != 1.0)
            throw std::invalid_argument("sweep: labels must be 0 or 1");
        const int g = groups[static_cast<std::size_t>(i)];
        if (g < 0 || g >= n_groups)
            throw std::invalid_argument("sweep: group index out of range");
    }

    std::vector<CurvePoint> points;
    points.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        const DecisionPolicy policy = DecisionPolicy::symmetric(delta);
        CurvePoint point;
        point.delta = delta;
        // counts[g] = {size, classified, correct}
        std::vector<std::int64_t> size(static_cast<std::size_t>(n_groups) + 1, 0);
        std::vector<std::int64_t> classified(static_cast<std::size_t>(n_groups) + 1, 0);
        std::vector<std::int64_t> correct(static_cast<std::size_t>(n_groups) + 1, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Decision d = decide(p[i], policy);
            const std::size_t g = static_cast<std::size_t>(groups[static_cast<std::size_t>(i)]);
            for (std::size_t slot : {g, static_cast<std::size_t>(n_groups)}) {
                ++size[slot];
                if (d != Decision::Reject) {
                    ++classified[slot];
                    if (static_cast<double>(static_cast<int>(d)) == labels[i]) ++correct[slot];
                }
            }
        }
        auto curve = [&](std::size_t slot) {
            GroupCurve c;
            if (size[slot] > 0) {
                c.prop_classified =
                    static_cast<double>(classified[slot]) / static_cast<double>(size[slot]);
                c.prop_rejected = static_cast<double>(size[slot] - classified[slot]) /
                                  static_cast<double>(size[slot]);
            }
            if (classified[slot] > 0)
                c.accuracy =
                    static_cast<double>(correct[slot]) / static_cast<double>(classified[slot]);
            return c;
        };
        point.overall = curve(static_cast<std::size_t>(n_groups));
        for (int g = 0; g < n_groups; ++g)
            point.groups.push_back(curve(static_cast<std::size_t>(g)));
        points.push_back(std::move(point));
    }
    return points;
}

std::vector<double> default_delta_grid() {
    std::vector<double> grid(101);
    for (int j = 0; j <= 100; ++j) grid[static_cast<std::size_t>(j)] = j / 200.0;
    return grid;
}

void write_curves_csv(const std::vector<CurvePoint>& points,
                      const std::vector<std::string>& group_labels,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_curves_csv: cannot open " + path.string() +
                                 " for writing");
    out << "delta,group,prop_classified,accuracy,prop_rejected\n";
    auto row = [&](double delta, const std::string& label, const GroupCurve& c) {
        out << report_number(delta) << "," << label << "," << report_number(c.prop_classified)
            << "," << (c.accuracy.has_value() ? report_number(*c.accuracy) : std::string("NA"))
            << "," << report_number(c.prop_rejected) << "\n";
    };
    for (const auto& point : points) {
        row(point.delta, "overall", point.overall);
        if (point.groups.size() != group_labels.size())
            throw std::invalid_argument("write_curves_csv: label count does not match groups");
        for (std::size_t g = 0; g < point.groups.size(); ++g)
            row(point.delta, group_labels[g], point.groups[g]);
    }
}

DecideResult decide_dataset(const FittedModel& model, const Dataset& standardized,
                            const DecisionPolicy& policy, double threshold) {
    policy.validate();
    const PredictionTable preds = predict_dataset(model, standardized, threshold);
    DecideResult result;
    result.prob = preds.prob;
    result.group_labels = model.cell_labels();
    result.by_group.assign(result.group_labels.size(), RoutingCounts{});
    result.decisions.reserve(static_cast<std::size_t>(standardized.n_rows()));
    for (Eigen::Index i = 0; i < standardized.n_rows(); ++i) {
        const Decision d = decide(preds.prob[i], policy);
        result.decisions.push_back(d);
        RoutingCounts& g = result.by_group[static_cast<std::size_t>(standardized.cell_index(i))];
        RoutingCounts* slots[2] = {&g, &result.overall};
        for (RoutingCounts* c : slots) {
            if (d == Decision::Negative)
                ++c->negative;
            else if (d == Decision::Positive)
                ++c->positive;
            else
                ++c->rejected;
        }
    }
    return result;
}

void write_routing_csv(const DecideResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_routing_csv: cannot open " + path.string() +
                                 " for writing");
    out << "group,decided_negative,decided_positive,rejected,total\n";
    for (std::size_t g = 0; g < result.by_group.size(); ++g) {
        const RoutingCounts& c = result.by_group[g];
        out << result.group_labels[g] << "," << c.negative << "," << c.positive << ","
            << c.rejected << "," << c.total() << "\n";
    }
    out << "overall," << result.overall.negative << "," << result.overall.positive << ","
        << result.overall.rejected << "," << result.overall.total() << "\n";
}

}  // namespace ssddr
