#include "ssddr/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ssddr/decision.hpp"
#include "ssddr/manifest.hpp"

namespace ssddr {

namespace {

std::string report_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::vector<GroupTableRow> group_table(const FittedModel& model) {
    if (model.spec.family != Family::Gamma)
        throw std::invalid_argument(
            "group_table: only Gamma models have a mean/variance table (Bernoulli has p only)");
    const std::vector<std::string> labels = model.cell_labels();
    std::vector<GroupTableRow> rows;
    rows.reserve(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) {
        GroupTableRow row;
        row.cell = labels[c];
        row.mean = std::exp(model.params[0].group[static_cast<Eigen::Index>(c)]);
        row.variance = std::exp(model.params[1].group[static_cast<Eigen::Index>(c)]);
        row.variance_factor = row.variance / (row.mean * row.mean);
        rows.push_back(std::move(row));
    }
    return rows;
}

ImportanceTable importance(const FittedModel& model, std::size_t param, int top_n) {
    if (param >= model.params.size())
        throw std::invalid_argument("importance: parameter index out of range");
    if (top_n < 1) throw std::invalid_argument("importance: top_n must be >= 1");

    const Eigen::VectorXd& coefs = model.params[param].linear;
    const std::vector<std::string>& names = model.spec.linear_features;

    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(coefs[static_cast<Eigen::Index>(a)]) >
               std::abs(coefs[static_cast<Eigen::Index>(b)]);
    });

    ImportanceTable table;
    table.param = family_param_names(model.spec.family)[param];
    table.truncated = static_cast<std::size_t>(top_n) > names.size();
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(top_n), names.size());
    for (std::size_t i = 0; i < keep; ++i) {
        ImportanceRow row;
        row.feature = names[order[i]];
        row.coef = coefs[static_cast<Eigen::Index>(order[i])];
        row.factor = std::exp(row.coef);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void audit_report(const FittedModel& model, const Dataset& test,
                  const std::vector<double>& delta_grid,
                  const std::filesystem::path& out_dir, double threshold,
                  int importance_top_n,
                  const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
    if (delta_grid.empty()) throw std::invalid_argument("audit_report: empty delta grid");
    model.check_compatible(test);
    std::filesystem::create_directories(out_dir);

    const auto [standardized, ignored_stats] = standardize(test, model.stats);
    const PredictionTable preds = predict_dataset(model, standardized, threshold);
    const Eigen::VectorXd labels = test.binary_labels(threshold);
    const std::vector<int> groups = test.cell_indices();
    const std::vector<std::string> group_labels = model.cell_labels();
    const std::vector<CurvePoint> points =
        sweep(preds.prob, labels, groups, model.cell_count(), delta_grid);

    std::vector<std::string> outputs;

    if (model.spec.family == Family::Gamma) {
        std::ofstream out(out_dir / "group_table.csv");
        if (!out) throw std::runtime_error("audit_report: cannot write group_table.csv");
        out << "cell,mean,variance,variance_factor\n";
        for (const auto& row : group_table(model))
            out << row.cell << "," << report_number(row.mean) << ","
                << report_number(row.variance) << "," << report_number(row.variance_factor)
                << "\n";
        outputs.push_back("group_table.csv");
    }

    const auto param_names = family_param_names(model.spec.family);
    for (std::size_t k = 0; k < param_names.size(); ++k) {
        const ImportanceTable table = importance(model, k, importance_top_n);
        const std::string name = "importance_" + param_names[k] + ".csv";
        std::ofstream out(out_dir / name);
        if (!out) throw std::runtime_error("audit_report: cannot write " + name);
        out << "rank,feature,coef,factor\n";
        for (std::size_t i = 0; i < table.rows.size(); ++i)
            out << (i + 1) << "," << table.rows[i].feature << ","
                << report_number(table.rows[i].coef) << ","
                << report_number(table.rows[i].factor) << "\n";
        outputs.push_back(name);
    }

    {
        // Overall-only curve file: one row per delta.
        std::ofstream out(out_dir / "curves_overall.csv");
        if (!out) throw std::runtime_error("audit_report: cannot write curves_overall.csv");
        out << "delta,group,prop_classified,accuracy,prop_rejected\n";
        for (const auto& point : points) {
            const GroupCurve& c = point.overall;
            out << report_number(point.delta) << ",overall," << report_number(c.prop_classified)
                << ","
                << (c.accuracy.has_value() ? report_number(*c.accuracy) : std::string("NA"))
                << "," << report_number(c.prop_rejected) << "\n";
        }
        outputs.push_back("curves_overall.csv");
    }

    write_curves_csv(points, group_labels, out_dir / "curves_groups.csv");
    outputs.push_back("curves_groups.csv");

    {
        std::ofstream out(out_dir / "reject_by_group.csv");
        if (!out) throw std::runtime_error("audit_report: cannot write reject_by_group.csv");
        out << "delta,group,prop_rejected\n";
        for (const auto& point : points)
            for (std::size_t g = 0; g < point.groups.size(); ++g)
                out << report_number(point.delta) << "," << group_labels[g] << ","
                    << report_number(point.groups[g].prop_rejected) << "\n";
        outputs.push_back("reject_by_group.csv");
    }

    Manifest manifest;
    manifest.command = "audit_report";
    manifest.seed = model.info.seed;
    manifest.lambda = model.info.lambda;
    for (const auto& [name, path] : inputs) manifest.inputs.push_back({name, file_hash(path)});
    manifest.outputs = outputs;
    manifest.notes.push_back(
        {"variance_factor", "computed as variance / mean^2, matching the reported group tables"});
    write_manifest(manifest, out_dir / "manifest.json");
}

}  // namespace ssddr
