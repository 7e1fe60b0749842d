#include "ssddr/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace ssddr {

using ordered_json = nlohmann::ordered_json;

std::string family_name(Family f) {
    return f == Family::Gamma ? "gamma" : "bernoulli";
}

Family family_from_name(const std::string& name) {
    if (name == "gamma") return Family::Gamma;
    if (name == "bernoulli") return Family::Bernoulli;
    throw std::invalid_argument("unknown family '" + name + "' (expected gamma or bernoulli)");
}

std::vector<std::string> family_param_names(Family f) {
    if (f == Family::Gamma) return {"mean", "variance"};
    return {"p"};
}

void ModelSpec::validate() const {
    if (sensitive.empty())
        throw std::invalid_argument("ModelSpec: at least one sensitive column is required");
    std::set<std::string> seen;
    for (const auto& col : sensitive) {
        if (col.categories.empty())
            throw std::invalid_argument("ModelSpec: sensitive column '" + col.name +
                                        "' has no categories");
        if (!seen.insert(col.name).second)
            throw std::invalid_argument("ModelSpec: duplicate sensitive column '" + col.name + "'");
    }
    std::set<std::string> feats;
    for (const auto& name : linear_features)
        if (!feats.insert(name).second)
            throw std::invalid_argument("ModelSpec: duplicate linear feature '" + name + "'");
    if (spline.has_value()) {
        if (feats.count(spline->feature))
            throw std::invalid_argument("ModelSpec: smooth feature '" + spline->feature +
                                        "' also appears in the linear features");
        BSplineBasis check(*spline);  // validates degree/knots/penalty order
        if (!(spline->lambda_s >= 0.0) || !std::isfinite(spline->lambda_s))
            throw std::invalid_argument("ModelSpec: lambda_s must be finite and >= 0");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("ModelSpec: lambda must be finite and >= 0");
}

int FittedModel::cell_count() const {
    int n = 1;
    for (const auto& col : spec.sensitive) n *= static_cast<int>(col.categories.size());
    return n;
}

std::vector<std::string> FittedModel::cell_labels() const {
    Dataset dummy;
    dummy.schema.sensitive = spec.sensitive;
    return dummy.cell_labels();
}

void FittedModel::check_compatible(const Dataset& data) const {
    if (data.schema.sensitive.size() != spec.sensitive.size())
        throw std::invalid_argument("model/data mismatch: different sensitive column count");
    for (std::size_t j = 0; j < spec.sensitive.size(); ++j) {
        const auto& a = spec.sensitive[j];
        const auto& b = data.schema.sensitive[j];
        if (a.name != b.name || a.categories != b.categories)
            throw std::invalid_argument("model/data mismatch: sensitive column '" + a.name +
                                        "' differs from the data schema");
    }
    if (spec.spline.has_value()) data.feature_index(spec.spline->feature);
    for (const auto& name : spec.linear_features) data.feature_index(name);
}

namespace {

double row_eta(const FittedModel& model, const Dataset& data, Eigen::Index row,
               std::size_t param) {
    const ParamCoefs& c = model.params[param];
    double eta = c.group[data.cell_index(row)];
    if (model.spec.spline.has_value()) {
        BSplineBasis basis(*model.spec.spline);
        const Eigen::Index xj = data.feature_index(model.spec.spline->feature);
        eta += basis.row(data.features(row, xj)).dot(c.spline);
    }
    for (std::size_t j = 0; j < model.spec.linear_features.size(); ++j)
        eta += c.linear[static_cast<Eigen::Index>(j)] *
               data.features(row, data.feature_index(model.spec.linear_features[j]));
    return eta;
}

}  // namespace

Eigen::VectorXd FittedModel::linear_predictor(const Dataset& standardized,
                                              std::size_t param) const {
    check_compatible(standardized);
    const ParamCoefs& c = params.at(param);
    const Eigen::Index n = standardized.n_rows();
    Eigen::VectorXd eta(n);
    for (Eigen::Index i = 0; i < n; ++i) eta[i] = c.group[standardized.cell_index(i)];
    if (spec.spline.has_value()) {
        BSplineBasis basis(*spec.spline);
        const Eigen::Index xj = standardized.feature_index(spec.spline->feature);
        eta.noalias() += basis.matrix(standardized.features.col(xj)) * c.spline;
    }
    if (!spec.linear_features.empty()) {
        Eigen::ArrayXd lin = Eigen::ArrayXd::Zero(n);
        for (std::size_t j = 0; j < spec.linear_features.size(); ++j)
            lin += c.linear[static_cast<Eigen::Index>(j)] *
                   standardized.features.col(standardized.feature_index(spec.linear_features[j]))
                       .array();
        eta.array() += lin;
    }
    return eta;
}

GammaParams predict_gamma(const FittedModel& model, const Dataset& standardized,
                          Eigen::Index row) {
    if (model.spec.family != Family::Gamma)
        throw std::invalid_argument("predict_gamma: model is not a Gamma model");
    model.check_compatible(standardized);
    return {link_exp(row_eta(model, standardized, row, 0)),
            link_exp(row_eta(model, standardized, row, 1))};
}

double predict_bernoulli(const FittedModel& model, const Dataset& standardized,
                         Eigen::Index row) {
    if (model.spec.family != Family::Bernoulli)
        throw std::invalid_argument("predict_bernoulli: model is not a Bernoulli model");
    model.check_compatible(standardized);
    return link_logit_inv(row_eta(model, standardized, row, 0));
}

PredictionTable predict_dataset(const FittedModel& model, const Dataset& standardized,
                                double threshold) {
    model.check_compatible(standardized);
    PredictionTable table;
    table.param_names = family_param_names(model.spec.family);
    const Eigen::Index n = standardized.n_rows();
    if (model.spec.family == Family::Gamma) {
        const Eigen::VectorXd eta_mean = model.linear_predictor(standardized, 0);
        const Eigen::VectorXd eta_var = model.linear_predictor(standardized, 1);
        table.params.resize(n, 2);
        table.prob.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            GammaParams p{link_exp(eta_mean[i]), link_exp(eta_var[i])};
            table.params(i, 0) = p.mean;
            table.params(i, 1) = p.variance;
            table.prob[i] = ltu_probability(p, threshold);
        }
    } else {
        const Eigen::VectorXd eta = model.linear_predictor(standardized, 0);
        table.params.resize(n, 1);
        table.prob.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            table.params(i, 0) = link_logit_inv(eta[i]);
            table.prob[i] = table.params(i, 0);
        }
    }
    return table;
}

double mean_nll(const FittedModel& model, const Dataset& standardized) {
    model.check_compatible(standardized);
    if (standardized.n_rows() == 0)
        throw std::invalid_argument("mean_nll: empty dataset");
    const bool gamma = model.spec.family == Family::Gamma;
    if (gamma && standardized.schema.outcome_kind != OutcomeKind::Duration)
        throw std::invalid_argument("mean_nll: Gamma model requires a duration outcome");
    if (!gamma && standardized.schema.outcome_kind != OutcomeKind::Binary)
        throw std::invalid_argument("mean_nll: Bernoulli model requires a binary outcome");

    double total = 0.0;
    if (gamma) {
        const Eigen::VectorXd eta_mean = model.linear_predictor(standardized, 0);
        const Eigen::VectorXd eta_var = model.linear_predictor(standardized, 1);
        for (Eigen::Index i = 0; i < standardized.n_rows(); ++i)
            total += gamma_nll(standardized.outcome[i], eta_mean[i], eta_var[i]).value;
    } else {
        const Eigen::VectorXd eta = model.linear_predictor(standardized, 0);
        for (Eigen::Index i = 0; i < standardized.n_rows(); ++i)
            total += bernoulli_nll(standardized.outcome[i], eta[i]).value;
    }
    return total / static_cast<double>(standardized.n_rows());
}

namespace {

constexpr int kModelFormatVersion = 1;

ordered_json vec_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vec_from_json(const ordered_json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

void save_model(const FittedModel& model, const std::filesystem::path& path) {
    ordered_json j;
    j["format"] = "ssddr-model";
    j["format_version"] = kModelFormatVersion;
    j["family"] = family_name(model.spec.family);

    ordered_json spec;
    ordered_json sens = ordered_json::array();
    for (const auto& col : model.spec.sensitive)
        sens.push_back({{"name", col.name}, {"categories", col.categories}});
    spec["sensitive"] = sens;
    if (model.spec.spline.has_value()) {
        const auto& s = *model.spec.spline;
        spec["spline"] = {{"feature", s.feature},
                          {"degree", s.degree},
                          {"knots", s.knots},
                          {"penalty_order", s.penalty_order},
                          {"lambda_s", s.lambda_s}};
    } else {
        spec["spline"] = nullptr;
    }
    spec["linear_features"] = model.spec.linear_features;
    spec["lambda"] = model.spec.lambda;
    j["spec"] = spec;

    j["standardization"] = {{"features", model.stats.feature_names},
                            {"min", vec_to_json(model.stats.min)},
                            {"max", vec_to_json(model.stats.max)}};

    ordered_json coefs;
    const auto names = family_param_names(model.spec.family);
    for (std::size_t k = 0; k < names.size(); ++k) {
        coefs[names[k]] = {{"group", vec_to_json(model.params[k].group)},
                           {"spline", vec_to_json(model.params[k].spline)},
                           {"linear", vec_to_json(model.params[k].linear)}};
    }
    j["coefficients"] = coefs;

    j["fit"] = {{"lambda", model.info.lambda},
                {"lambda_s", model.info.lambda_s},
                {"epochs_run", model.info.epochs_run},
                {"converged", model.info.converged},
                {"final_objective", model.info.final_objective},
                {"seed", model.info.seed}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_model: failed while writing " + path.string());
}

FittedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_model: " + path.string() + " is not valid JSON: " +
                                 e.what());
    }
    if (!j.contains("format") || j["format"] != "ssddr-model")
        throw std::runtime_error("load_model: " + path.string() + " is not a model file");
    if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
        throw std::runtime_error("load_model: unsupported model format version in " +
                                 path.string());

    FittedModel model;
    model.spec.family = family_from_name(j.at("family").get<std::string>());
    for (const auto& col : j.at("spec").at("sensitive")) {
        SensitiveColumn c;
        c.name = col.at("name").get<std::string>();
        c.categories = col.at("categories").get<std::vector<std::string>>();
        model.spec.sensitive.push_back(std::move(c));
    }
    if (!j.at("spec").at("spline").is_null()) {
        const auto& s = j.at("spec").at("spline");
        SplineConfig cfg;
        cfg.feature = s.at("feature").get<std::string>();
        cfg.degree = s.at("degree").get<int>();
        cfg.knots = s.at("knots").get<int>();
        cfg.penalty_order = s.at("penalty_order").get<int>();
        cfg.lambda_s = s.at("lambda_s").get<double>();
        model.spec.spline = cfg;
    }
    model.spec.linear_features =
        j.at("spec").at("linear_features").get<std::vector<std::string>>();
    model.spec.lambda = j.at("spec").at("lambda").get<double>();

    model.stats.feature_names =
        j.at("standardization").at("features").get<std::vector<std::string>>();
    model.stats.min = vec_from_json(j.at("standardization").at("min"));
    model.stats.max = vec_from_json(j.at("standardization").at("max"));

    for (const auto& name : family_param_names(model.spec.family)) {
        const auto& c = j.at("coefficients").at(name);
        ParamCoefs pc;
        pc.group = vec_from_json(c.at("group"));
        pc.spline = vec_from_json(c.at("spline"));
        pc.linear = vec_from_json(c.at("linear"));
        model.params.push_back(std::move(pc));
    }

    const auto& f = j.at("fit");
    model.info.lambda = f.at("lambda").get<double>();
    model.info.lambda_s = f.at("lambda_s").get<double>();
    model.info.epochs_run = f.at("epochs_run").get<int>();
    model.info.converged = f.at("converged").get<bool>();
    model.info.final_objective = f.at("final_objective").get<double>();
    model.info.seed = f.at("seed").get<std::uint64_t>();

    model.spec.validate();
    return model;
}

}  // namespace ssddr
