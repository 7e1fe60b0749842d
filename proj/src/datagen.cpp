#include "ssddr/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "ssddr/families.hpp"
#include "ssddr/rng.hpp"

namespace ssddr {

namespace {

constexpr int kCells = 4;

std::vector<SensitiveColumn> sensitive_schema() {
    return {{"gender", {"Male", "Female"}}, {"citizenship", {"German", "NonGerman"}}};
}

std::string feature_name(int j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "x%02d", j + 1);
    return buf;
}

}  // namespace

void DGPConfig::validate() const {
    if (n < 1) throw std::invalid_argument("DGPConfig: n must be >= 1");
    if (cell_probs.size() != kCells || group_mean.size() != kCells ||
        group_variance.size() != kCells)
        throw std::invalid_argument("DGPConfig: cell_probs, group_mean and group_variance "
                                    "must all have 4 entries");
    double total = 0.0;
    for (double p : cell_probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("DGPConfig: negative cell probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("DGPConfig: cell probabilities must sum to 1");
    for (double m : group_mean)
        if (!(m > 0.0)) throw std::invalid_argument("DGPConfig: group means must be positive");
    for (double v : group_variance)
        if (!(v > 0.0)) throw std::invalid_argument("DGPConfig: group variances must be positive");
    if (!std::isfinite(age_amplitude))
        throw std::invalid_argument("DGPConfig: age amplitude must be finite");
    for (double b : informative_coefs)
        if (!std::isfinite(b))
            throw std::invalid_argument("DGPConfig: informative coefficients must be finite");
    if (noise_features < 0)
        throw std::invalid_argument("DGPConfig: noise feature count must be >= 0");
    if (!(ltu_threshold > 0.0))
        throw std::invalid_argument("DGPConfig: threshold must be positive");
    if (target_prevalence.has_value() &&
        !(*target_prevalence > 0.0 && *target_prevalence < 1.0))
        throw std::invalid_argument("DGPConfig: target prevalence must be in (0, 1)");
    BSplineBasis check(spline);  // validates the spline settings
}

GeneratedData generate(const DGPConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const Eigen::Index n = config.n;
    const int n_linear =
        static_cast<int>(config.informative_coefs.size()) + config.noise_features;
    const BSplineBasis basis(config.spline);
    const int nb = basis.size();

    // Covariates: cell, age, linear features, all drawn first.
    std::vector<int> cells(static_cast<std::size_t>(n));
    for (auto& c : cells) c = rng.categorical(config.cell_probs);
    Eigen::VectorXd age(n);
    for (Eigen::Index i = 0; i < n; ++i) age[i] = rng.uniform();
    Eigen::MatrixXd features(n, n_linear);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < n_linear; ++j) features(i, j) = rng.uniform();

    // Generating coefficients before calibration.  The age effect is the
    // sinusoid sampled at the Greville abscissae, so the truth is exactly
    // representable in the model's own basis.
    Eigen::VectorXd b0_mean(kCells), b0_var(kCells);
    for (int c = 0; c < kCells; ++c) {
        b0_mean[c] = std::log(config.group_mean[static_cast<std::size_t>(c)]);
        b0_var[c] = std::log(config.group_variance[static_cast<std::size_t>(c)]);
    }
    Eigen::VectorXd spline_mean(nb);
    for (int j = 0; j < nb; ++j)
        spline_mean[j] =
            config.age_amplitude * std::sin(2.0 * std::numbers::pi * basis.greville(j));
    const Eigen::VectorXd spline_var = Eigen::VectorXd::Zero(nb);
    Eigen::VectorXd b1_mean = Eigen::VectorXd::Zero(n_linear);
    for (std::size_t j = 0; j < config.informative_coefs.size(); ++j)
        b1_mean[static_cast<Eigen::Index>(j)] = config.informative_coefs[j];
    const Eigen::VectorXd b1_var = Eigen::VectorXd::Zero(n_linear);

    const Eigen::MatrixXd bmat = basis.matrix(age);
    Eigen::VectorXd eta_mean(n), eta_var(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        eta_mean[i] = b0_mean[cells[static_cast<std::size_t>(i)]];
        eta_var[i] = b0_var[cells[static_cast<std::size_t>(i)]];
    }
    eta_mean.noalias() += bmat * spline_mean;
    eta_mean.noalias() += features * b1_mean;
    // spline_var and b1_var are zero; eta_var is the group coefficient alone.

    // Prevalence calibration: adding c to eta_mean and 2c to eta_var scales
    // durations by exp(c) while keeping every shape parameter fixed, so only
    // the rate enters the bisection.
    double shift = 0.0;
    if (config.target_prevalence.has_value()) {
        const Eigen::Index pilot = std::min<Eigen::Index>(n, 20000);
        Eigen::VectorXd shape(pilot), rate0(pilot);
        for (Eigen::Index i = 0; i < pilot; ++i) {
            shape[i] = std::exp(2.0 * eta_mean[i] - eta_var[i]);
            rate0[i] = std::exp(eta_mean[i] - eta_var[i]);
        }
        auto prevalence = [&](double c) {
            const double scale = std::exp(-c);
            double total = 0.0;
            for (Eigen::Index i = 0; i < pilot; ++i)
                total += 1.0 - special::reg_lower_gamma(
                                   shape[i], config.ltu_threshold * rate0[i] * scale);
            return total / static_cast<double>(pilot);
        };
        double lo = -5.0, hi = 10.0;
        if (prevalence(lo) > *config.target_prevalence ||
            prevalence(hi) < *config.target_prevalence)
            throw std::runtime_error("generate: prevalence target outside the calibration range");
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (prevalence(mid) < *config.target_prevalence)
                lo = mid;
            else
                hi = mid;
        }
        shift = 0.5 * (lo + hi);
        b0_mean.array() += shift;
        b0_var.array() += 2.0 * shift;
        eta_mean.array() += shift;
        eta_var.array() += 2.0 * shift;
    }

    // Rewrite the truth in the gauge the zero-initialized optimizer stays
    // in: one-hot rows and basis rows both sum to 1, so shifting mass
    // between the group block and the spline block leaves every predictor
    // unchanged; the canonical representative has equal coefficient sums.
    TruthRecord truth;
    truth.calibration_shift = shift;
    truth.ltu_threshold = config.ltu_threshold;
    truth.spline = config.spline;
    const double gauge_mean = (b0_mean.sum() - spline_mean.sum()) / (kCells + nb);
    const double gauge_var = (b0_var.sum() - spline_var.sum()) / (kCells + nb);
    truth.mean_coefs.group = (b0_mean.array() - gauge_mean).matrix();
    truth.mean_coefs.spline = (spline_mean.array() + gauge_mean).matrix();
    truth.mean_coefs.linear = b1_mean;
    truth.variance_coefs.group = (b0_var.array() - gauge_var).matrix();
    truth.variance_coefs.spline = (spline_var.array() + gauge_var).matrix();
    truth.variance_coefs.linear = b1_var;

    truth.true_mean = eta_mean.array().exp().matrix();
    truth.true_variance = eta_var.array().exp().matrix();
    truth.true_prob.resize(n);
    Eigen::VectorXd duration(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const GammaParams p{truth.true_mean[i], truth.true_variance[i]};
        truth.true_prob[i] = ltu_probability(p, config.ltu_threshold);
        double t;
        do {
            t = rng.gamma(p.shape(), p.rate());
        } while (!(t > 0.0));
        duration[i] = t;
    }

    Dataset data;
    data.schema.sensitive = sensitive_schema();
    data.schema.features.push_back(config.spline.feature);
    for (int j = 0; j < n_linear; ++j) data.schema.features.push_back(feature_name(j));
    data.schema.outcome = "duration";
    data.schema.outcome_kind = OutcomeKind::Duration;
    data.sensitive_codes.resize(2, std::vector<int>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int cell = cells[static_cast<std::size_t>(i)];
        data.sensitive_codes[0][static_cast<std::size_t>(i)] = cell % 2;  // gender fastest
        data.sensitive_codes[1][static_cast<std::size_t>(i)] = cell / 2;
    }
    data.features.resize(n, 1 + n_linear);
    data.features.col(0) = age;
    data.features.rightCols(n_linear) = features;
    data.outcome = duration;

    truth.linear_features =
        std::vector<std::string>(data.schema.features.begin() + 1, data.schema.features.end());
    return {std::move(data), std::move(truth)};
}

double true_ltu_prob(const TruthRecord& truth, Eigen::Index row) {
    if (row < 0 || row >= truth.true_prob.size())
        throw std::out_of_range("true_ltu_prob: row was not part of this generation");
    return truth.true_prob[row];
}

void write_generated_csv(const GeneratedData& generated, const std::filesystem::path& path) {
    const Dataset& data = generated.data;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_generated_csv: cannot open " + path.string() +
                                 " for writing");
    for (const auto& col : data.schema.sensitive) out << col.name << ",";
    for (const auto& name : data.schema.features) out << name << ",";
    out << data.schema.outcome << ",ltu\n";
    char buf[40];
    for (Eigen::Index i = 0; i < data.n_rows(); ++i) {
        for (std::size_t j = 0; j < data.schema.sensitive.size(); ++j)
            out << data.schema.sensitive[j].categories[static_cast<std::size_t>(
                       data.sensitive_codes[j][static_cast<std::size_t>(i)])]
                << ",";
        for (Eigen::Index j = 0; j < data.n_features(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.features(i, j));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", data.outcome[i]);
        out << buf << "," << (data.outcome[i] >= generated.truth.ltu_threshold ? 1 : 0) << "\n";
    }
    if (!out)
        throw std::runtime_error("write_generated_csv: failed while writing " + path.string());
}

namespace {

nlohmann::ordered_json coefs_to_json(const ParamCoefs& c) {
    auto vec = [](const Eigen::VectorXd& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
        return arr;
    };
    return {{"group", vec(c.group)}, {"spline", vec(c.spline)}, {"linear", vec(c.linear)}};
}

ParamCoefs coefs_from_json(const nlohmann::ordered_json& j) {
    auto vec = [](const nlohmann::ordered_json& arr) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        return v;
    };
    ParamCoefs c;
    c.group = vec(j.at("group"));
    c.spline = vec(j.at("spline"));
    c.linear = vec(j.at("linear"));
    return c;
}

}  // namespace

void write_truth(const TruthRecord& truth, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["format"] = "ssddr-truth";
    j["format_version"] = 1;
    j["calibration_shift"] = truth.calibration_shift;
    j["ltu_threshold"] = truth.ltu_threshold;
    j["spline"] = {{"feature", truth.spline.feature},
                   {"degree", truth.spline.degree},
                   {"knots", truth.spline.knots},
                   {"penalty_order", truth.spline.penalty_order},
                   {"lambda_s", truth.spline.lambda_s}};
    j["linear_features"] = truth.linear_features;
    j["mean"] = coefs_to_json(truth.mean_coefs);
    j["variance"] = coefs_to_json(truth.variance_coefs);
    auto vec = [](const Eigen::VectorXd& v) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
        return arr;
    };
    j["true_mean"] = vec(truth.true_mean);
    j["true_variance"] = vec(truth.true_variance);
    j["true_prob"] = vec(truth.true_prob);
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_truth: cannot open " + path.string() + " for writing");
    out << j.dump() << "\n";
}

TruthRecord load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_truth: cannot open " + path.string());
    nlohmann::ordered_json j;
    in >> j;
    if (!j.contains("format") || j["format"] != "ssddr-truth" ||
        j.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_truth: " + path.string() +
                                 " is not a supported truth file");
    TruthRecord truth;
    truth.calibration_shift = j.at("calibration_shift").get<double>();
    truth.ltu_threshold = j.at("ltu_threshold").get<double>();
    const auto& s = j.at("spline");
    truth.spline.feature = s.at("feature").get<std::string>();
    truth.spline.degree = s.at("degree").get<int>();
    truth.spline.knots = s.at("knots").get<int>();
    truth.spline.penalty_order = s.at("penalty_order").get<int>();
    truth.spline.lambda_s = s.at("lambda_s").get<double>();
    truth.linear_features = j.at("linear_features").get<std::vector<std::string>>();
    truth.mean_coefs = coefs_from_json(j.at("mean"));
    truth.variance_coefs = coefs_from_json(j.at("variance"));
    auto vec = [](const nlohmann::ordered_json& arr) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        return v;
    };
    truth.true_mean = vec(j.at("true_mean"));
    truth.true_variance = vec(j.at("true_variance"));
    truth.true_prob = vec(j.at("true_prob"));
    return truth;
}

}  // namespace ssddr
