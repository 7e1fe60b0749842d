#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ssddr::cli {

using nlohmann::ordered_json;

namespace {

// Flags unexpected keys so config typos fail loudly instead of silently
// falling back to defaults.
void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& where, std::vector<std::string>& errors) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            errors.push_back(where + ": unknown key '" + key + "'");
}

std::vector<double> grid_from_json(const ordered_json& j, const std::string& where,
                                   std::vector<std::string>& errors) {
    std::vector<double> grid;
    if (j.is_array()) {
        for (const auto& v : j) grid.push_back(v.get<double>());
    } else if (j.is_object()) {
        check_keys(j, {"start", "stop", "step"}, where, errors);
        const double start = j.value("start", 0.0);
        const double stop = j.value("stop", 0.5);
        const double step = j.value("step", 0.005);
        if (!(step > 0.0) || stop < start) {
            errors.push_back(where + ": need step > 0 and stop >= start");
            return grid;
        }
        for (int i = 0;; ++i) {
            const double v = start + i * step;
            if (v > stop + step * 1e-9) break;
            grid.push_back(std::min(v, stop));
        }
    } else {
        errors.push_back(where + ": expected an array or {start, stop, step}");
    }
    return grid;
}

}  // namespace

std::vector<double> parse_grid_spec(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ':')) parts.push_back(std::stod(token));
    if (parts.size() != 3)
        throw std::invalid_argument("grid spec must be start:stop:step, got '" + text + "'");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start)
        throw std::invalid_argument("grid spec needs step > 0 and stop >= start");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double v = start + i * step;
        if (v > stop + step * 1e-9) break;
        grid.push_back(std::min(v, stop));
    }
    return grid;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config " + path.string() + " is not valid JSON: " + e.what());
    }

    RunConfig config;
    std::vector<std::string> errors;
    check_keys(j, {"schema", "family", "spline", "fit", "tune", "decision", "datagen"},
               "config", errors);

    // ---- schema ----
    if (j.contains("schema")) {
        const auto& s = j["schema"];
        check_keys(s, {"sensitive", "features", "outcome"}, "schema", errors);
        if (s.contains("sensitive")) {
            for (const auto& col : s["sensitive"]) {
                SensitiveColumn c;
                c.name = col.value("name", "");
                if (col.contains("categories"))
                    c.categories = col["categories"].get<std::vector<std::string>>();
                if (c.name.empty())
                    errors.push_back("schema.sensitive: column without a name");
                if (c.categories.empty())
                    errors.push_back("schema.sensitive: column '" + c.name +
                                     "' has no categories");
                config.schema.sensitive.push_back(std::move(c));
            }
        }
        if (config.schema.sensitive.empty())
            errors.push_back("schema.sensitive: at least one sensitive column is required");
        if (s.contains("features"))
            config.schema.features = s["features"].get<std::vector<std::string>>();
        if (s.contains("outcome")) {
            const auto& o = s["outcome"];
            check_keys(o, {"name", "kind"}, "schema.outcome", errors);
            config.schema.outcome = o.value("name", "");
            const std::string kind = o.value("kind", "duration");
            if (kind == "duration")
                config.schema.outcome_kind = OutcomeKind::Duration;
            else if (kind == "binary")
                config.schema.outcome_kind = OutcomeKind::Binary;
            else
                errors.push_back("schema.outcome.kind: expected duration or binary, got '" +
                                 kind + "'");
        }
        if (config.schema.outcome.empty())
            errors.push_back("schema.outcome: an outcome column name is required");
    } else {
        errors.push_back("config: missing 'schema' section");
    }

    // ---- family ----
    const std::string family = j.value("family", "gamma");
    try {
        config.family = family_from_name(family);
    } catch (const std::exception& e) {
        errors.push_back(std::string("family: ") + e.what());
    }
    if (config.family == Family::Gamma && config.schema.outcome_kind != OutcomeKind::Duration)
        errors.push_back("family gamma requires outcome kind 'duration'");
    if (config.family == Family::Bernoulli && config.schema.outcome_kind != OutcomeKind::Binary)
        errors.push_back("family bernoulli requires outcome kind 'binary'");

    // ---- spline ----
    if (j.contains("spline") && !j["spline"].is_null()) {
        const auto& s = j["spline"];
        check_keys(s, {"feature", "degree", "knots", "penalty_order", "lambda_s"}, "spline",
                   errors);
        SplineConfig cfg;
        cfg.feature = s.value("feature", cfg.feature);
        cfg.degree = s.value("degree", cfg.degree);
        cfg.knots = s.value("knots", cfg.knots);
        cfg.penalty_order = s.value("penalty_order", cfg.penalty_order);
        cfg.lambda_s = s.value("lambda_s", cfg.lambda_s);
        try {
            BSplineBasis check(cfg);
        } catch (const std::exception& e) {
            errors.push_back(std::string("spline: ") + e.what());
        }
        if (!(cfg.lambda_s >= 0.0) || !std::isfinite(cfg.lambda_s))
            errors.push_back("spline.lambda_s must be finite and >= 0");
        if (!config.schema.features.empty()) {
            bool found = false;
            for (const auto& f : config.schema.features) found = found || f == cfg.feature;
            if (!found)
                errors.push_back("spline.feature '" + cfg.feature +
                                 "' is not in schema.features");
        }
        config.spline = cfg;
    }

    // ---- fit ----
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        check_keys(f, {"lambda", "max_epochs", "tol", "step_init", "step_shrink",
                       "sufficient_decrease", "seed"},
                   "fit", errors);
        if (f.contains("lambda")) config.fit.lambda = f["lambda"].get<double>();
        config.fit.max_epochs = f.value("max_epochs", config.fit.max_epochs);
        config.fit.tol = f.value("tol", config.fit.tol);
        config.fit.step_init = f.value("step_init", config.fit.step_init);
        config.fit.step_shrink = f.value("step_shrink", config.fit.step_shrink);
        config.fit.sufficient_decrease =
            f.value("sufficient_decrease", config.fit.sufficient_decrease);
        config.fit.seed = f.value("seed", config.fit.seed);
        if (config.fit.lambda.has_value() &&
            (!(*config.fit.lambda >= 0.0) || !std::isfinite(*config.fit.lambda)))
            errors.push_back("fit.lambda must be finite and >= 0");
        if (config.fit.max_epochs < 1) errors.push_back("fit.max_epochs must be >= 1");
        if (!(config.fit.tol > 0.0)) errors.push_back("fit.tol must be > 0");
        if (!(config.fit.step_init > 0.0)) errors.push_back("fit.step_init must be > 0");
        if (!(config.fit.step_shrink > 0.0 && config.fit.step_shrink < 1.0))
            errors.push_back("fit.step_shrink must be in (0, 1)");
    }

    // ---- tune ----
    if (j.contains("tune")) {
        const auto& t = j["tune"];
        check_keys(t, {"grid", "parallel"}, "tune", errors);
        if (t.contains("grid")) config.tune.grid = grid_from_json(t["grid"], "tune.grid", errors);
        config.tune.parallel = t.value("parallel", true);
        for (double l : config.tune.grid)
            if (!(l >= 0.0) || !std::isfinite(l)) {
                errors.push_back("tune.grid: values must be finite and >= 0");
                break;
            }
    }

    // ---- decision ----
    if (j.contains("decision")) {
        const auto& d = j["decision"];
        check_keys(d, {"delta", "delta_grid", "ltu_threshold", "importance_top_n"}, "decision",
                   errors);
        config.decision.delta = d.value("delta", config.decision.delta);
        config.decision.ltu_threshold =
            d.value("ltu_threshold", config.decision.ltu_threshold);
        config.decision.importance_top_n =
            d.value("importance_top_n", config.decision.importance_top_n);
        if (d.contains("delta_grid"))
            config.decision.delta_grid =
                grid_from_json(d["delta_grid"], "decision.delta_grid", errors);
        if (!(config.decision.delta >= 0.0 && config.decision.delta <= 0.5))
            errors.push_back("decision.delta must be in [0, 0.5]");
        if (!(config.decision.ltu_threshold > 0.0))
            errors.push_back("decision.ltu_threshold must be positive");
        if (config.decision.importance_top_n < 1)
            errors.push_back("decision.importance_top_n must be >= 1");
        for (double v : config.decision.delta_grid)
            if (!(v >= 0.0 && v <= 0.5)) {
                errors.push_back("decision.delta_grid: values must be in [0, 0.5]");
                break;
            }
    }

    // ---- datagen ----
    if (j.contains("datagen")) {
        const auto& g = j["datagen"];
        check_keys(g,
                   {"n", "cell_probs", "group_mean", "group_variance", "age_amplitude",
                    "informative_coefs", "noise_features", "ltu_threshold",
                    "target_prevalence", "seed"},
                   "datagen", errors);
        config.datagen.n = g.value("n", config.datagen.n);
        if (g.contains("cell_probs"))
            config.datagen.cell_probs = g["cell_probs"].get<std::vector<double>>();
        if (g.contains("group_mean"))
            config.datagen.group_mean = g["group_mean"].get<std::vector<double>>();
        if (g.contains("group_variance"))
            config.datagen.group_variance = g["group_variance"].get<std::vector<double>>();
        config.datagen.age_amplitude = g.value("age_amplitude", config.datagen.age_amplitude);
        if (g.contains("informative_coefs"))
            config.datagen.informative_coefs =
                g["informative_coefs"].get<std::vector<double>>();
        config.datagen.noise_features =
            g.value("noise_features", config.datagen.noise_features);
        config.datagen.ltu_threshold = g.value("ltu_threshold", config.datagen.ltu_threshold);
        if (g.contains("target_prevalence")) {
            if (g["target_prevalence"].is_null())
                config.datagen.target_prevalence.reset();
            else
                config.datagen.target_prevalence = g["target_prevalence"].get<double>();
        }
        config.datagen.seed = g.value("seed", config.datagen.seed);
        if (config.spline.has_value()) config.datagen.spline = *config.spline;
        try {
            config.datagen.validate();
        } catch (const std::exception& e) {
            errors.push_back(std::string("datagen: ") + e.what());
        }
    } else if (config.spline.has_value()) {
        config.datagen.spline = *config.spline;
    }

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "config validation failed (" << errors.size() << " problem"
            << (errors.size() == 1 ? "" : "s") << ")";
        for (const auto& e : errors) msg << "\n  - " << e;
        throw std::runtime_error(msg.str());
    }
    return config;
}

ModelSpec make_spec(const RunConfig& config, const DataSchema& resolved) {
    ModelSpec spec;
    spec.family = config.family;
    spec.sensitive = config.schema.sensitive;
    spec.spline = config.spline;
    for (const auto& name : resolved.features)
        if (!config.spline.has_value() || name != config.spline->feature)
            spec.linear_features.push_back(name);
    if (config.fit.lambda.has_value()) spec.lambda = *config.fit.lambda;
    spec.validate();
    return spec;
}

}  // namespace ssddr::cli
