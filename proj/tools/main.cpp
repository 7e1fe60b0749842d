#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "ssddr/audit.hpp"
#include "ssddr/datagen.hpp"
#include "ssddr/decision.hpp"
#include "ssddr/logging.hpp"
#include "ssddr/manifest.hpp"
#include "ssddr/optimizer.hpp"
#include "ssddr/version.hpp"

namespace fs = std::filesystem;
using namespace ssddr;

namespace {

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Dataset load_tagged(const fs::path& path, const DataSchema& schema, const std::string& tag) {
    Dataset data = load_csv(path, schema);
    data.split = tag;
    return data;
}

std::vector<double> delta_grid_of(const cli::RunConfig& config,
                                  const std::string& grid_flag) {
    if (!grid_flag.empty()) return cli::parse_grid_spec(grid_flag);
    if (!config.decision.delta_grid.empty()) return config.decision.delta_grid;
    return default_delta_grid();
}

int run_generate(const fs::path& config_path, const fs::path& out,
                 std::optional<std::uint64_t> seed) {
    cli::RunConfig config = cli::load_config(config_path);
    if (seed.has_value()) config.datagen.seed = *seed;
    const GeneratedData generated = generate(config.datagen);
    write_generated_csv(generated, out);
    const fs::path truth_path = out.string() + ".truth.json";
    write_truth(generated.truth, truth_path);

    Manifest manifest;
    manifest.command = "generate";
    manifest.seed = config.datagen.seed;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.outputs = {out.filename().string(), truth_path.filename().string()};
    write_manifest(manifest, out.string() + ".manifest.json");
    log_info("generate: wrote " + out.string() + " (" +
             std::to_string(generated.data.n_rows()) + " rows)");
    return 0;
}

int run_fit(const fs::path& config_path, const fs::path& data_path, const fs::path& out,
            std::optional<double> lambda, std::optional<std::uint64_t> seed) {
    cli::RunConfig config = cli::load_config(config_path);
    if (lambda.has_value()) config.fit.lambda = *lambda;
    if (seed.has_value()) config.fit.seed = *seed;
    const Dataset train = load_tagged(data_path, config.schema, "train");
    const auto [standardized, stats] = standardize(train);
    const ModelSpec spec = cli::make_spec(config, standardized.schema);
    const FittedModel model = fit(spec, standardized, stats, config.fit);
    save_model(model, out);

    Manifest manifest;
    manifest.command = "fit";
    manifest.seed = model.info.seed;
    manifest.lambda = model.info.lambda;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.inputs.push_back({data_path.filename().string(), file_hash(data_path)});
    manifest.outputs = {out.filename().string()};
    manifest.notes.push_back({"epochs_run", std::to_string(model.info.epochs_run)});
    manifest.notes.push_back({"converged", model.info.converged ? "true" : "false"});
    write_manifest(manifest, out.string() + ".manifest.json");
    return 0;
}

int run_tune(const fs::path& config_path, const fs::path& data_path,
             const fs::path& validation_path, const fs::path& out,
             std::optional<std::uint64_t> seed) {
    cli::RunConfig config = cli::load_config(config_path);
    if (seed.has_value()) config.fit.seed = *seed;
    const Dataset train = load_tagged(data_path, config.schema, "train");
    const auto [std_train, stats] = standardize(train);
    const Dataset validation = load_tagged(validation_path, config.schema, "validation");
    const auto [std_val, ignored] = standardize(validation, stats);
    const ModelSpec spec = cli::make_spec(config, std_train.schema);
    const std::vector<double> grid =
        config.tune.grid.empty() ? default_lambda_grid() : config.tune.grid;
    const TuneResult result =
        tune_lambda(spec, std_train, stats, std_val, grid, config.fit, config.tune.parallel);
    save_model(result.best, out);

    const fs::path table_path = out.string() + ".tune.csv";
    {
        std::ofstream table(table_path);
        if (!table) throw std::runtime_error("tune: cannot write " + table_path.string());
        table << "lambda,mean_validation_nll,status\n";
        for (std::size_t i = 0; i < result.entries.size(); ++i) {
            const TuneEntry& e = result.entries[i];
            table << num17(e.lambda) << ","
                  << (e.error.empty() ? num17(e.validation_nll) : std::string("NA")) << ","
                  << (e.error.empty() ? (i == result.selected ? "selected" : "ok") : "failed")
                  << "\n";
            if (!e.error.empty())
                log_warn("tune: lambda " + std::to_string(e.lambda) + " failed: " + e.error);
        }
    }

    Manifest manifest;
    manifest.command = "tune";
    manifest.seed = config.fit.seed;
    manifest.lambda = result.entries[result.selected].lambda;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.inputs.push_back({data_path.filename().string(), file_hash(data_path)});
    manifest.inputs.push_back(
        {validation_path.filename().string(), file_hash(validation_path)});
    manifest.outputs = {out.filename().string(), table_path.filename().string()};
    write_manifest(manifest, out.string() + ".manifest.json");
    return 0;
}

int run_predict(const fs::path& config_path, const fs::path& model_path,
                const fs::path& data_path, const fs::path& out) {
    const cli::RunConfig config = cli::load_config(config_path);
    const FittedModel model = load_model(model_path);
    const Dataset data = load_tagged(data_path, config.schema, "test");
    const auto [standardized, ignored] = standardize(data, model.stats);
    const PredictionTable preds =
        predict_dataset(model, standardized, config.decision.ltu_threshold);

    std::ofstream table(out);
    if (!table) throw std::runtime_error("predict: cannot write " + out.string());
    table << "row,cell";
    for (const auto& name : preds.param_names) table << "," << name;
    table << ",prob\n";
    const std::vector<std::string> labels = model.cell_labels();
    for (Eigen::Index i = 0; i < preds.prob.size(); ++i) {
        table << i << "," << labels[static_cast<std::size_t>(data.cell_index(i))];
        for (Eigen::Index k = 0; k < preds.params.cols(); ++k)
            table << "," << num17(preds.params(i, k));
        table << "," << num17(preds.prob[i]) << "\n";
    }
    table.close();

    Manifest manifest;
    manifest.command = "predict";
    manifest.seed = model.info.seed;
    manifest.lambda = model.info.lambda;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.inputs.push_back({model_path.filename().string(), file_hash(model_path)});
    manifest.inputs.push_back({data_path.filename().string(), file_hash(data_path)});
    manifest.outputs = {out.filename().string()};
    write_manifest(manifest, out.string() + ".manifest.json");
    return 0;
}

int run_decide(const fs::path& config_path, const fs::path& model_path,
               const fs::path& data_path, const fs::path& out_dir,
               std::optional<double> delta) {
    cli::RunConfig config = cli::load_config(config_path);
    if (delta.has_value()) config.decision.delta = *delta;
    const FittedModel model = load_model(model_path);
    const Dataset data = load_tagged(data_path, config.schema, "test");
    const auto [standardized, ignored] = standardize(data, model.stats);
    const DecisionPolicy policy = DecisionPolicy::symmetric(config.decision.delta);
    const DecideResult result =
        decide_dataset(model, standardized, policy, config.decision.ltu_threshold);

    fs::create_directories(out_dir);
    {
        std::ofstream table(out_dir / "decisions.csv");
        if (!table) throw std::runtime_error("decide: cannot write decisions.csv");
        table << "row,cell,prob,decision\n";
        const std::vector<std::string> labels = model.cell_labels();
        for (Eigen::Index i = 0; i < result.prob.size(); ++i)
            table << i << "," << labels[static_cast<std::size_t>(data.cell_index(i))] << ","
                  << num17(result.prob[i]) << ","
                  << static_cast<int>(result.decisions[static_cast<std::size_t>(i)]) << "\n";
    }
    write_routing_csv(result, out_dir / "routing.csv");
    // Rejected rows go to the downstream (human) queue in the input format.
    std::vector<Eigen::Index> rejected;
    for (std::size_t i = 0; i < result.decisions.size(); ++i)
        if (result.decisions[i] == Decision::Reject)
            rejected.push_back(static_cast<Eigen::Index>(i));
    write_csv(select_rows(data, rejected), out_dir / "rejected.csv");

    Manifest manifest;
    manifest.command = "decide";
    manifest.seed = model.info.seed;
    manifest.lambda = model.info.lambda;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.inputs.push_back({model_path.filename().string(), file_hash(model_path)});
    manifest.inputs.push_back({data_path.filename().string(), file_hash(data_path)});
    manifest.outputs = {"decisions.csv", "routing.csv", "rejected.csv"};
    manifest.notes.push_back({"delta", num17(config.decision.delta)});
    write_manifest(manifest, out_dir / "manifest.json");
    return 0;
}

int run_sweep(const fs::path& config_path, const fs::path& model_path,
              const fs::path& data_path, const fs::path& out,
              const std::string& grid_flag) {
    const cli::RunConfig config = cli::load_config(config_path);
    const FittedModel model = load_model(model_path);
    const Dataset data = load_tagged(data_path, config.schema, "test");
    const auto [standardized, ignored] = standardize(data, model.stats);
    const PredictionTable preds =
        predict_dataset(model, standardized, config.decision.ltu_threshold);
    const Eigen::VectorXd labels = data.binary_labels(config.decision.ltu_threshold);
    const std::vector<CurvePoint> points =
        sweep(preds.prob, labels, data.cell_indices(), model.cell_count(),
              delta_grid_of(config, grid_flag));
    write_curves_csv(points, model.cell_labels(), out);

    Manifest manifest;
    manifest.command = "sweep";
    manifest.seed = model.info.seed;
    manifest.lambda = model.info.lambda;
    manifest.inputs.push_back({config_path.filename().string(), file_hash(config_path)});
    manifest.inputs.push_back({model_path.filename().string(), file_hash(model_path)});
    manifest.inputs.push_back({data_path.filename().string(), file_hash(data_path)});
    manifest.outputs = {out.filename().string()};
    write_manifest(manifest, out.string() + ".manifest.json");
    return 0;
}

int run_audit(const fs::path& config_path, const fs::path& model_path,
              const fs::path& data_path, const fs::path& out_dir,
              const std::string& grid_flag) {
    const cli::RunConfig config = cli::load_config(config_path);
    const FittedModel model = load_model(model_path);
    const Dataset data = load_tagged(data_path, config.schema, "test");
    audit_report(model, data, delta_grid_of(config, grid_flag), out_dir,
                 config.decision.ltu_threshold, config.decision.importance_top_n,
                 {{config_path.filename().string(), config_path},
                  {model_path.filename().string(), model_path},
                  {data_path.filename().string(), data_path}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributional regression with reject-option decisions.\n"
                 "Set SSDDR_LOG=quiet|warn|info to control stderr verbosity."};
    app.require_subcommand(1);

    std::string config_path, data_path, validation_path, model_path, out_path, grid_flag;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda, delta;

    auto* gen = app.add_subcommand("generate", "Generate synthetic data with known truth");
    gen->add_option("--config", config_path, "Run configuration (JSON)")->required();
    gen->add_option("--out", out_path, "Output CSV path")->required();
    gen->add_option("--seed", seed, "Override datagen seed");

    auto* fit_cmd = app.add_subcommand("fit", "Fit a model on training data");
    fit_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    fit_cmd->add_option("--data", data_path, "Training CSV")->required();
    fit_cmd->add_option("--out", out_path, "Output model path")->required();
    fit_cmd->add_option("--lambda", lambda, "Override L1 weight");
    fit_cmd->add_option("--seed", seed, "Override fit seed");

    auto* tune = app.add_subcommand("tune", "Select lambda on a validation split");
    tune->add_option("--config", config_path, "Run configuration (JSON)")->required();
    tune->add_option("--data", data_path, "Training CSV")->required();
    tune->add_option("--validation", validation_path, "Validation CSV")->required();
    tune->add_option("--out", out_path, "Output model path (best lambda)")->required();
    tune->add_option("--seed", seed, "Override fit seed");

    auto* predict = app.add_subcommand("predict", "Per-row parameters and probabilities");
    predict->add_option("--config", config_path, "Run configuration (JSON)")->required();
    predict->add_option("--model", model_path, "Fitted model file")->required();
    predict->add_option("--data", data_path, "Input CSV")->required();
    predict->add_option("--out", out_path, "Output CSV path")->required();

    auto* decide = app.add_subcommand("decide", "Apply the reject-option rule");
    decide->add_option("--config", config_path, "Run configuration (JSON)")->required();
    decide->add_option("--model", model_path, "Fitted model file")->required();
    decide->add_option("--data", data_path, "Input CSV")->required();
    decide->add_option("--out", out_path, "Output directory")->required();
    decide->add_option("--delta", delta, "Band half-width in [0, 0.5]");

    auto* sweep_cmd = app.add_subcommand("sweep", "Coverage/accuracy curves over delta");
    sweep_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sweep_cmd->add_option("--model", model_path, "Fitted model file")->required();
    sweep_cmd->add_option("--data", data_path, "Input CSV")->required();
    sweep_cmd->add_option("--out", out_path, "Output CSV path")->required();
    sweep_cmd->add_option("--delta-grid", grid_flag, "Grid as start:stop:step");

    auto* audit = app.add_subcommand("audit", "Full report bundle (tables + curves)");
    audit->add_option("--config", config_path, "Run configuration (JSON)")->required();
    audit->add_option("--model", model_path, "Fitted model file")->required();
    audit->add_option("--data", data_path, "Input CSV")->required();
    audit->add_option("--out", out_path, "Output directory")->required();
    audit->add_option("--delta-grid", grid_flag, "Grid as start:stop:step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) return run_generate(config_path, out_path, seed);
        if (fit_cmd->parsed()) return run_fit(config_path, data_path, out_path, lambda, seed);
        if (tune->parsed())
            return run_tune(config_path, data_path, validation_path, out_path, seed);
        if (predict->parsed())
            return run_predict(config_path, model_path, data_path, out_path);
        if (decide->parsed())
            return run_decide(config_path, model_path, data_path, out_path, delta);
        if (sweep_cmd->parsed())
            return run_sweep(config_path, model_path, data_path, out_path, grid_flag);
        if (audit->parsed())
            return run_audit(config_path, model_path, data_path, out_path, grid_flag);
    } catch (const std::exception& e) {
        // First line is machine-parseable; anything after is human detail.
        const std::string what = e.what();
        const std::size_t nl = what.find('\n');
        std::cerr << "error: " << app.get_subcommands().front()->get_name() << ": "
                  << what.substr(0, nl) << "\n";
        if (nl != std::string::npos) std::cerr << what.substr(nl + 1) << "\n";
        return 1;
    }
    return 0;
}
