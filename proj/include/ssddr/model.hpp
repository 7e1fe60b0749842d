#ifndef SSDDR_MODEL_HPP
#define SSDDR_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssddr/dataset.hpp"
#include "ssddr/design.hpp"
#include "ssddr/families.hpp"

namespace ssddr {

enum class Family { Gamma, Bernoulli };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Names of the distribution parameters a family models.
std::vector<std::string> family_param_names(Family f);

// Structural description of a model: which family, which sensitive cells,
// which feature gets the smooth term, which features enter linearly, and
// the penalty weights.
struct ModelSpec {
    Family family = Family::Gamma;
    std::vector<SensitiveColumn> sensitive;
    std::optional<SplineConfig> spline;  // nullopt: no smooth block
    std::vector<std::string> linear_features;
    double lambda = 1e-4;  // L1 weight on the linear block

    void validate() const;
};

// Coefficients of one distribution parameter, split by design block.
struct ParamCoefs {
    Eigen::VectorXd group;   // one per sensitive cell
    Eigen::VectorXd spline;  // empty when the spec has no smooth term
    Eigen::VectorXd linear;  // one per linear feature
};

struct FitInfo {
    double lambda = 0.0;
    double lambda_s = 0.0;
    int epochs_run = 0;
    bool converged = false;
    double final_objective = 0.0;
    std::uint64_t seed = 0;
    // Penalized objective after each epoch (non-increasing).  Fit-time
    // diagnostic only; not serialized.
    std::vector<double> objective_history;
};

// Per-row predictions: params(i, k) is the k-th distribution parameter of
// row i on the natural scale; prob is the decision probability (long-term
// probability for Gamma, p itself for Bernoulli).
struct PredictionTable {
    std::vector<std::string> param_names;
    Eigen::MatrixXd params;
    Eigen::VectorXd prob;
};

struct FittedModel {
    ModelSpec spec;
    StandardizationStats stats;
    std::vector<ParamCoefs> params;  // Gamma: [mean, variance]; Bernoulli: [p]
    FitInfo info;

    int cell_count() const;
    std::vector<std::string> cell_labels() const;

    // Linear predictor eta for one distribution parameter, all rows.
    Eigen::VectorXd linear_predictor(const Dataset& standardized, std::size_t param) const;

    // Checks the dataset against the spec (sensitive schema, features).
    void check_compatible(const Dataset& data) const;
};

// Natural parameters of a single standardized row.
GammaParams predict_gamma(const FittedModel& model, const Dataset& standardized,
                          Eigen::Index row);
double predict_bernoulli(const FittedModel& model, const Dataset& standardized,
                         Eigen::Index row);

// All rows at once; `threshold` feeds the Gamma long-duration probability.
PredictionTable predict_dataset(const FittedModel& model, const Dataset& standardized,
                                double threshold = 12.0);

// Mean per-row negative log-likelihood of the data under the model
// (unpenalized), used for validation scoring.
double mean_nll(const FittedModel& model, const Dataset& standardized);

// JSON serialization with a format version tag.  Doubles are written with
// 17 significant digits, so save -> load -> save is byte-identical.
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace ssddr

#endif
