#ifndef SSDDR_DATAGEN_HPP
#define SSDDR_DATAGEN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssddr/dataset.hpp"
#include "ssddr/design.hpp"
#include "ssddr/model.hpp"

namespace ssddr {

// Synthetic labor-market generator: gender x citizenship cells, uniform
// age and features on [0, 1], Gamma-distributed unemployment durations with
// group-specific mean/variance, a smooth age effect on the mean predictor,
// and a block of informative plus pure-noise linear features.
//
// Group-level defaults are flavor borrowed from published group tables, not
// ground truth about any real labor market.
struct DGPConfig {
    Eigen::Index n = 100000;
    std::vector<double> cell_probs = {0.25, 0.25, 0.25, 0.25};
    // Natural-scale cell parameters, order Male-German, Female-German,
    // Male-NonGerman, Female-NonGerman.
    std::vector<double> group_mean = {0.87, 1.11, 1.42, 1.50};
    std::vector<double> group_variance = {0.76, 1.24, 2.74, 2.99};
    // Smooth age effect on the mean predictor: amplitude * sin(2*pi*age),
    // expressed exactly in the spline basis below.
    double age_amplitude = 0.5;
    // True coefficients of the informative features (on the mean predictor);
    // noise features have true coefficient 0 on every parameter.
    std::vector<double> informative_coefs = {1.0,  -0.8,  0.6, -0.5,  0.4,
                                             -0.35, 0.3,  -0.25, 0.2, -0.15};
    int noise_features = 20;
    double ltu_threshold = 12.0;
    // When set, a common shift is added to the predictors (c on the mean,
    // 2c on the variance, preserving every shape parameter) so that the
    // mean true exceedance probability hits this value; found by bisection
    // on a pilot subsample.
    std::optional<double> target_prevalence = 0.146;
    SplineConfig spline;  // basis carrying the true age effect
    std::uint64_t seed = 1;

    void validate() const;
};

// Everything needed to score the generator's output exactly: the generating
// coefficients in the same gauge the zero-initialized optimizer converges
// to (group and spline blocks both carry an intercept direction; the
// canonical gauge equalizes their coefficient sums), and per-row true
// parameters and exceedance probabilities.
struct TruthRecord {
    ParamCoefs mean_coefs;
    ParamCoefs variance_coefs;
    double calibration_shift = 0.0;  // c: added to eta_mean, 2c to eta_variance
    double ltu_threshold = 12.0;
    SplineConfig spline;
    std::vector<std::string> linear_features;
    Eigen::VectorXd true_mean;
    Eigen::VectorXd true_variance;
    Eigen::VectorXd true_prob;
};

struct GeneratedData {
    Dataset data;
    TruthRecord truth;
};

GeneratedData generate(const DGPConfig& config);

// Oracle P(T >= threshold) of one generated row; throws on rows that were
// not part of the generation.
double true_ltu_prob(const TruthRecord& truth, Eigen::Index row);

// Standard CSV plus a derived binary "ltu" column (1{duration >= threshold}),
// so the same file serves both families.
void write_generated_csv(const GeneratedData& generated,
                         const std::filesystem::path& path);

// Truth sidecar (JSON, version-tagged).
void write_truth(const TruthRecord& truth, const std::filesystem::path& path);
TruthRecord load_truth(const std::filesystem::path& path);

}  // namespace ssddr

#endif
