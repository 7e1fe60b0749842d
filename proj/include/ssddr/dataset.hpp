#ifndef SSDDR_DATASET_HPP
#define SSDDR_DATASET_HPP

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssddr {

// One categorical sensitive attribute and its closed set of levels.
struct SensitiveColumn {
    std::string name;
    std::vector<std::string> categories;
};

enum class OutcomeKind { Duration, Binary };

// Declares how to interpret a CSV: which columns are sensitive attributes,
// which are numeric features, and which is the outcome.  An empty feature
// list means "every remaining column".
struct DataSchema {
    std::vector<SensitiveColumn> sensitive;
    std::vector<std::string> features;
    std::string outcome;
    OutcomeKind outcome_kind = OutcomeKind::Duration;
};

// In-memory table: category codes per sensitive column, a dense feature
// matrix, and the outcome vector.
struct Dataset {
    DataSchema schema;  // features resolved (never empty once loaded)
    std::string split;  // optional tag: "train", "test", ...
    std::vector<std::vector<int>> sensitive_codes;  // [column][row]
    Eigen::MatrixXd features;                       // n x p, schema.features order
    Eigen::VectorXd outcome;

    Eigen::Index n_rows() const { return outcome.size(); }
    Eigen::Index n_features() const { return features.cols(); }

    // Number of intersectional cells (product of category counts).
    int cell_count() const;
    // Cell index of a row; the first declared sensitive column varies fastest.
    int cell_index(Eigen::Index row) const;
    // Labels in cell-index order, e.g. "Male-German", "Female-German", ...
    std::vector<std::string> cell_labels() const;
    // Cell index per row, convenience for group-wise computations.
    std::vector<int> cell_indices() const;

    // Binary labels: the outcome itself for binary data, 1{T >= threshold}
    // for durations.
    Eigen::VectorXd binary_labels(double threshold = 12.0) const;

    // Column of a named feature; throws if unknown.
    Eigen::Index feature_index(const std::string& name) const;
};

// Parse a CSV against the schema.  Errors carry the 1-based data row number
// and the offending column name.
Dataset load_csv(const std::filesystem::path& path, const DataSchema& schema);

// Write the declared columns back out; numeric values round-trip exactly.
void write_csv(const Dataset& data, const std::filesystem::path& path);

// Subset by row indices (e.g. to export rejected records).
Dataset select_rows(const Dataset& data, const std::vector<Eigen::Index>& rows);

// Per-feature min/max from a training split, used to map features onto
// [0, 1].  Constant columns map to 0 (and are warned about).
struct StandardizationStats {
    std::vector<std::string> feature_names;
    Eigen::VectorXd min;
    Eigen::VectorXd max;
};

// Min-max scale the features.  Without stats they are computed from `data`
// (training); with stats the same affine map is reused (validation/test),
// which may produce values outside [0, 1].
std::pair<Dataset, StandardizationStats> standardize(
    const Dataset& data, const std::optional<StandardizationStats>& stats = std::nullopt);

}  // namespace ssddr

#endif
