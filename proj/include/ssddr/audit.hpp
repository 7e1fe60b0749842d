#ifndef SSDDR_AUDIT_HPP
#define SSDDR_AUDIT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "ssddr/dataset.hpp"
#include "ssddr/model.hpp"

namespace ssddr {

// One row of the group table: cell-level distribution parameters with every
// non-group term at zero, i.e. exp of the raw group coefficients, plus the
// variance factor sigma^2 / mu^2 (the Fano-style relative dispersion).
struct GroupTableRow {
    std::string cell;
    double mean = 0.0;
    double variance = 0.0;
    double variance_factor = 0.0;
};

// Gamma models only; a Bernoulli model has no variance to tabulate.
std::vector<GroupTableRow> group_table(const FittedModel& model);

struct ImportanceRow {
    std::string feature;
    double coef = 0.0;    // link-scale coefficient
    double factor = 0.0;  // exp(coef): multiplicative effect of a 0 -> 1 move
};

struct ImportanceTable {
    std::string param;  // which distribution parameter
    std::vector<ImportanceRow> rows;
    bool truncated = false;  // true when top_n exceeded the feature count
};

// Rank the L1-block features of one distribution parameter by |coefficient|
// descending (ties keep column order) and keep the top_n.
ImportanceTable importance(const FittedModel& model, std::size_t param, int top_n);

// Write the full audit bundle into a directory: group_table.csv (Gamma
// only), importance_<param>.csv per parameter, curves_overall.csv,
// curves_groups.csv, reject_by_group.csv, and a manifest.  `test` is raw
// (unstandardized) data; the model's training stats are applied internally.
// `inputs` are files to record by content hash in the manifest.
void audit_report(const FittedModel& model, const Dataset& test,
                  const std::vector<double>& delta_grid,
                  const std::filesystem::path& out_dir, double threshold = 12.0,
                  int importance_top_n = 5,
                  const std::vector<std::pair<std::string, std::filesystem::path>>& inputs = {});

}  // namespace ssddr

#endif
