#ifndef SSDDR_DECISION_HPP
#define SSDDR_DECISION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssddr/model.hpp"

namespace ssddr {

// Reject-option band: classify 0 below t_lo, 1 above t_hi, abstain inside
// [t_lo, t_hi] (boundaries abstain).
struct DecisionPolicy {
    double t_lo = 0.0;
    double t_hi = 1.0;

    // Symmetric band from a sharpness parameter delta in [0, 0.5]:
    // t_lo = delta, t_hi = 1 - delta.  delta = 0.5 classifies everything
    // except p exactly 0.5; delta = 0 abstains everywhere.
    static DecisionPolicy symmetric(double delta);

    void validate() const;
};

enum class Decision : int { Negative = 0, Positive = 1, Reject = 2 };

Decision decide(double p, const DecisionPolicy& policy);

// Coverage and conditional accuracy of one group at one operating point.
struct GroupCurve {
    double prop_classified = 0.0;
    double prop_rejected = 0.0;
    std::optional<double> accuracy;  // empty when nothing was classified
};

struct CurvePoint {
    double delta = 0.0;
    GroupCurve overall;
    std::vector<GroupCurve> groups;
};

// Evaluate the symmetric policy across a delta grid.  `labels` are 0/1
// ground truth, `groups` are cell indices in [0, n_groups).
std::vector<CurvePoint> sweep(const Eigen::VectorXd& p, const Eigen::VectorXd& labels,
                              const std::vector<int>& groups, int n_groups,
                              const std::vector<double>& delta_grid);

// 101 points: 0, 0.005, ..., 0.5.
std::vector<double> default_delta_grid();

// delta,group,... rows for the overall population and each group; accuracy
// prints as NA when undefined.
void write_curves_csv(const std::vector<CurvePoint>& points,
                      const std::vector<std::string>& group_labels,
                      const std::filesystem::path& path);

struct RoutingCounts {
    std::int64_t negative = 0;
    std::int64_t positive = 0;
    std::int64_t rejected = 0;
    std::int64_t total() const { return negative + positive + rejected; }
};

struct DecideResult {
    std::vector<Decision> decisions;
    Eigen::VectorXd prob;
    std::vector<RoutingCounts> by_group;  // cell order
    RoutingCounts overall;
    std::vector<std::string> group_labels;
};

// Apply a policy to every row of a standardized dataset; `threshold` feeds
// the Gamma long-duration probability.
DecideResult decide_dataset(const FittedModel& model, const Dataset& standardized,
                            const DecisionPolicy& policy, double threshold = 12.0);

void write_routing_csv(const DecideResult& result, const std::filesystem::path& path);

}  // namespace ssddr

#endif
