#ifndef SSDDR_DESIGN_HPP
#define SSDDR_DESIGN_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ssddr/dataset.hpp"

namespace ssddr {

enum class PenaltyKind { None, L1, Quadratic };

// One additive block of the design: its columns, how it is penalized, and
// column names for reporting.  Quadratic blocks carry their penalty matrix.
struct DesignBlock {
    Eigen::MatrixXd matrix;
    PenaltyKind penalty = PenaltyKind::None;
    Eigen::MatrixXd penalty_matrix;  // only for PenaltyKind::Quadratic
    std::vector<std::string> names;
};

// Smooth-term configuration: a cubic B-spline basis on [0, 1] by default,
// with 20 equally spaced knots and a second-order difference penalty.
struct SplineConfig {
    std::string feature = "age";
    int degree = 3;
    int knots = 20;          // interior knot count, including both endpoints
    int penalty_order = 2;
    double lambda_s = 1.0;
};

// B-spline basis on [0, 1]: `knots` equally spaced breakpoints, extended by
// `degree` knots on each side at the same spacing.  Evaluation outside the
// domain extrapolates the boundary polynomial pieces.
class BSplineBasis {
  public:
    explicit BSplineBasis(const SplineConfig& config);

    int size() const { return n_basis_; }
    int degree() const { return degree_; }

    // Basis function values at a point (row of the design matrix).
    Eigen::RowVectorXd row(double x) const;
    // Stacked rows for a vector of points.
    Eigen::MatrixXd matrix(const Eigen::VectorXd& x) const;
    // D'D for the difference matrix D of the configured order.
    Eigen::MatrixXd difference_penalty() const;
    // Greville abscissa of basis function j (its "center of mass").
    double greville(int j) const;

  private:
    int degree_;
    int n_basis_;
    int penalty_order_;
    std::vector<double> knots_;  // extended knot vector
};

// Intersectional one-hot block: one column per cell, first declared
// sensitive column varying fastest.  Rows sum to one.
DesignBlock one_hot(const Dataset& data);

// Smooth block for one feature; warns when the distinct values cannot
// identify the basis dimension.
DesignBlock bspline_block(const Eigen::VectorXd& x, const SplineConfig& config);

// Plain linear block (L1-penalized downstream).
DesignBlock linear_block(const Eigen::MatrixXd& columns, std::vector<std::string> names);

}  // namespace ssddr

#endif
