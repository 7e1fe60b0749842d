#include "ssddr/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ssddr/logging.hpp"

namespace ssddr {

BSplineBasis::BSplineBasis(const SplineConfig& config)
    : degree_(config.degree), penalty_order_(config.penalty_order) {
    if (config.degree < 1) throw std::invalid_argument("BSplineBasis: degree must be >= 1");
    if (config.knots < config.degree + 1)
        throw std::invalid_argument("BSplineBasis: need at least degree + 1 knots");
    n_basis_ = config.knots - 1 + config.degree;
    if (config.penalty_order < 1 || config.penalty_order >= n_basis_)
        throw std::invalid_argument(
            "BSplineBasis: penalty order must be in [1, number of basis functions)");

    // Equally spaced breakpoints on [0, 1], extended degree times on each
    // side at the same spacing so every basis function has full support.
    const double h = 1.0 / (config.knots - 1);
    const int total = config.knots + 2 * config.degree;
    knots_.resize(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i)
        knots_[static_cast<std::size_t>(i)] = (i - config.degree) * h;
}

Eigen::RowVectorXd BSplineBasis::row(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("BSplineBasis: x must be finite");
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(n_basis_);

    // Knot span containing x, clamped to the valid range so points outside
    // [0, 1] use the boundary polynomial pieces.
    int span = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) -
                                knots_.begin()) - 1;
    span = std::clamp(span, degree_, n_basis_ - 1);

    // Cox-de Boor triangle for the degree_+1 functions alive on this span.
    std::vector<double> vals(static_cast<std::size_t>(degree_) + 1, 0.0);
    std::vector<double> left(static_cast<std::size_t>(degree_) + 1, 0.0);
    std::vector<double> right(static_cast<std::size_t>(degree_) + 1, 0.0);
    vals[0] = 1.0;
    for (int j = 1; j <= degree_; ++j) {
        left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] +
                                 left[static_cast<std::size_t>(j - r)];
            const double temp = vals[static_cast<std::size_t>(r)] / denom;
            vals[static_cast<std::size_t>(r)] =
                saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        vals[static_cast<std::size_t>(j)] = saved;
    }
    for (int j = 0; j <= degree_; ++j)
        out[span - degree_ + j] = vals[static_cast<std::size_t>(j)];
    return out;
}

Eigen::MatrixXd BSplineBasis::matrix(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out(x.size(), n_basis_);
    for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = row(x[i]);
    return out;
}

Eigen::MatrixXd BSplineBasis::difference_penalty() const {
    // D has one row per q-th order difference of adjacent coefficients.
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n_basis_, n_basis_);
    for (int q = 0; q < penalty_order_; ++q) {
        Eigen::MatrixXd next(d.rows() - 1, d.cols());
        for (Eigen::Index i = 0; i + 1 < d.rows(); ++i) next.row(i) = d.row(i + 1) - d.row(i);
        d = std::move(next);
    }
    return d.transpose() * d;
}

double BSplineBasis::greville(int j) const {
    if (j < 0 || j >= n_basis_) throw std::out_of_range("BSplineBasis::greville: index");
    double sum = 0.0;
    for (int i = 1; i <= degree_; ++i) sum += knots_[static_cast<std::size_t>(j + i)];
    return sum / degree_;
}

DesignBlock one_hot(const Dataset& data) {
    DesignBlock block;
    const int cells = data.cell_count();
    block.matrix = Eigen::MatrixXd::Zero(data.n_rows(), cells);
    for (Eigen::Index i = 0; i < data.n_rows(); ++i)
        block.matrix(i, data.cell_index(i)) = 1.0;
    block.penalty = PenaltyKind::None;
    block.names = data.cell_labels();
    return block;
}

DesignBlock bspline_block(const Eigen::VectorXd& x, const SplineConfig& config) {
    BSplineBasis basis(config);
    std::set<double> distinct(x.begin(), x.end());
    if (static_cast<int>(distinct.size()) < basis.size())
        log_warn("bspline_block: " + std::to_string(distinct.size()) +
                 " distinct values for a basis of dimension " + std::to_string(basis.size()) +
                 "; the smooth term is not identifiable from this data alone");

    DesignBlock block;
    block.matrix = basis.matrix(x);
    block.penalty = PenaltyKind::Quadratic;
    block.penalty_matrix = basis.difference_penalty();
    block.names.reserve(static_cast<std::size_t>(basis.size()));
    for (int j = 0; j < basis.size(); ++j)
        block.names.push_back(config.feature + "_s" + std::to_string(j));
    return block;
}

DesignBlock linear_block(const Eigen::MatrixXd& columns, std::vector<std::string> names) {
    if (static_cast<std::size_t>(columns.cols()) != names.size())
        throw std::invalid_argument("linear_block: one name per column required");
    DesignBlock block;
    block.matrix = columns;
    block.penalty = PenaltyKind::L1;
    block.names = std::move(names);
    return block;
}

}  // namespace ssddr
