#include "qtf/gev.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "qtf/errors.hpp"

namespace qtf {

namespace {

double symmetric_condition_estimate(const MatrixXd& b) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(b, Eigen::EigenvaluesOnly);
    const VectorXd& ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (hi <= 0.0) return std::numeric_limits<double>::infinity();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace

GevResult solve_generalized_eigen(const MatrixXd& a, const MatrixXd& b, int d,
                                  EigenOrder order) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n || b.rows() != n || b.cols() != n) {
        throw DimensionError("solve_generalized_eigen: A and B must be square and equal-sized");
    }
    if (d < 1 || d > n) {
        throw ParameterError("solve_generalized_eigen: need 1 <= d <= n");
    }
    if (!a.isApprox(a.transpose(), 1e-10)) {
        throw InputError("solve_generalized_eigen: A must be symmetric");
    }
    if (!b.isApprox(b.transpose(), 1e-10)) {
        throw InputError("solve_generalized_eigen: B must be symmetric");
    }

    MatrixXd a_sym = 0.5 * (a + a.transpose());
    MatrixXd b_sym = 0.5 * (b + b.transpose());

    GevResult result;
    double cond = symmetric_condition_estimate(b_sym);
    if (!(cond <= 1e12)) {
        result.b_ridge = 1e-9 * b_sym.trace() / n;
        if (result.b_ridge <= 0.0) result.b_ridge = 1e-12;
        b_sym.diagonal().array() += result.b_ridge;
        cond = symmetric_condition_estimate(b_sym);
        if (!(cond <= 1e15)) {
            std::ostringstream msg;
            msg << "solve_generalized_eigen: B numerically singular (condition estimate "
                << cond << " after ridge " << result.b_ridge << ")";
            throw SingularityError(msg.str());
        }
    }

    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(a_sym, b_sym);
    if (solver.info() != Eigen::Success) {
        throw SingularityError("solve_generalized_eigen: factorization failed");
    }

    // Solver output is ascending with V^T B V = I.
    const VectorXd& all_vals = solver.eigenvalues();
    const MatrixXd& all_vecs = solver.eigenvectors();

    result.eigenvalues.resize(d);
    result.w.resize(n, d);
    if (order == EigenOrder::SmallestOfPair) {
        result.eigenvalues = all_vals.head(d);
        result.w = all_vecs.leftCols(d);
    } else {
        // Keep the d largest but present them ascending.
        result.eigenvalues = all_vals.tail(d);
        result.w = all_vecs.rightCols(d);
    }

    result.max_residual = 0.0;
    const double a_norm = a_sym.norm();
    const double b_norm = b_sym.norm();
    for (int j = 0; j < d; ++j) {
        const double lambda = result.eigenvalues(j);
        const double res = (a_sym * result.w.col(j) - lambda * b_sym * result.w.col(j)).norm();
        const double scale = a_norm + std::abs(lambda) * b_norm;
        result.max_residual = std::max(result.max_residual,
                                       scale > 0.0 ? res / scale : res);
    }
    return result;
}

MatrixXd embed(const MatrixXd& k, const MatrixXd& w) {
    if (w.rows() != k.rows()) {
        throw DimensionError("embed: W rows must match K rows");
    }
    return w.transpose() * k;
}

} // namespace qtf
