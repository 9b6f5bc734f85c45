#pragma once

#include "qtf/types.hpp"

namespace qtf {

/// Which end of the generalized spectrum to keep when selecting d vectors.
enum class EigenOrder {
    SmallestOfPair,   // d smallest lambda of A w = lambda B w (objective minimization)
    LargestOfPair,    // d largest lambda of the same pair
};

struct GevResult {
    VectorXd eigenvalues;   // d entries, ascending
    MatrixXd w;             // n x d, B-orthonormal columns
    double max_residual = 0.0;   // worst relative |A w - lambda B w| over pairs
    double b_ridge = 0.0;        // ridge added to B, 0 when none was needed
};

/// Solve A w = lambda B w for symmetric A and symmetric PSD B and return the
/// d eigenpairs selected by `order`. Adds a small ridge to B when its
/// condition estimate exceeds 1e12; throws SingularityError when B stays
/// numerically singular even then.
GevResult solve_generalized_eigen(const MatrixXd& a, const MatrixXd& b, int d,
                                  EigenOrder order = EigenOrder::SmallestOfPair);

/// Z = W^T K; column j of Z is the embedded sample j.
MatrixXd embed(const MatrixXd& k, const MatrixXd& w);

} // namespace qtf
