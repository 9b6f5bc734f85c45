#pragma once

#include <functional>
#include <vector>

#include "qtf/gev.hpp"
#include "qtf/kernel.hpp"
#include "qtf/types.hpp"

namespace qtf {

/// Nearest-neighbor classification of target columns against labeled source
/// columns (Euclidean distance; equidistant neighbors resolve to the lowest
/// source index, vote ties to the earliest-reached label).
LabelVector knn_predict(const MatrixXd& z_source, const LabelVector& y_source,
                        const MatrixXd& z_target, int k = 1);

enum class DdaVariant {
    Tca,   // marginal alignment only (kappa forced to 0)
    Jda,   // marginal and conditional terms weighed equally (kappa = 0.5)
    Bda,   // caller-chosen balance kappa
};

struct DdaConfig {
    DdaVariant variant = DdaVariant::Bda;
    KernelSpec kernel = KernelSpec::rbf();
    double kappa = 0.5;  // used by BDA only; TCA/JDA override it
    double mu = 1.0;
    int d = 2;
    int t_iters = 10;
    EigenOrder order = EigenOrder::SmallestOfPair;

    /// kappa after applying the variant's convention.
    double effective_kappa() const;
};

struct ProjectionResult {
    MatrixXd w;            // n x d
    VectorXd eigvals;      // ascending
    MatrixXd z;            // d x n embedded data
    int iterations_used = 0;
};

struct DdaHistory {
    std::vector<double> objective;          // tr(W^T K L_Q K W) per iteration
    std::vector<double> evaluator_metric;   // evaluator output per iteration (if set)
    std::vector<LabelVector> pseudo_labels; // target pseudo labels per iteration
};

/// Optional per-iteration probe, e.g. accuracy against held-out truth. Runs
/// after each pseudo-label refresh; never feeds back into the fit.
using IterationEvaluator = std::function<double(const LabelVector& y_target)>;

/// Iterative alignment: build K once, then alternate {assemble L_Q from the
/// current pseudo labels, solve the eigenproblem, embed, refresh pseudo
/// labels} t_iters times. Iteration 0's pseudo labels come from nearest
/// neighbors on the raw features. t_iters = 0 returns those raw-feature
/// predictions untouched.
std::pair<LabelVector, ProjectionResult> dda_fit_predict(
    const DataMatrix& x, const LabelVector& y_source, const DdaConfig& config,
    DdaHistory* history = nullptr,
    const IterationEvaluator& evaluator = nullptr);

} // namespace qtf
