#pragma once

#include <optional>
#include <vector>

#include "qtf/types.hpp"

namespace qtf {

struct KernelSpec {
    enum class Kind { Linear, Rbf };

    Kind kind = Kind::Rbf;
    /// Positive bandwidth for the rbf kernel; 0 requests the median heuristic.
    double bandwidth = 0.0;

    static KernelSpec linear() { return {Kind::Linear, 0.0}; }
    static KernelSpec rbf(double bw = 0.0) { return {Kind::Rbf, bw}; }
};

/// MMD weight matrices for one domain partition.
struct MmdMatrices {
    MatrixXd l0;                // marginal discrepancy weights
    std::vector<MatrixXd> lc;   // one per class, conditional weights
    MatrixXd m;                 // centering matrix I - (1/n) 11^T
    MatrixXd l_q;               // (1-kappa) L0 + kappa * sum_c Lc
};

/// Kernel matrix plus every MMD weight matrix the eigenproblem needs.
struct KernelBundle {
    MatrixXd k;
    MatrixXd l0;
    std::vector<MatrixXd> lc;
    MatrixXd m;
    MatrixXd l_q;
    double kappa = 0.0;
    double mu = 1.0;
    int n_source = 0;
    int n_target = 0;
};

/// Median of pairwise column distances over a seeded subsample of at most
/// 1000 pairs. Deterministic for a fixed matrix.
double median_heuristic_bandwidth(const MatrixXd& x, uint64_t seed = 0x9e3779b9);

double resolve_bandwidth(const MatrixXd& x, const KernelSpec& spec);

/// Gram matrix of the columns of X under the requested kernel.
MatrixXd compute_kernel(const DataMatrix& x, const KernelSpec& spec);

/// L0, per-class Lc, centering M and the combined L_Q for the partition
/// (n_s, n_t). Labels cover all n samples (source labels first, then
/// pseudo target labels); they are only required when kappa > 0.
MmdMatrices build_mmd_matrices(int n_source, int n_target,
                               const std::optional<LabelVector>& labels,
                               double kappa, int num_classes);

/// tr(K * L); equals the squared kernel mean discrepancy when L = L0.
double mmd_trace(const MatrixXd& k, const MatrixXd& l);

/// Convenience: kernel + MMD matrices in one bundle.
KernelBundle make_kernel_bundle(const DataMatrix& x, const KernelSpec& spec,
                                const std::optional<LabelVector>& labels,
                                double kappa, double mu, int num_classes);

/// Rebuild L_Q (and the Lc list) inside an existing bundle from fresh
/// pseudo labels, leaving K untouched.
void refresh_conditional_matrices(KernelBundle& bundle, const LabelVector& labels,
                                  int num_classes);

} // namespace qtf
