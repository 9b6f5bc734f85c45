#pragma once

#include <string>
#include <vector>

#include "qtf/dda.hpp"
#include "qtf/kernel.hpp"
#include "qtf/optimizer.hpp"
#include "qtf/qsim.hpp"
#include "qtf/types.hpp"
#include "qtf/vqc.hpp"

namespace qtf {

/// Alignment operator pair embedded into a 2^q register. The active n x n
/// blocks are K L_Q K + mu I and K M K; padded diagonal entries are
/// pad_penalty (first member) and 1 (second member) so the padding never
/// competes for the smallest eigenpairs.
struct HamiltonianPair {
    MatrixXd h_a;
    MatrixXd h_b;
    int n = 0;            // active dimension
    int q = 0;            // register size, 2^q >= n
    double pad_penalty = 0.0;
};

/// States already extracted at lower levels, with their penalty strengths
/// and Rayleigh values.
struct DeflationSet {
    std::vector<VectorXd> states;   // real amplitude vectors, length 2^q
    std::vector<double> alphas;
    std::vector<double> eigvals;

    size_t size() const { return states.size(); }
};

/// Embed a raw symmetric operator pair (a, b) into a 2^q register.
HamiltonianPair embed_pair(const MatrixXd& a, const MatrixXd& b, int q);

/// Pair for a kernel bundle: a = K L_Q K + mu I, b = K M K.
HamiltonianPair build_hamiltonians(const KernelBundle& bundle, int q);

/// Smallest register that holds an n x n operator.
int qubits_for(int n);

/// Rayleigh quotient <psi|H_A|psi>/<psi|H_B|psi> plus the deflation penalty
/// sum_i alpha_i * <psi_i|H_B|psi>^2 for |psi> = U(theta)|0...0>. Returns
/// +infinity when the denominator drops below 1e-12. With literal_penalty
/// the penalty instead reads sum_i alpha_i * <psi|H_B|psi>^2 (kept for
/// comparison; it does not reference earlier states).
double eigenstate_loss(const AnsatzCircuit& circ, const HamiltonianPair& pair,
                       const DeflationSet& deflation, bool literal_penalty = false);

/// Exact analytic gradient of eigenstate_loss with respect to theta,
/// computed by reverse-mode sweeps over the circuit.
VectorXd eigenstate_loss_grad(const AnsatzCircuit& circ, const HamiltonianPair& pair,
                              const DeflationSet& deflation,
                              bool literal_penalty = false);

struct EigensolveConfig {
    int d = 2;
    int layers = 3;
    int epochs_per_level = 500;
    int restarts = 3;                 // independent starts per level, best kept
    double learning_rate = 0.05;
    TrainConfig::Optimizer optimizer = TrainConfig::Optimizer::Adam;
    double alpha_deflate = 0.0;       // 0 = adaptive: 10 * max(|eigval est|, 1)
    bool literal_penalty = false;
    double convergence_tol = 1e-9;    // relative loss-change stop threshold
    uint64_t seed = 0;
};

struct EigensolveResult {
    VectorXd eigvals;                            // Rayleigh value per level
    MatrixXd w;                                  // n x d, renormalized
    bool converged = true;                       // false = some level hit its epoch cap
    std::vector<std::vector<double>> loss_traces; // accepted losses per level
    MatrixXd thetas;                             // P x d final parameters
    double max_b_overlap = 0.0;                  // max |<psi_i|H_B|psi_k>| / |H_B|_F
};

/// Variational extraction of the d smallest generalized eigenpairs of
/// (H_A, H_B): levels are optimized in sequence, each penalized against
/// B-overlap with the previous ones; per-epoch updates are rejected when
/// they would increase the loss. warm_thetas (P x d) seeds each level's
/// first start when given.
EigensolveResult solve_eigenstates(const HamiltonianPair& pair,
                                   const EigensolveConfig& config,
                                   const MatrixXd* warm_thetas = nullptr);

struct VqtfConfig {
    KernelSpec kernel = KernelSpec::rbf();
    double kappa = 0.5;
    double mu = 1.0;
    int d = 2;
    int t_iters = 5;
    EigensolveConfig eig;      // eig.d is overwritten by d
    VqcConfig classifier;
    uint64_t seed = 0;
};

struct VqtfIterationRecord {
    int iter = 0;
    VectorXd eigvals;
    std::vector<std::vector<double>> loss_traces;
    bool converged = true;
    int label_changes = 0;          // vs previous iteration's pseudo labels
    double evaluator_metric = std::numeric_limits<double>::quiet_NaN();
};

struct VqtfHistory {
    std::vector<VqtfIterationRecord> iterations;
};

/// Full pipeline: kernel once, then iterate {conditional matrices from
/// pseudo labels -> embed operator pair -> variational eigensolve ->
/// Z = W^T K -> cascade fit on source -> cascade predict on target}.
/// Initial pseudo labels come from nearest neighbors on raw features;
/// the loop stops early once pseudo labels stop changing.
std::pair<LabelVector, VqtfHistory> vqtf_fit_predict(
    const DataMatrix& x, const LabelVector& y_source, const VqtfConfig& config,
    const IterationEvaluator& evaluator = nullptr);

/// Diagnostics records as a JSON array (one object per outer iteration).
std::string history_to_json(const VqtfHistory& history);

} // namespace qtf
