#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "qtf/types.hpp"

namespace qtf {

using Complex = std::complex<double>;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;
using Matrix2cd = Eigen::Matrix2cd;

/// Hard cap on simulated qubits (4096 amplitudes).
inline constexpr int kMaxQubits = 12;

/// Dense statevector over q qubits. Qubit 0 is the least significant bit of
/// the amplitude index.
struct StateVector {
    VectorXcd amps;
    int q = 0;

    static StateVector zero_state(int q);
    int dim() const { return static_cast<int>(amps.size()); }
    double norm_sq() const { return amps.squaredNorm(); }
};

struct GateOp {
    enum class Kind { X, Y, Z, H, RY, CNOT, CZ, CU };

    Kind kind = Kind::X;
    int target = 0;
    std::optional<int> control;
    std::optional<double> angle;        // RY only
    std::optional<Matrix2cd> unitary;   // CU only

    static GateOp x(int t) { return {Kind::X, t, {}, {}, {}}; }
    static GateOp y(int t) { return {Kind::Y, t, {}, {}, {}}; }
    static GateOp z(int t) { return {Kind::Z, t, {}, {}, {}}; }
    static GateOp h(int t) { return {Kind::H, t, {}, {}, {}}; }
    static GateOp ry(int t, double theta) { return {Kind::RY, t, {}, theta, {}}; }
    static GateOp cnot(int c, int t) { return {Kind::CNOT, t, c, {}, {}}; }
    static GateOp cz(int c, int t) { return {Kind::CZ, t, c, {}, {}}; }
    static GateOp cu(int c, int t, const Matrix2cd& u) { return {Kind::CU, t, c, {}, u}; }
};

/// Dense 2x2 matrix of a single-qubit gate kind (throws for CNOT/CZ).
Matrix2cd single_qubit_matrix(const GateOp& gate);

/// Layered variational circuit: each layer applies one RY per qubit followed
/// by a ring of CNOTs (i -> i+1 mod q; omitted when q = 1).
struct AnsatzCircuit {
    int q = 1;
    int layers = 1;
    VectorXd theta;   // length layers * q

    static AnsatzCircuit make(int q, int layers);
    int param_count() const { return layers * q; }
    void validate() const;
};

struct Observable {
    MatrixXcd matrix;

    explicit Observable(MatrixXcd m);
    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Pad with zeros to the next power of two and L2-normalize. Amplitudes are
/// real-valued.
StateVector amplitude_encode(const VectorXd& x);

StateVector apply_gate(const StateVector& state, const GateOp& gate);

/// In-place variant used by hot loops.
void apply_gate_inplace(StateVector& state, const GateOp& gate);

StateVector run_ansatz(const AnsatzCircuit& circ, const StateVector& input);

double expectation(const StateVector& state, const Observable& obs);

/// P(measuring `qubit` = outcome) for outcome in {0, 1}.
double measure_probability(const StateVector& state, int qubit, int outcome);

/// Exact gradient of expectation(run_ansatz(circ, input), obs) with respect
/// to theta via the two-point shift rule (valid because every parameterized
/// gate is an RY rotation).
VectorXd parameter_shift_grad(const AnsatzCircuit& circ, const StateVector& input,
                              const Observable& obs);

/// RY/CNOT layers acting on |0...0> keep every amplitude real, so the
/// variational state can be simulated entirely in real arithmetic. Returns
/// the final amplitudes as a real vector of length 2^q.
VectorXd run_ansatz_real(const AnsatzCircuit& circ);

/// Same real-arithmetic propagation from an arbitrary real starting state.
VectorXd run_ansatz_real_from(const AnsatzCircuit& circ, const VectorXd& input);

} // namespace qtf
