#include "qtf/qsim.hpp"

#include <cmath>

#include "qtf/errors.hpp"
#include "real_circuit.hpp"

namespace qtf {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_qubit_count(int q) {
    if (q < 1) throw ParameterError("qubit count must be >= 1");
    if (q > kMaxQubits) {
        throw ParameterError("qubit count exceeds the simulator cap of " +
                             std::to_string(kMaxQubits));
    }
}

void check_gate(const StateVector& state, const GateOp& gate) {
    if (gate.target < 0 || gate.target >= state.q) {
        throw ParameterError("gate target out of range");
    }
    const bool needs_control =
        gate.kind == GateOp::Kind::CNOT || gate.kind == GateOp::Kind::CZ ||
        gate.kind == GateOp::Kind::CU;
    if (needs_control) {
        if (!gate.control) throw ParameterError("controlled gate missing control qubit");
        if (*gate.control < 0 || *gate.control >= state.q) {
            throw ParameterError("gate control out of range");
        }
        if (*gate.control == gate.target) {
            throw ParameterError("control and target must differ");
        }
    }
    if (gate.kind == GateOp::Kind::RY && !gate.angle) {
        throw ParameterError("RY gate requires an angle");
    }
    if (gate.kind == GateOp::Kind::CU) {
        if (!gate.unitary) throw ParameterError("CU gate requires a 2x2 matrix");
        const Matrix2cd& u = *gate.unitary;
        if ((u.adjoint() * u - Matrix2cd::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
            throw InputError("CU matrix is not unitary");
        }
    }
}

// Applies a dense 2x2 matrix to `target` over the whole register.
void apply_single_qubit(VectorXcd& amps, int target, const Matrix2cd& u) {
    const auto dim = static_cast<long>(amps.size());
    const long bit = 1L << target;
    for (long base = 0; base < dim; ++base) {
        if (base & bit) continue;
        const long partner = base | bit;
        const Complex a0 = amps(base);
        const Complex a1 = amps(partner);
        amps(base) = u(0, 0) * a0 + u(0, 1) * a1;
        amps(partner) = u(1, 0) * a0 + u(1, 1) * a1;
    }
}

void apply_controlled(VectorXcd& amps, int control, int target,
                      const Matrix2cd& u) {
    const auto dim = static_cast<long>(amps.size());
    const long cbit = 1L << control;
    const long tbit = 1L << target;
    for (long base = 0; base < dim; ++base) {
        if (!(base & cbit) || (base & tbit)) continue;
        const long partner = base | tbit;
        const Complex a0 = amps(base);
        const Complex a1 = amps(partner);
        amps(base) = u(0, 0) * a0 + u(0, 1) * a1;
        amps(partner) = u(1, 0) * a0 + u(1, 1) * a1;
    }
}

Eigen::Matrix2d ry_matrix_real(double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

void run_layers_real(const AnsatzCircuit& circ, VectorXd& amps) {
    for (int layer = 0; layer < circ.layers; ++layer) {
        for (int qb = 0; qb < circ.q; ++qb) {
            const double theta = circ.theta(layer * circ.q + qb);
            detail::apply_ry(amps, qb, std::cos(0.5 * theta), std::sin(0.5 * theta));
        }
        if (circ.q > 1) {
            for (int qb = 0; qb < circ.q; ++qb) {
                detail::apply_cnot(amps, qb, (qb + 1) % circ.q);
            }
        }
    }
}

} // namespace

StateVector StateVector::zero_state(int q) {
    check_qubit_count(q);
    StateVector s;
    s.q = q;
    s.amps = VectorXcd::Zero(1L << q);
    s.amps(0) = 1.0;
    return s;
}

Matrix2cd single_qubit_matrix(const GateOp& gate) {
    Matrix2cd m;
    const Complex i(0.0, 1.0);
    switch (gate.kind) {
        case GateOp::Kind::X:
            m << 0, 1, 1, 0;
            return m;
        case GateOp::Kind::Y:
            m << 0, -i, i, 0;
            return m;
        case GateOp::Kind::Z:
            m << 1, 0, 0, -1;
            return m;
        case GateOp::Kind::H:
            m << 1, 1, 1, -1;
            return m / std::sqrt(2.0);
        case GateOp::Kind::RY: {
            if (!gate.angle) throw ParameterError("RY gate requires an angle");
            return ry_matrix_real(*gate.angle).cast<Complex>();
        }
        case GateOp::Kind::CU:
            if (!gate.unitary) throw ParameterError("CU gate requires a 2x2 matrix");
            return *gate.unitary;
        case GateOp::Kind::CNOT:
        case GateOp::Kind::CZ:
            break;
    }
    throw ParameterError("gate has no single-qubit matrix");
}

AnsatzCircuit AnsatzCircuit::make(int q, int layers) {
    check_qubit_count(q);
    if (layers < 1) throw ParameterError("ansatz needs at least one layer");
    AnsatzCircuit c;
    c.q = q;
    c.layers = layers;
    c.theta = VectorXd::Zero(layers * q);
    return c;
}

void AnsatzCircuit::validate() const {
    check_qubit_count(q);
    if (layers < 1) throw ParameterError("ansatz needs at least one layer");
    if (theta.size() != static_cast<long>(param_count())) {
        throw DimensionError("ansatz parameter count must equal layers * qubits");
    }
}

Observable::Observable(MatrixXcd m) : matrix(std::move(m)) {
    if (matrix.rows() != matrix.cols()) {
        throw DimensionError("observable must be square");
    }
    if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        throw InputError("observable must be Hermitian");
    }
}

StateVector amplitude_encode(const VectorXd& x) {
    if (x.size() == 0) throw EncodingError("cannot encode an empty vector");
    if (!x.allFinite()) throw EncodingError("cannot encode non-finite values");
    const double norm = x.norm();
    if (norm <= 0.0) throw EncodingError("cannot encode the zero vector");

    int q = 1;
    while ((1L << q) < x.size()) ++q;
    check_qubit_count(q);

    StateVector s;
    s.q = q;
    s.amps = VectorXcd::Zero(1L << q);
    for (long i = 0; i < x.size(); ++i) s.amps(i) = x(i) / norm;
    return s;
}

void apply_gate_inplace(StateVector& state, const GateOp& gate) {
    check_gate(state, gate);
    switch (gate.kind) {
        case GateOp::Kind::CNOT: {
            Matrix2cd x;
            x << 0, 1, 1, 0;
            apply_controlled(state.amps, *gate.control, gate.target, x);
            return;
        }
        case GateOp::Kind::CZ: {
            Matrix2cd z;
            z << 1, 0, 0, -1;
            apply_controlled(state.amps, *gate.control, gate.target, z);
            return;
        }
        case GateOp::Kind::CU:
            apply_controlled(state.amps, *gate.control, gate.target, *gate.unitary);
            return;
        default:
            apply_single_qubit(state.amps, gate.target, single_qubit_matrix(gate));
    }
}

StateVector apply_gate(const StateVector& state, const GateOp& gate) {
    StateVector out = state;
    apply_gate_inplace(out, gate);
    return out;
}

StateVector run_ansatz(const AnsatzCircuit& circ, const StateVector& input) {
    circ.validate();
    if (input.q != circ.q) {
        throw DimensionError("ansatz and input state qubit counts differ");
    }
    StateVector state = input;
    for (int layer = 0; layer < circ.layers; ++layer) {
        for (int qb = 0; qb < circ.q; ++qb) {
            apply_gate_inplace(state,
                               GateOp::ry(qb, circ.theta(layer * circ.q + qb)));
        }
        if (circ.q > 1) {
            for (int qb = 0; qb < circ.q; ++qb) {
                apply_gate_inplace(state, GateOp::cnot(qb, (qb + 1) % circ.q));
            }
        }
    }
    return state;
}

double expectation(const StateVector& state, const Observable& obs) {
    if (obs.dim() != state.dim()) {
        throw DimensionError("observable dimension must match state dimension");
    }
    const Complex val = state.amps.dot(obs.matrix * state.amps);
    if (std::abs(val.imag()) > 1e-10 * std::max(1.0, std::abs(val.real()))) {
        throw InputError("expectation has a non-negligible imaginary part");
    }
    return val.real();
}

double measure_probability(const StateVector& state, int qubit, int outcome) {
    if (qubit < 0 || qubit >= state.q) throw ParameterError("qubit out of range");
    if (outcome != 0 && outcome != 1) throw ParameterError("outcome must be 0 or 1");
    const long bit = 1L << qubit;
    double p = 0.0;
    for (long i = 0; i < state.dim(); ++i) {
        if (((i & bit) != 0) == (outcome == 1)) p += std::norm(state.amps(i));
    }
    return p;
}

VectorXd parameter_shift_grad(const AnsatzCircuit& circ, const StateVector& input,
                              const Observable& obs) {
    circ.validate();
    VectorXd grad(circ.param_count());
    AnsatzCircuit shifted = circ;
    for (int j = 0; j < circ.param_count(); ++j) {
        shifted.theta(j) = circ.theta(j) + 0.5 * kPi;
        const double plus = expectation(run_ansatz(shifted, input), obs);
        shifted.theta(j) = circ.theta(j) - 0.5 * kPi;
        const double minus = expectation(run_ansatz(shifted, input), obs);
        shifted.theta(j) = circ.theta(j);
        grad(j) = 0.5 * (plus - minus);
    }
    return grad;
}

VectorXd run_ansatz_real(const AnsatzCircuit& circ) {
    circ.validate();
    VectorXd amps = VectorXd::Zero(1L << circ.q);
    amps(0) = 1.0;
    run_layers_real(circ, amps);
    return amps;
}

VectorXd run_ansatz_real_from(const AnsatzCircuit& circ, const VectorXd& input) {
    circ.validate();
    if (input.size() != (1L << circ.q)) {
        throw DimensionError("input amplitude count must equal 2^q");
    }
    VectorXd amps = input;
    run_layers_real(circ, amps);
    return amps;
}

} // namespace qtf
