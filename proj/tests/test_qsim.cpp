#include <cmath>
#include <complex>

#include <doctest.h>

#include "oracles.hpp"
#include "qtf/errors.hpp"
#include "qtf/qsim.hpp"

using namespace qtf;
using oracle::dense_controlled;
using oracle::dense_single;

namespace {

const double kPi = 3.14159265358979323846;

StateVector random_state(oracle::Rng& rng, int q) {
    StateVector s = StateVector::zero_state(q);
    for (int i = 0; i < s.dim(); ++i)
        s.amps(i) = Complex(rng.normal(), rng.normal());
    s.amps /= std::sqrt(s.norm_sq());
    return s;
}

GateOp random_gate(oracle::Rng& rng, int q) {
    const int kind = static_cast<int>(rng.uniform(0.0, 8.0));
    const int t = static_cast<int>(rng.uniform(0.0, static_cast<double>(q)));
    int c = t;
    while (c == t && q > 1)
        c = static_cast<int>(rng.uniform(0.0, static_cast<double>(q)));
    switch (kind) {
        case 0: return GateOp::x(t);
        case 1: return GateOp::y(t);
        case 2: return GateOp::z(t);
        case 3: return GateOp::h(t);
        case 4: return GateOp::ry(t, rng.uniform(-kPi, kPi));
        case 5: return q > 1 ? GateOp::cnot(c, t) : GateOp::x(t);
        case 6: return q > 1 ? GateOp::cz(c, t) : GateOp::z(t);
        default: {
            // random 2x2 unitary from a Householder-free construction:
            // U = exp(i a) * [[cos b, -sin b e^{ic}], [sin b e^{-ic}, cos b]]
            const double a = rng.uniform(-kPi, kPi);
            const double b = rng.uniform(-kPi, kPi);
            const double cph = rng.uniform(-kPi, kPi);
            Matrix2cd u;
            const Complex ea = std::polar(1.0, a);
            u << ea * std::cos(b), -ea * std::sin(b) * std::polar(1.0, cph),
                ea * std::sin(b) * std::polar(1.0, -cph), ea * std::cos(b);
            // make it unitary exactly: the above construction is unitary by
            // algebra; numerical residue is fine for the tests below
            return q > 1 ? GateOp::cu(c, t, u) : GateOp::ry(t, b);
        }
    }
}

MatrixXcd dense_of(const GateOp& g, int q) {
    if (g.kind == GateOp::Kind::CNOT) {
        MatrixXcd x(2, 2);
        x << 0, 1, 1, 0;
        return dense_controlled(x, *g.control, g.target, q);
    }
    if (g.kind == GateOp::Kind::CZ) {
        MatrixXcd z(2, 2);
        z << 1, 0, 0, -1;
        return dense_controlled(z, *g.control, g.target, q);
    }
    if (g.kind == GateOp::Kind::CU)
        return dense_controlled(g.unitary->cast<Complex>(), *g.control,
                                g.target, q);
    return dense_single(single_qubit_matrix(g).cast<Complex>(), g.target, q);
}

} // namespace

TEST_CASE("zero state is |0...0>") {
    const StateVector s = StateVector::zero_state(3);
    CHECK(s.dim() == 8);
    CHECK(s.amps(0) == Complex(1.0, 0.0));
    for (int i = 1; i < 8; ++i) CHECK(s.amps(i) == Complex(0.0, 0.0));
}

TEST_CASE("qubit cap and bad counts are rejected") {
    CHECK_THROWS_AS(StateVector::zero_state(0), ParameterError);
    CHECK_THROWS_AS(StateVector::zero_state(kMaxQubits + 1), ParameterError);
    CHECK_NOTHROW(StateVector::zero_state(kMaxQubits));
}

TEST_CASE("amplitude encoding pads and normalizes") {
    SUBCASE("basis vector") {
        VectorXd x(4);
        x << 1, 0, 0, 0;
        const StateVector s = amplitude_encode(x);
        CHECK(s.q == 2);
        CHECK(s.amps(0).real() == doctest::Approx(1.0));
    }
    SUBCASE("equal superposition of two") {
        VectorXd x(2);
        x << 1, 1;
        const StateVector s = amplitude_encode(x);
        CHECK(s.q == 1);
        CHECK(s.amps(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(s.amps(1).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    SUBCASE("3-4-5 normalization") {
        VectorXd x(2);
        x << 3, 4;
        const StateVector s = amplitude_encode(x);
        CHECK(s.amps(0).real() == doctest::Approx(0.6));
        CHECK(s.amps(1).real() == doctest::Approx(0.8));
    }
    SUBCASE("padding to next power of two") {
        VectorXd x(3);
        x << 2, 0, 0;
        const StateVector s = amplitude_encode(x);
        CHECK(s.q == 2);
        CHECK(s.dim() == 4);
        CHECK(s.amps(0).real() == doctest::Approx(1.0));
        CHECK(std::abs(s.amps(3)) == doctest::Approx(0.0));
    }
    SUBCASE("zero vector rejected") {
        VectorXd x = VectorXd::Zero(4);
        CHECK_THROWS_AS(amplitude_encode(x), EncodingError);
    }
    SUBCASE("non-finite rejected") {
        VectorXd x(2);
        x << 1.0, std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(amplitude_encode(x), EncodingError);
    }
}

TEST_CASE("named single-qubit gates act as their textbook matrices") {
    const StateVector zero = StateVector::zero_state(1);
    SUBCASE("H on |0>") {
        const StateVector s = apply_gate(zero, GateOp::h(0));
        CHECK(s.amps(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
        CHECK(s.amps(1).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    SUBCASE("X on |0>") {
        const StateVector s = apply_gate(zero, GateOp::x(0));
        CHECK(std::abs(s.amps(0)) == doctest::Approx(0.0));
        CHECK(s.amps(1).real() == doctest::Approx(1.0));
    }
    SUBCASE("Y on |0> gives i|1>") {
        const StateVector s = apply_gate(zero, GateOp::y(0));
        CHECK(s.amps(1).imag() == doctest::Approx(1.0));
    }
    SUBCASE("Z phases |1>") {
        StateVector one = apply_gate(zero, GateOp::x(0));
        const StateVector s = apply_gate(one, GateOp::z(0));
        CHECK(s.amps(1).real() == doctest::Approx(-1.0));
    }
    SUBCASE("RY rotates in the real plane") {
        const double th = 0.7;
        const StateVector s = apply_gate(zero, GateOp::ry(0, th));
        CHECK(s.amps(0).real() == doctest::Approx(std::cos(th / 2)));
        CHECK(s.amps(1).real() == doctest::Approx(std::sin(th / 2)));
    }
}

TEST_CASE("CNOT matches the dense 4x4 oracle on a superposition") {
    StateVector s = StateVector::zero_state(2);
    s.amps.setZero();
    s.amps(0) = 1.0 / std::sqrt(2.0); // |00>
    s.amps(1) = 1.0 / std::sqrt(2.0); // |01>: qubit 0 (LSB) is 1
    const StateVector out = apply_gate(s, GateOp::cnot(0, 1));
    // control = qubit 0: |00> unchanged, |01> -> |11>
    CHECK(out.amps(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(out.amps(1)) == doctest::Approx(0.0));
    CHECK(out.amps(3).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("every gate kind equals its dense matrix on random states") {
    oracle::Rng rng(0x51a7e);
    for (int trial = 0; trial < 200; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        const StateVector in = random_state(rng, q);
        const GateOp g = random_gate(rng, q);
        const StateVector out = apply_gate(in, g);
        const VectorXcd expect = dense_of(g, q) * in.amps;
        CHECK((out.amps - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("dense matrix of every gate is unitary") {
    oracle::Rng rng(0xfeed);
    for (int trial = 0; trial < 60; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
        const GateOp g = random_gate(rng, q);
        const MatrixXcd u = dense_of(g, q);
        const MatrixXcd gram = u.adjoint() * u;
        CHECK((gram - MatrixXcd::Identity(u.rows(), u.cols()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("norm is preserved across 1000 random gate applications") {
    oracle::Rng rng(0xabcdef);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
        StateVector s = random_state(rng, q);
        s = apply_gate(s, random_gate(rng, q));
        worst = std::max(worst, std::abs(s.norm_sq() - 1.0));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("gate index validation") {
    const StateVector s = StateVector::zero_state(2);
    CHECK_THROWS_AS(apply_gate(s, GateOp::x(2)), ParameterError);
    CHECK_THROWS_AS(apply_gate(s, GateOp::x(-1)), ParameterError);
    CHECK_THROWS_AS(apply_gate(s, GateOp::cnot(1, 1)), ParameterError);
    GateOp no_angle = GateOp::ry(0, 0.0);
    no_angle.angle.reset();
    CHECK_THROWS_AS(apply_gate(s, no_angle), ParameterError);
}

TEST_CASE("ansatz: zero angles fix the all-zeros state") {
    AnsatzCircuit circ = AnsatzCircuit::make(3, 2);
    circ.theta.setZero();
    const StateVector out = run_ansatz(circ, StateVector::zero_state(3));
    CHECK(out.amps(0).real() == doctest::Approx(1.0));
}

TEST_CASE("ansatz: single RY(pi) flips one qubit") {
    AnsatzCircuit circ = AnsatzCircuit::make(1, 1);
    circ.theta(0) = kPi;
    const StateVector out = run_ansatz(circ, StateVector::zero_state(1));
    CHECK(std::abs(out.amps(0)) < 1e-12);
    CHECK(std::abs(std::abs(out.amps(1)) - 1.0) < 1e-12);
}

TEST_CASE("ansatz equals the product of dense layer matrices") {
    oracle::Rng rng(0x7777);
    for (int trial = 0; trial < 20; ++trial) {
        const int q = 2 + static_cast<int>(rng.uniform(0.0, 2.0));
        const int layers = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
        AnsatzCircuit circ = AnsatzCircuit::make(q, layers);
        for (int i = 0; i < circ.theta.size(); ++i)
            circ.theta(i) = rng.uniform(-kPi, kPi);
        const StateVector in = random_state(rng, q);

        MatrixXcd total = MatrixXcd::Identity(1 << q, 1 << q);
        int p = 0;
        for (int l = 0; l < layers; ++l) {
            for (int w = 0; w < q; ++w)
                total = dense_of(GateOp::ry(w, circ.theta(p++)), q) * total;
            if (q > 1)
                for (int w = 0; w < q; ++w)
                    total = dense_of(GateOp::cnot(w, (w + 1) % q), q) * total;
        }
        const StateVector out = run_ansatz(circ, in);
        CHECK((out.amps - total * in.amps).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("ansatz parameter count is validated") {
    AnsatzCircuit circ = AnsatzCircuit::make(2, 2);
    circ.theta.resize(3);
    CHECK_THROWS_AS(run_ansatz(circ, StateVector::zero_state(2)),
                    DimensionError);
}

TEST_CASE("inverse layers undo entangler-free circuits") {
    // With q = 1 there is no entangler, so running the reversed negated
    // angles restores the input.
    oracle::Rng rng(0x2024);
    for (int trial = 0; trial < 10; ++trial) {
        AnsatzCircuit circ = AnsatzCircuit::make(1, 4);
        for (int i = 0; i < circ.theta.size(); ++i)
            circ.theta(i) = rng.uniform(-kPi, kPi);
        AnsatzCircuit inverse = circ;
        inverse.theta = -circ.theta.reverse();
        const StateVector in = random_state(rng, 1);
        const StateVector back = run_ansatz(inverse, run_ansatz(circ, in));
        CHECK((back.amps - in.amps).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("expectation values") {
    MatrixXcd z(2, 2);
    z << 1, 0, 0, -1;
    const Observable obs_z{z};
    SUBCASE("Z on |0> is +1") {
        CHECK(expectation(StateVector::zero_state(1), obs_z) ==
              doctest::Approx(1.0));
    }
    SUBCASE("Z on H|0> is 0") {
        const StateVector s =
            apply_gate(StateVector::zero_state(1), GateOp::h(0));
        CHECK(expectation(s, obs_z) == doctest::Approx(0.0));
    }
    SUBCASE("random Hermitian matches the triple-product oracle") {
        oracle::Rng rng(0x808);
        for (int trial = 0; trial < 50; ++trial) {
            const int q = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
            const int dim = 1 << q;
            MatrixXcd h(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    h(i, j) = Complex(rng.normal(), rng.normal());
            h = ((h + h.adjoint()) / 2.0).eval();
            const StateVector s = random_state(rng, q);
            const Complex direct = (s.amps.adjoint() * h * s.amps)(0, 0);
            CHECK(expectation(s, Observable{h}) ==
                  doctest::Approx(direct.real()).epsilon(1e-10));
        }
    }
    SUBCASE("non-Hermitian observables are rejected") {
        MatrixXcd bad(2, 2);
        bad << 1, 2, 3, 4;
        CHECK_THROWS_AS(Observable{bad}, InputError);
    }
    SUBCASE("dimension mismatch is rejected") {
        CHECK_THROWS_AS(expectation(StateVector::zero_state(2), obs_z),
                        DimensionError);
    }
}

TEST_CASE("single-qubit measurement probabilities") {
    // Build a known 2-qubit state: H on qubit 1 gives |0>(|0>+|1>)/sqrt2
    // over (qubit1 qubit0) -> P(qubit 1 = 1) = 0.5, P(qubit 0 = 1) = 0.
    StateVector s = apply_gate(StateVector::zero_state(2), GateOp::h(1));
    CHECK(measure_probability(s, 1, 1) == doctest::Approx(0.5));
    CHECK(measure_probability(s, 0, 1) == doctest::Approx(0.0));
    CHECK(measure_probability(s, 0, 0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(measure_probability(s, 2, 0), ParameterError);
    CHECK_THROWS_AS(measure_probability(s, 0, 2), ParameterError);

    oracle::Rng rng(0x99);
    for (int trial = 0; trial < 20; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        const StateVector r = random_state(rng, q);
        for (int w = 0; w < q; ++w) {
            double mass1 = 0.0;
            for (int i = 0; i < r.dim(); ++i)
                if ((i >> w) & 1) mass1 += std::norm(r.amps(i));
            CHECK(measure_probability(r, w, 1) ==
                  doctest::Approx(mass1).epsilon(1e-12));
            CHECK(measure_probability(r, w, 0) ==
                  doctest::Approx(1.0 - mass1).epsilon(1e-12));
        }
    }
}

TEST_CASE("parameter-shift gradient: analytic single-qubit cases") {
    MatrixXcd z(2, 2);
    z << 1, 0, 0, -1;
    const Observable obs_z{z};
    AnsatzCircuit circ = AnsatzCircuit::make(1, 1);
    // <Z> of RY(theta)|0> = cos(theta)
    circ.theta(0) = kPi / 2.0;
    VectorXd g = parameter_shift_grad(circ, StateVector::zero_state(1), obs_z);
    CHECK(g(0) == doctest::Approx(-1.0));
    circ.theta(0) = 0.0;
    g = parameter_shift_grad(circ, StateVector::zero_state(1), obs_z);
    CHECK(g(0) == doctest::Approx(0.0));
}

TEST_CASE("parameter-shift gradient matches central differences") {
    oracle::Rng rng(0xd1ff);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        const int layers = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
        AnsatzCircuit circ = AnsatzCircuit::make(q, layers);
        for (int i = 0; i < circ.theta.size(); ++i)
            circ.theta(i) = rng.uniform(-kPi, kPi);
        const int dim = 1 << q;
        MatrixXcd h(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                h(i, j) = Complex(rng.normal(), rng.normal());
        h = ((h + h.adjoint()) / 2.0).eval();
        const Observable obs{h};
        const StateVector in = random_state(rng, q);

        const VectorXd analytic = parameter_shift_grad(circ, in, obs);
        const VectorXd numeric = oracle::central_diff(
            [&](const VectorXd& th) {
                AnsatzCircuit c2 = circ;
                c2.theta = th;
                return expectation(run_ansatz(c2, in), obs);
            },
            circ.theta);
        worst = std::max(worst, (analytic - numeric).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("real-arithmetic ansatz propagation matches the complex path") {
    oracle::Rng rng(0x5ea1);
    for (int trial = 0; trial < 30; ++trial) {
        const int q = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        const int layers = 1 + static_cast<int>(rng.uniform(0.0, 3.0));
        AnsatzCircuit circ = AnsatzCircuit::make(q, layers);
        for (int i = 0; i < circ.theta.size(); ++i)
            circ.theta(i) = rng.uniform(-kPi, kPi);
        const VectorXd real_out = run_ansatz_real(circ);
        const StateVector cplx = run_ansatz(circ, StateVector::zero_state(q));
        CHECK((cplx.amps.real() - real_out).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(cplx.amps.imag().cwiseAbs().maxCoeff() < 1e-12);

        // and from an arbitrary real start
        VectorXd start(1 << q);
        for (int i = 0; i < start.size(); ++i) start(i) = rng.normal();
        start.normalize();
        StateVector sv = StateVector::zero_state(q);
        sv.amps = start.cast<Complex>();
        const VectorXd real_from = run_ansatz_real_from(circ, start);
        const StateVector cplx_from = run_ansatz(circ, sv);
        CHECK((cplx_from.amps.real() - real_from).cwiseAbs().maxCoeff() <
              1e-12);
    }
}
