#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qtf/errors.hpp"
#include "qtf/gev.hpp"

using namespace qtf;

TEST_CASE("jacobi oracle reproduces a known 2x2 spectrum") {
    // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
    MatrixXd s(2, 2);
    s << 2, 1, 1, 2;
    VectorXd vals;
    MatrixXd vecs;
    oracle::jacobi_eigen(s, vals, vecs);
    CHECK(vals(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vals(1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((vecs * vals.asDiagonal() * vecs.transpose() - s)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("dense solver matches the brute-force oracle on random SPD pairs") {
    oracle::Rng rng(41);
    for (int instance = 0; instance < 50; ++instance) {
        const int n = 3 + static_cast<int>(rng.next_u64() % 6);
        const int d = 1 + static_cast<int>(rng.next_u64() % std::min(3, n));
        const MatrixXd a = rng.spd(n, 0.2);
        const MatrixXd b = rng.spd(n, 0.5);

        const GevResult got = solve_generalized_eigen(a, b, d);
        const oracle::GevOracle want = oracle::gev_brute_force(a, b);

        REQUIRE(got.eigenvalues.size() == d);
        for (int i = 0; i < d; ++i) {
            CHECK(got.eigenvalues(i) ==
                  doctest::Approx(want.values(i)).epsilon(1e-8));
        }
        // Eigenvector check up to sign, through the residual instead of the
        // basis (degenerate eigenvalues make direct comparison ill-posed).
        for (int i = 0; i < d; ++i) {
            const VectorXd w = got.w.col(i);
            const double res =
                (a * w - got.eigenvalues(i) * (b * w)).norm() /
                std::max(1.0, (a * w).norm());
            CHECK(res < 1e-8);
        }
    }
}

TEST_CASE("selection order picks opposite ends of the spectrum") {
    oracle::Rng rng(42);
    const MatrixXd a = rng.spd(6, 0.2);
    const MatrixXd b = rng.spd(6, 0.5);
    const oracle::GevOracle all = oracle::gev_brute_force(a, b);

    const GevResult lo = solve_generalized_eigen(a, b, 2,
                                                 EigenOrder::SmallestOfPair);
    const GevResult hi = solve_generalized_eigen(a, b, 2,
                                                 EigenOrder::LargestOfPair);
    CHECK(lo.eigenvalues(0) == doctest::Approx(all.values(0)).epsilon(1e-8));
    CHECK(lo.eigenvalues(1) == doctest::Approx(all.values(1)).epsilon(1e-8));
    CHECK(hi.eigenvalues(0) == doctest::Approx(all.values(4)).epsilon(1e-8));
    CHECK(hi.eigenvalues(1) == doctest::Approx(all.values(5)).epsilon(1e-8));
    // Both ascending.
    CHECK(lo.eigenvalues(0) <= lo.eigenvalues(1));
    CHECK(hi.eigenvalues(0) <= hi.eigenvalues(1));
}

TEST_CASE("returned vectors are B-orthonormal") {
    oracle::Rng rng(43);
    const MatrixXd a = rng.spd(7, 0.3);
    const MatrixXd b = rng.spd(7, 0.4);
    const GevResult got = solve_generalized_eigen(a, b, 3);
    const MatrixXd gram = got.w.transpose() * b * got.w;
    CHECK((gram - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("near-singular B gets a ridge instead of garbage") {
    oracle::Rng rng(44);
    const int n = 6;
    // B of rank 2: strongly singular.
    const MatrixXd r = rng.matrix(n, 2);
    const MatrixXd b = r * r.transpose();
    const MatrixXd a = rng.spd(n, 0.5);
    const GevResult got = solve_generalized_eigen(a, b, 2);
    CHECK(got.b_ridge > 0.0);
    for (int i = 0; i < 2; ++i) CHECK(std::isfinite(got.eigenvalues(i)));
}

TEST_CASE("asymmetric inputs and bad d are rejected") {
    oracle::Rng rng(45);
    MatrixXd a = rng.spd(4, 0.5);
    const MatrixXd b = rng.spd(4, 0.5);
    MatrixXd bad = a;
    bad(0, 1) += 1.0;
    CHECK_THROWS_AS(solve_generalized_eigen(bad, b, 1), DimensionError);
    CHECK_THROWS_AS(solve_generalized_eigen(a, bad, 1), DimensionError);
    CHECK_THROWS_AS(solve_generalized_eigen(a, b, 0), ParameterError);
    CHECK_THROWS_AS(solve_generalized_eigen(a, b, 5), ParameterError);
}

TEST_CASE("embedding is the transpose-product of the projection") {
    oracle::Rng rng(46);
    const MatrixXd k = rng.spd(5, 0.1);
    const MatrixXd w = rng.matrix(5, 2);
    const MatrixXd z = embed(k, w);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 5);
    CHECK((z - w.transpose() * k).cwiseAbs().maxCoeff() == 0.0);
}
