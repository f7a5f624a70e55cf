#include <doctest.h>

#include "helpers.hpp"
#include "rlus/collapse.hpp"

using namespace rlus;
using rlus::test::gaussian;

TEST_SUITE("collapse") {

TEST_CASE("block sums example") {
    Matrix B(2, 2);
    B << 1, 2, 3, 4;
    Matrix expect(1, 2);
    expect << 4, 6;
    CHECK(block_sums(B, 2) == expect);
    const auto cs = collapse(B, Matrix::Ones(2, 1), 2);
    CHECK(cs.B_tilde == expect);
    CHECK(cs.Y_tilde(0, 0) == 2.0);
}

TEST_CASE("r = 1 leaves the system unchanged") {
    Rng rng(1);
    const Matrix B = gaussian(5, 3, rng), Y = gaussian(5, 2, rng);
    const auto cs = collapse(B, Y, 1);
    CHECK(cs.B_tilde == B);
    CHECK(cs.Y_tilde == Y);
}

TEST_CASE("collapse is invariant to r-local permutations") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Index r = 2 + t % 5, nb = 3 + t % 4, n = r * nb, d = 4;
        const Matrix B = gaussian(n, d, rng), X = gaussian(d, 3, rng);
        const auto pi = sample_rlocal(n, r, rng);
        const Matrix Y = B * X;
        const double diff = (collapse(B, apply(pi, Y), r).Y_tilde - collapse(B, Y, r).Y_tilde).norm();
        CHECK(diff < 1e-10);
    }
}

TEST_CASE("errors") {
    CHECK_THROWS_AS(block_sums(Matrix::Zero(5, 2), 2), std::invalid_argument);
    CHECK_THROWS_AS(collapse(Matrix::Zero(4, 2), Matrix::Zero(6, 1), 2), std::invalid_argument);
}

TEST_CASE("init_estimate on a determined system is exact") {
    Rng rng(3);
    const Index n = 40, d = 6, r = 4;  // n/r = 10 >= d
    const Matrix B = gaussian(n, d, rng), X = gaussian(d, 3, rng);
    const auto pi = sample_rlocal(n, r, rng);
    const Matrix est = init_estimate(collapse(B, apply(pi, B * X), r), B);
    CHECK((est - B * X).norm() < 1e-8);
}

TEST_CASE("init_estimate on an underdetermined system fits the collapsed equations") {
    Rng rng(4);
    const Index n = 24, d = 10, r = 4;  // n/r = 6 < d
    const Matrix B = gaussian(n, d, rng), X = gaussian(d, 2, rng);
    const auto cs = collapse(B, apply(sample_rlocal(n, r, rng), B * X), r);
    const Matrix est = init_estimate(cs, B);
    // recover X_hat from B X_hat (B has full column rank)
    const Matrix X_hat = B.colPivHouseholderQr().solve(est);
    CHECK((cs.B_tilde * X_hat - cs.Y_tilde).norm() < 1e-8);
}

TEST_CASE("init_estimate matches a full-SVD min-norm oracle") {
    Rng rng(5);
    const Index n = 16, d = 8, r = 4, m = 2;
    for (int t = 0; t < 10; ++t) {
        const Matrix B = gaussian(n, d, rng), X = gaussian(d, m, rng);
        const auto cs = collapse(B, apply(sample_rlocal(n, r, rng), B * X), r);
        const Matrix X_svd = test::svd_min_norm(cs.B_tilde, cs.Y_tilde);
        const Matrix X_ne = test::normal_eq_min_norm(cs.B_tilde, cs.Y_tilde);
        CHECK((X_svd - X_ne).norm() < 1e-10);
        const Matrix est = init_estimate(cs, B);
        const Matrix X_hat = B.colPivHouseholderQr().solve(est);
        CHECK((X_hat - X_svd).norm() < 1e-10);
    }
}

}
