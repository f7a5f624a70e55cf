#include <doctest.h>

#include "helpers.hpp"
#include "rlus/baselines.hpp"
#include "rlus/linalg.hpp"

using namespace rlus;

namespace {

InstanceConfig cfg(Index n, Index d, Index m, Index r, std::optional<double> snr, std::uint64_t seed) {
    InstanceConfig c;
    c.n = n, c.d = d, c.m = m, c.r = r, c.snr_db = snr, c.seed = seed;
    return c;
}

Matrix orthogonal(Index d, Rng& rng) {
    Eigen::HouseholderQR<Matrix> qr(test::gaussian(d, d, rng));
    return qr.householderQ() * Matrix::Identity(d, d);
}

// Blocks whose leverage scores are pairwise distinct by a margin.
bool distinct_scores(const Vector& s, Index r, Index k) {
    for (Index i = k * r; i < (k + 1) * r; ++i)
        for (Index j = i + 1; j < (k + 1) * r; ++j)
            if (std::abs(s(i) - s(j)) < 1e-8) return false;
    return true;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("leverage scores are projection diagonals") {
    Rng rng(1);
    const Matrix B = test::gaussian(20, 4, rng);
    const Vector s = leverage_scores(B, 4);
    const Matrix P = B * (B.transpose() * B).inverse() * B.transpose();
    CHECK((s - P.diagonal()).norm() < 1e-12);
    CHECK(s.sum() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("levsort with identity permutation and m = d") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = generate_unshuffled(cfg(40, 5, 5, 5, std::nullopt, seed));
        const Vector sb = leverage_scores(inst.B, 5), sy = leverage_scores(inst.Y, 5);
        CHECK((sb - sy).norm() < 1e-10);
        for (auto variant : {LevsortVariant::ScoreSort, LevsortVariant::BlockAssignment}) {
            const auto pi = rlocal_levsort(inst.B, inst.Y, 5, variant);
            for (Index k = 0; k < 8; ++k)
                if (distinct_scores(sb, 5, k)) CHECK(pi.block(k).is_identity());
        }
    }
}

TEST_CASE("levsort with an orthogonal signal recovers distinct-score blocks") {
    Rng rng(2);
    for (int t = 0; t < 5; ++t) {
        const Index n = 48, d = 6, r = 6;
        const Matrix B = test::gaussian(n, d, rng);
        const Matrix X = orthogonal(d, rng);
        CHECK((X * X.transpose() - Matrix::Identity(d, d)).norm() < 1e-12);
        const auto pi = sample_rlocal(n, r, rng);
        const Matrix Y = apply(pi, B * X);
        const Vector sb = leverage_scores(B, d);
        const Vector sy = leverage_scores(Y, d);
        CHECK((apply(pi, sb) - sy).norm() < 1e-10);
        const auto est = rlocal_levsort(B, Y, r);
        for (Index k = 0; k < n / r; ++k)
            if (distinct_scores(sb, r, k)) CHECK(est.block(k) == pi.block(k));
    }
}

TEST_CASE("levsort tie case still returns a permutation") {
    Rng rng(3);
    Matrix B = test::gaussian(8, 2, rng);
    B.row(1) = B.row(0);
    B.row(5) = -B.row(4);
    const Matrix Y = B * test::gaussian(2, 2, rng);
    for (auto variant : {LevsortVariant::ScoreSort, LevsortVariant::BlockAssignment}) {
        const auto pi = rlocal_levsort(B, Y, 4, variant);
        CHECK(pi.n() == 8);
        CHECK(pi == rlocal_levsort(B, Y, 4, variant));
    }
    CHECK(levsort_variant_from_string("assignment") == LevsortVariant::BlockAssignment);
}

TEST_CASE("levsort tolerates rank-deficient Y") {
    const auto inst = generate(cfg(32, 8, 1, 4, 30.0, 4));
    const auto pi = rlocal_levsort(inst.B, inst.Y, 4);
    CHECK(pi.num_blocks() == 8);
}

TEST_CASE("oracle solve") {
    const auto clean = generate(cfg(64, 8, 3, 8, std::nullopt, 5));
    CHECK((oracle_solve(clean) - clean.X_star).norm() < 1e-8);

    const auto ident = generate_unshuffled(cfg(32, 6, 2, 4, std::nullopt, 6));
    CHECK((oracle_solve(ident) - test::svd_min_norm(ident.B, ident.Y)).norm() < 1e-10);

    InstanceConfig c = cfg(512, 64, 4, 64, 30.0, 7);  // d = 64, n = 8r
    const auto noisy = generate(c);
    const double err = (oracle_solve(noisy) - noisy.X_star).norm() / noisy.X_star.norm();
    CHECK(err > 0.0);
    CHECK(err < 0.05);
}

}
