#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "rlus/perm.hpp"

using namespace rlus;
using rlus::test::gaussian;

TEST_SUITE("perm") {

TEST_CASE("r = 1 forces the identity") {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) CHECK(sample_rlocal(4, 1, rng).is_identity());
}

TEST_CASE("r = 4 draws are uniform over the 24 permutations") {
    Rng rng(20240611);
    std::map<std::vector<Index>, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto p = sample_rlocal(4, 4, rng);
        const auto m = p.block(0).map();
        counts[{m.begin(), m.end()}]++;
    }
    REQUIRE(counts.size() == 24);
    double chi2 = 0.0;
    const double expected = draws / 24.0;
    for (const auto& [perm, c] : counts) {
        CHECK(std::abs(c / double(draws) - 1.0 / 24.0) <= 0.01);
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 23 degrees of freedom, 0.999 quantile
    CHECK(chi2 < 49.73);
}

TEST_CASE("block support of sampled permutations") {
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const auto p = sample_rlocal(6, 3, rng);
        for (Index i = 0; i < 3; ++i) CHECK(p.map_global(i) < 3);
        for (Index i = 3; i < 6; ++i) {
            CHECK(p.map_global(i) >= 3);
            CHECK(p.map_global(i) < 6);
        }
        // dense expansion: one 1 per row and column, nothing off the diagonal blocks
        const Matrix d = p.to_dense();
        for (Index i = 0; i < 6; ++i) {
            CHECK(d.row(i).sum() == 1.0);
            CHECK(d.col(i).sum() == 1.0);
            for (Index j = 0; j < 6; ++j)
                if (i / 3 != j / 3) CHECK(d(i, j) == 0.0);
        }
    }
}

TEST_CASE("sample_rlocal rejects r not dividing n") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_rlocal(7, 3, rng), std::invalid_argument);
}

TEST_CASE("apply examples") {
    Rng rng(11);
    const Matrix M = gaussian(6, 3, rng);
    CHECK(apply(RLocalPermutation::identity(6, 3), M) == M);

    const RLocalPermutation swap(2, {Permutation({1, 0})});
    Matrix col(2, 1);
    col << 1, 2;
    Matrix expect(2, 1);
    expect << 2, 1;
    CHECK(apply(swap, col) == expect);

    for (int t = 0; t < 10; ++t) {
        const auto p = sample_rlocal(6, 3, rng);
        CHECK(apply(p, apply(p.inverse(), M)) == M);
        // matches the dense product
        CHECK((apply(p, M) - p.to_dense() * M).norm() == 0.0);
    }
    CHECK_THROWS_AS(apply(swap, M), std::invalid_argument);
}

TEST_CASE("apply is linear") {
    Rng rng(12);
    const auto p = sample_rlocal(12, 4, rng);
    const Matrix M = gaussian(12, 2, rng), N = gaussian(12, 2, rng);
    const double a = 1.7, b = -0.3;
    CHECK((apply(p, a * M + b * N) - (a * apply(p, M) + b * apply(p, N))).norm() < 1e-14);
}

TEST_CASE("inverse examples") {
    CHECK(RLocalPermutation::identity(6, 3).inverse().is_identity());
    CHECK(Permutation({1, 2, 0}).inverse() == Permutation({2, 0, 1}));
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto p = sample_rlocal(12, 4, rng);
        CHECK(p.inverse().inverse() == p);
        CHECK(compose(p, p.inverse()).is_identity());
        CHECK((p.inverse().to_dense() - p.to_dense().transpose()).norm() == 0.0);
    }
}

TEST_CASE("hamming distortion") {
    Rng rng(9);
    const auto p = sample_rlocal(6, 3, rng);
    CHECK(hamming_distortion(p, p) == 0);

    const RLocalPermutation id = RLocalPermutation::identity(6, 3);
    const RLocalPermutation two_cycle(3, {Permutation({0, 2, 1}), Permutation::identity(3)});
    CHECK(hamming_distortion(id, two_cycle) == 2);
    CHECK(fractional_hamming(id, two_cycle) == doctest::Approx(2.0 / 6.0));

    for (int t = 0; t < 30; ++t) {
        const auto a = sample_rlocal(6, 3, rng), b = sample_rlocal(6, 3, rng);
        const Matrix da = a.to_dense(), db = b.to_dense();
        Index rows = 0;
        for (Index i = 0; i < 6; ++i) rows += (da.row(i) != db.row(i));
        CHECK(hamming_distortion(a, b) == rows);
        CHECK(hamming_distortion(a, b) == hamming_distortion(b, a));
        CHECK(hamming_distortion(a, b) <= 6);
        CHECK((hamming_distortion(a, b) == 0) == (a == b));
    }
    CHECK_THROWS_AS(hamming_distortion(id, RLocalPermutation::identity(9, 3)),
                    std::invalid_argument);
}

TEST_CASE("permutation validation and JSON") {
    CHECK_THROWS_AS(Permutation({0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(Permutation({0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(RLocalPermutation(3, {Permutation({1, 0})}), std::invalid_argument);
    Rng rng(2);
    const auto p = sample_rlocal(12, 4, rng);
    CHECK(rlocal_from_json(to_json(p)) == p);
    CHECK(to_json(p)["r"] == 4);
}

}
