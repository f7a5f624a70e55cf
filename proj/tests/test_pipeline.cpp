#include <doctest.h>

#include "helpers.hpp"
#include "rlus/pipeline.hpp"
#include "rlus/synth.hpp"

using namespace rlus;

namespace {

InstanceConfig cfg(Index n, Index d, Index m, Index r, std::optional<double> snr, std::uint64_t seed) {
    InstanceConfig c;
    c.n = n, c.d = d, c.m = m, c.r = r, c.snr_db = snr, c.seed = seed;
    return c;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("identity permutation on a determined system") {
    const auto inst = generate_unshuffled(cfg(64, 6, 3, 8, std::nullopt, 1));
    const auto sol = depermute(inst.B, inst.Y, 8);
    CHECK(sol.pi_hat.is_identity());
    CHECK(rel(sol.X_hat, inst.X_star) < 1e-8);
}

TEST_CASE("noiseless recovery with augmentation") {
    const auto inst = generate(cfg(96, 16, 8, 8, std::nullopt, 2));
    const auto sol = depermute(inst.B, inst.Y, 8);
    CHECK(sol.pi_hat == inst.pi_star);
    CHECK(rel(sol.X_hat, inst.X_star) < 1e-8);
    CHECK(sol.diagnostics.stage_a_traces.size() == 1);
    CHECK(sol.diagnostics.block_costs.size() == 12);
}

TEST_CASE("planted toy never beats the brute-force QAP oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = generate(cfg(8, 3, 4, 4, std::nullopt, 40 + seed));
        // oracle: per block, best relabeling of the clean Gram onto the observed one
        std::vector<Permutation> blocks;
        for (Index k = 0; k < 2; ++k) {
            const Matrix yc = inst.Y_clean.middleRows(k * 4, 4), yo = inst.Y.middleRows(k * 4, 4);
            blocks.push_back(brute_force_gw(yc * yc.transpose(), yo * yo.transpose()).first.inverse());
        }
        const double oracle = fractional_hamming(RLocalPermutation(4, blocks), inst.pi_star);
        const auto sol = depermute(inst.B, inst.Y, 4);
        CHECK(fractional_hamming(sol.pi_hat, inst.pi_star) >= oracle);
    }
}

TEST_CASE("relabeling the observations is equivariant") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = generate(cfg(96, 16, 4, 8, 30.0, 60 + seed));
        const auto sigma = test::random_rlocal(96, 8, 600 + seed);
        const auto a = depermute(inst.B, inst.Y, 8);
        const auto b = depermute(inst.B, apply(sigma, inst.Y), 8);
        CHECK((a.X_hat - b.X_hat).norm() < 1e-10);
        CHECK(b.pi_hat.to_dense() == sigma.to_dense() * a.pi_hat.to_dense());
    }
}

TEST_CASE("X_hat is the least-squares fit for the returned permutation") {
    const auto inst = generate(cfg(64, 12, 4, 8, 20.0, 3));
    const auto sol = depermute(inst.B, inst.Y, 8);
    const Matrix unshuffled = apply(sol.pi_hat.inverse(), inst.Y);
    CHECK((sol.X_hat - test::svd_min_norm(inst.B, unshuffled)).norm() < 1e-10);
    CHECK((sol.X_hat - solve_for_permutation(inst.B, inst.Y, sol.pi_hat)).norm() < 1e-12);
    const double best = (apply(sol.pi_hat, inst.B * sol.X_hat) - inst.Y).norm();
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        const Matrix X = sol.X_hat + 1e-3 * test::gaussian(12, 4, rng);
        CHECK(best <= (apply(sol.pi_hat, inst.B * X) - inst.Y).norm());
    }
}

TEST_CASE("outputs are valid r-local permutations even for poor conditioning") {
    Rng rng(5);
    Matrix B = test::gaussian(32, 8, rng);
    B.col(7) = B.col(6);  // rank deficient
    const Matrix Y = apply(sample_rlocal(32, 4, rng), B * test::gaussian(8, 2, rng));
    for (auto mode : {StageAMode::Joint, StageAMode::PerView}) {
        PipelineConfig c;
        c.stage_a_mode = mode;
        const auto sol = depermute(B, Y, 4, c);
        CHECK(sol.pi_hat.n() == 32);
        CHECK(sol.pi_hat.r() == 4);
        CHECK(sol.X_hat.allFinite());
    }
}

TEST_CASE("per-view mode and settings") {
    const auto inst = generate(cfg(96, 16, 4, 8, std::nullopt, 6));
    PipelineConfig c;
    c.stage_a = StageAConfig{};
    c.stage_a_mode = StageAMode::PerView;
    c.threads = 2;
    const auto sol = depermute(inst.B, inst.Y, 8, c);
    CHECK(sol.diagnostics.stage_a_traces.size() == 4);
    for (const auto& tr : sol.diagnostics.stage_a_traces) CHECK(tr.size() == 4);
    c.threads = 1;
    CHECK(depermute(inst.B, inst.Y, 8, c).pi_hat == sol.pi_hat);
    CHECK(stage_a_mode_from_string("joint") == StageAMode::Joint);
    CHECK(stage_a_mode_from_string("per-view") == StageAMode::PerView);
    CHECK_THROWS_AS(stage_a_mode_from_string("both"), std::invalid_argument);
}

TEST_CASE("deterministic and serializable") {
    const auto inst = generate(cfg(64, 12, 4, 8, 30.0, 7));
    const auto a = depermute(inst.B, inst.Y, 8), b = depermute(inst.B, inst.Y, 8);
    CHECK(a.pi_hat == b.pi_hat);
    CHECK(a.X_hat == b.X_hat);
    const auto j = to_json(a);
    CHECK(j.contains("pi_hat"));
    CHECK(rlocal_from_json(j["pi_hat"]) == a.pi_hat);
}

TEST_CASE("errors") {
    Rng rng(8);
    const Matrix B = test::gaussian(12, 4, rng), Y = test::gaussian(12, 2, rng);
    CHECK_THROWS_AS(depermute(B, Y, 5), std::invalid_argument);
    CHECK_THROWS_AS(depermute(B.topRows(3), Y.topRows(3), 1), std::invalid_argument);
    CHECK_THROWS_AS(depermute(B, Y.topRows(8), 4), std::invalid_argument);
}

}
