#include <doctest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "rlus/bench.hpp"

using namespace rlus;

namespace {

InstanceConfig cfg(Index n, Index d, Index m, Index r, std::optional<double> snr, std::uint64_t seed) {
    InstanceConfig c;
    c.n = n, c.d = d, c.m = m, c.r = r, c.snr_db = snr, c.seed = seed;
    return c;
}

SweepSpec small_spec() {
    SweepSpec s;
    s.d = 8;
    s.r = {4};
    s.n_multiples = {4, 6};
    s.m = {2};
    s.snr_db = {30.0};
    s.methods = {Method::DePermute, Method::RLocalLevsort, Method::OraclePermutation};
    s.runs = 3;
    s.base_seed = 77;
    return s;
}

// metric columns only: drop wall_ms (second-to-last field)
std::string strip_timing(const std::string& csv) {
    std::istringstream is(csv);
    std::ostringstream os;
    for (std::string line; std::getline(is, line);) {
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        os << line.substr(0, prev) << line.substr(last) << '\n';
    }
    return os.str();
}

std::string sweep_csv(const SweepSpec& s, int threads) {
    std::ostringstream os;
    write_records_csv(os, run_sweep(s, threads));
    return os.str();
}

TrialRecord record(Method m, Index n, double fh, double cov = 0.0, double sig = 0.0) {
    TrialRecord r;
    r.config = cfg(n, 4, 2, 4, 30.0, 0);
    r.method = m;
    r.frac_hamming = fh;
    r.cov_error = cov;
    r.signal_error = sig;
    return r;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("metrics against dense computation") {
    Rng rng(1);
    const Matrix Y = test::gaussian(30, 3, rng), Yh = test::gaussian(30, 3, rng);
    const Matrix C = Y * Y.transpose(), Ch = Yh * Yh.transpose();
    CHECK(covariance_error(Yh, Y) == doctest::Approx((Ch - C).norm() / C.norm()).epsilon(1e-12));
    CHECK(covariance_error(Y, Y) < 1e-12);
    const Matrix X = test::gaussian(5, 3, rng), Xh = test::gaussian(5, 3, rng);
    CHECK(relative_error(Xh, X) == doctest::Approx((Xh - X).norm() / X.norm()).epsilon(1e-14));
}

TEST_CASE("run_trial examples") {
    const auto oracle = run_trial(cfg(64, 8, 2, 8, std::nullopt, 3), Method::OraclePermutation, {});
    CHECK_FALSE(oracle.failed);
    CHECK(oracle.frac_hamming == 0.0);
    CHECK(oracle.signal_error < 1e-8);

    // r = 1 forces the identity permutation
    const auto ident = run_trial(cfg(16, 4, 2, 1, 30.0, 4), Method::Identity, {});
    CHECK(ident.frac_hamming == 0.0);
}

TEST_CASE("depermute record matches independently computed metrics") {
    const auto c = cfg(8, 3, 4, 4, std::nullopt, 5);
    const SolverOptions opts;
    const auto rec = run_trial(c, Method::DePermute, opts);
    const auto inst = generate(c);
    const auto sol = depermute(inst.B, inst.Y, 4, opts.pipeline);
    Index wrong = 0;
    for (Index i = 0; i < 8; ++i) wrong += sol.pi_hat.map_global(i) != inst.pi_star.map_global(i);
    const Matrix C = inst.Y_clean * inst.Y_clean.transpose();
    const Matrix Ch = sol.Y_hat * sol.Y_hat.transpose();
    CHECK(std::abs(rec.frac_hamming - double(wrong) / 8.0) < 1e-12);
    CHECK(std::abs(rec.cov_error - (Ch - C).norm() / C.norm()) < 1e-12);
    CHECK(std::abs(rec.signal_error - (sol.X_hat - inst.X_star).norm() / inst.X_star.norm()) < 1e-12);
}

TEST_CASE("solver failures are recorded") {
    SolverOptions opts;
    opts.pipeline.gw.epsilon = 1e-320;
    opts.pipeline.gw.absolute_epsilon = true;
    const auto rec = run_trial(cfg(32, 8, 2, 4, 30.0, 6), Method::DePermute, opts);
    CHECK(rec.failed);
    CHECK_FALSE(rec.error.empty());
}

TEST_CASE("oracle dominance on signal error") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto c = cfg(96, 16, 8, 8, 30.0, 10 + seed);
        const double floor = run_trial(c, Method::OraclePermutation, {}).signal_error;
        for (auto m : {Method::DePermute, Method::RLocalLevsort, Method::Identity})
            CHECK(run_trial(c, m, {}).signal_error >= floor - 1e-10);
    }
}

TEST_CASE("sweep seeds and regeneration") {
    SweepSpec s = small_spec();
    s.n_multiples = {4};
    s.methods = {Method::OraclePermutation};
    const auto recs = run_sweep(s);
    REQUIRE(recs.size() == 3);
    std::set<std::uint64_t> seeds;
    for (const auto& r : recs) seeds.insert(r.config.seed);
    CHECK(seeds.size() == 3);
    // a record's config regenerates the instance the trial saw
    const auto again = run_trial(recs[1].config, Method::OraclePermutation, s.solver);
    CHECK(again.signal_error == recs[1].signal_error);
    CHECK(generate(recs[1].config).Y == generate(recs[1].config).Y);
}

TEST_CASE("sweeps are deterministic across runs and thread counts") {
    const auto s = small_spec();
    const auto a = sweep_csv(s, 1);
    CHECK(strip_timing(a) == strip_timing(sweep_csv(s, 1)));
    CHECK(strip_timing(a) == strip_timing(sweep_csv(s, 3)));
    CHECK(a.rfind(csv_header() + "\n", 0) == 0);
}

TEST_CASE("trial seeds do not depend on the method") {
    const auto pairs = expand_sweep(small_spec());
    CHECK(pairs.size() == 2 * 3 * 3);
    for (std::size_t i = 0; i < pairs.size(); i += 3) {
        CHECK(pairs[i].first == pairs[i + 1].first);
        CHECK(pairs[i].first == pairs[i + 2].first);
    }
}

TEST_CASE("CSV schema") {
    CHECK(csv_header() ==
          "schema,method,n,d,m,r,snr_db,seed,frac_hamming,cov_error,signal_error,wall_ms,failed");
    const auto row = csv_row(record(Method::DePermute, 16, 0.25));
    CHECK(row.rfind("v1,depermute,16,4,2,4,30,", 0) == 0);
    CHECK(std::count(row.begin(), row.end(), ',') == 12);
}

TEST_CASE("summarize") {
    std::vector<TrialRecord> same(25, record(Method::DePermute, 16, 0.125, 0.5, 0.25));
    const auto one = summarize(same);
    REQUIRE(one.size() == 1);
    CHECK(one[0].count == 25);
    CHECK(one[0].frac_hamming.mean == 0.125);
    CHECK(one[0].frac_hamming.stderr_ == 0.0);
    CHECK(one[0].cov_error.mean == 0.5);

    std::vector<TrialRecord> two = {record(Method::RLocalLevsort, 32, 0.5),
                                    record(Method::DePermute, 32, 0.1),
                                    record(Method::DePermute, 16, 0.2)};
    const auto rows = summarize(two);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].n == 16);
    CHECK(rows[1].n == 32);
    CHECK(rows[1].method == Method::DePermute);
    CHECK(rows[2].method == Method::RLocalLevsort);

    CHECK_THROWS_AS(summarize({}), std::invalid_argument);

    // spreadsheet-style recomputation
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrialRecord> recs;
    std::vector<double> vals;
    for (int i = 0; i < 10; ++i) {
        vals.push_back(u(rng));
        recs.push_back(record(Method::DePermute, 16, vals.back()));
    }
    double mean = 0.0;
    for (double v : vals) mean += v / 10.0;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean) / 9.0;
    const auto s = summarize(recs)[0];
    CHECK(s.frac_hamming.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(s.frac_hamming.stderr_ == doctest::Approx(std::sqrt(var / 10.0)).epsilon(1e-12));
    CHECK(s.frac_hamming.mean >= s.frac_hamming.min);
    CHECK(s.frac_hamming.mean <= s.frac_hamming.max);

    recs[3].failed = true;
    const auto f = summarize(recs)[0];
    CHECK(f.count == 9);
    CHECK(f.failures == 1);
}

TEST_CASE("spec and option JSON round trips") {
    auto s = small_spec();
    s.snr_db.push_back(std::nullopt);
    s.solver.pipeline.stage_a.residual = ResidualKind::Plain;
    s.solver.pipeline.gw.epsilon = 0.05;
    const auto back = sweep_spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.snr_db.size() == 2);
    CHECK_FALSE(back.snr_db[1].has_value());
    CHECK(back.solver.pipeline.gw.epsilon == 0.05);

    const auto opts = solver_options_from_json({{"epsilon", 0.1}});
    CHECK(opts.pipeline.gw.epsilon == 0.1);
    CHECK(opts.pipeline.stage_a_mode == StageAMode::Joint);

    SweepSpec bad = small_spec();
    bad.runs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_spec();
    bad.m.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("canned grids validate") {
    for (bool full : {false, true}) {
        CHECK_NOTHROW(fig5_spec(full).validate());
        CHECK_NOTHROW(fig6_views_spec(full).validate());
        CHECK_NOTHROW(fig6_levsort_spec(full).validate());
    }
    const auto full = fig6_views_spec(true);
    CHECK(full.d == 64);
    CHECK(full.r == std::vector<Index>{7, 8, 9, 10});
    CHECK(full.n_multiples == std::vector<Index>{48, 52, 56, 60});
    CHECK(full.m == std::vector<Index>{8, 32});
    CHECK(full.runs == 25);
}

}
