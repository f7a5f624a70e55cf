#include "rlus/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <tuple>

#include "rlus/parallel.hpp"

namespace rlus {

Method method_from_string(std::string_view s) {
    if (s == "depermute") return Method::DePermute;
    if (s == "levsort") return Method::RLocalLevsort;
    if (s == "identity") return Method::Identity;
    if (s == "oracle") return Method::OraclePermutation;
    throw std::invalid_argument("unknown method: " + std::string(s));
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::DePermute: return "depermute";
        case Method::RLocalLevsort: return "levsort";
        case Method::Identity: return "identity";
        case Method::OraclePermutation: return "oracle";
    }
    return "unknown";
}

Method to_method(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::RLocalLevsort: return Method::RLocalLevsort;
        case BaselineKind::Identity: return Method::Identity;
        case BaselineKind::OraclePermutation: return Method::OraclePermutation;
    }
    throw std::invalid_argument("unknown baseline kind");
}

namespace {

std::string_view to_string(CandidateMode m) {
    return m == CandidateMode::RankMatched ? "rank" : "cross";
}
std::string_view to_string(LsqMethod m) {
    return m == LsqMethod::Incremental ? "incremental" : "recompute";
}
std::string_view to_string(ResidualKind k) {
    return k == ResidualKind::Plain ? "plain" : "sorted";
}
std::string_view to_string(StageAMode m) { return m == StageAMode::Joint ? "joint" : "per-view"; }
std::string_view to_string(CostKind k) { return k == CostKind::Gram ? "gram" : "sqeuclidean"; }
std::string_view to_string(LevsortVariant v) {
    return v == LevsortVariant::ScoreSort ? "score" : "assignment";
}

}  // namespace

nlohmann::json to_json(const SolverOptions& opts) {
    const auto& a = opts.pipeline.stage_a;
    const auto& gw = opts.pipeline.gw;
    nlohmann::json j{{"candidate_mode", to_string(a.candidate_mode)},
                     {"lsq", to_string(a.lsq)},
                     {"residual", to_string(a.residual)},
                     {"row_factor", a.row_factor},
                     {"stage_a_mode", to_string(opts.pipeline.stage_a_mode)},
                     {"epsilon", gw.epsilon},
                     {"absolute_epsilon", gw.absolute_epsilon},
                     {"outer_iters", gw.outer_iters},
                     {"sinkhorn_iters", gw.sinkhorn_iters},
                     {"tol", gw.tol},
                     {"cost_kind", to_string(gw.cost_kind)},
                     {"polish", gw.polish},
                     {"sorted_starts", gw.sorted_starts},
                     {"refine_rounds", opts.pipeline.refine_rounds},
                     {"levsort_variant", to_string(opts.levsort)}};
    j["max_augmentations"] =
        a.max_augmentations ? nlohmann::json(*a.max_augmentations) : nlohmann::json(nullptr);
    return j;
}

SolverOptions solver_options_from_json(const nlohmann::json& j) {
    SolverOptions o;
    auto& a = o.pipeline.stage_a;
    auto& gw = o.pipeline.gw;
    if (j.contains("candidate_mode"))
        a.candidate_mode = candidate_mode_from_string(j.at("candidate_mode").get<std::string>());
    if (j.contains("lsq")) a.lsq = lsq_method_from_string(j.at("lsq").get<std::string>());
    if (j.contains("residual"))
        a.residual = residual_kind_from_string(j.at("residual").get<std::string>());
    a.row_factor = j.value("row_factor", a.row_factor);
    if (j.contains("stage_a_mode"))
        o.pipeline.stage_a_mode = stage_a_mode_from_string(j.at("stage_a_mode").get<std::string>());
    if (j.contains("max_augmentations") && !j.at("max_augmentations").is_null())
        a.max_augmentations = j.at("max_augmentations").get<Index>();
    gw.epsilon = j.value("epsilon", gw.epsilon);
    gw.absolute_epsilon = j.value("absolute_epsilon", gw.absolute_epsilon);
    gw.outer_iters = j.value("outer_iters", gw.outer_iters);
    gw.sinkhorn_iters = j.value("sinkhorn_iters", gw.sinkhorn_iters);
    gw.tol = j.value("tol", gw.tol);
    if (j.contains("cost_kind")) gw.cost_kind = cost_kind_from_string(j.at("cost_kind").get<std::string>());
    gw.polish = j.value("polish", gw.polish);
    gw.sorted_starts = j.value("sorted_starts", gw.sorted_starts);
    o.pipeline.refine_rounds = j.value("refine_rounds", o.pipeline.refine_rounds);
    if (j.contains("levsort_variant"))
        o.levsort = levsort_variant_from_string(j.at("levsort_variant").get<std::string>());
    gw.validate();
    return o;
}

double covariance_error(const Matrix& Y_hat, const Matrix& Y_star) {
    if (Y_hat.rows() != Y_star.rows() || Y_hat.cols() != Y_star.cols())
        throw std::invalid_argument("covariance_error: shape mismatch");
    const double cc = (Y_star.transpose() * Y_star).norm();
    if (cc == 0.0) throw std::invalid_argument("covariance_error: reference covariance is zero");
    // [A C] = Q R gives A A^T - C C^T = Q (R1 R1^T - R2 R2^T) Q^T, so the norm
    // comes from a 2m x 2m product without cancellation in a squared sum.
    const Index m = Y_hat.cols();
    Matrix z(Y_hat.rows(), 2 * m);
    z << Y_hat, Y_star;
    const Eigen::HouseholderQR<Matrix> qr(z);
    const Index k = std::min(z.rows(), z.cols());
    const Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Matrix diff = R.leftCols(m) * R.leftCols(m).transpose() -
                        R.rightCols(m) * R.rightCols(m).transpose();
    return diff.norm() / cc;
}

double relative_error(const Matrix& X_hat, const Matrix& X_star) {
    if (X_hat.rows() != X_star.rows() || X_hat.cols() != X_star.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    return (X_hat - X_star).norm() / X_star.norm();
}

MethodOutput run_method(const SensingInstance& inst, Method method, const SolverOptions& opts) {
    const auto view = inst.problem();
    MethodOutput out;
    switch (method) {
        case Method::DePermute: {
            auto sol = depermute(view.B, view.Y, view.r, opts.pipeline);
            out.pi_hat = std::move(sol.pi_hat);
            out.X_hat = std::move(sol.X_hat);
            out.Y_hat = std::move(sol.Y_hat);
            return out;
        }
        case Method::RLocalLevsort:
            out.pi_hat = rlocal_levsort(view.B, view.Y, view.r, opts.levsort);
            out.X_hat = solve_for_permutation(view.B, view.Y, out.pi_hat);
            break;
        case Method::Identity:
            out.pi_hat = RLocalPermutation::identity(view.B.rows(), view.r);
            out.X_hat = solve_for_permutation(view.B, view.Y, out.pi_hat);
            break;
        case Method::OraclePermutation:
            out.pi_hat = inst.pi_star;
            out.X_hat = oracle_solve(inst);
            break;
    }
    out.Y_hat = view.B * out.X_hat;
    return out;
}

TrialRecord score(const SensingInstance& inst, Method method, const MethodOutput& out,
                  double wall_ms) {
    TrialRecord rec;
    rec.config = inst.config;
    rec.method = method;
    rec.frac_hamming = fractional_hamming(inst.pi_star, out.pi_hat);
    rec.cov_error = covariance_error(out.Y_hat, inst.Y_clean);
    rec.signal_error = relative_error(out.X_hat, inst.X_star);
    rec.wall_ms = wall_ms;
    return rec;
}

TrialRecord run_trial(const InstanceConfig& cfg, Method method, const SolverOptions& opts) {
    const SensingInstance inst = generate(cfg);
    const auto start = std::chrono::steady_clock::now();
    try {
        const MethodOutput out = run_method(inst, method, opts);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        TrialRecord rec = score(inst, method, out, ms);
        if (!std::isfinite(rec.cov_error) || !std::isfinite(rec.signal_error))
            throw NumericalFailure("non-finite metric");
        return rec;
    } catch (const std::exception& e) {
        TrialRecord rec;
        rec.config = cfg;
        rec.method = method;
        rec.frac_hamming = 1.0;
        rec.failed = true;
        rec.error = e.what();
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return rec;
    }
}

void SweepSpec::validate() const {
    if (r.empty() || n_multiples.empty() || m.empty() || snr_db.empty() || methods.empty())
        throw std::invalid_argument("SweepSpec: every grid must be nonempty");
    if (runs < 1) throw std::invalid_argument("SweepSpec: runs must be >= 1");
    for (Index rr : r)
        for (Index mult : n_multiples)
            if (rr < 1 || mult < 1 || mult * rr < d)
                throw std::invalid_argument("SweepSpec: every n = mult * r must satisfy n >= d");
    solver.pipeline.gw.validate();
}

nlohmann::json to_json(const SweepSpec& spec) {
    nlohmann::json snr = nlohmann::json::array();
    for (const auto& s : spec.snr_db) snr.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : spec.methods) methods.push_back(to_string(m));
    return {{"d", spec.d},       {"r", spec.r},         {"n_multiples", spec.n_multiples},
            {"m", spec.m},       {"snr_db", snr},       {"methods", methods},
            {"runs", spec.runs}, {"base_seed", spec.base_seed}, {"solver", to_json(spec.solver)}};
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
    SweepSpec spec;
    spec.d = j.at("d").get<Index>();
    spec.r = j.at("r").get<std::vector<Index>>();
    spec.n_multiples = j.at("n_multiples").get<std::vector<Index>>();
    spec.m = j.at("m").get<std::vector<Index>>();
    for (const auto& s : j.at("snr_db"))
        spec.snr_db.push_back(s.is_null() ? std::nullopt : std::optional<double>(s.get<double>()));
    for (const auto& m : j.at("methods")) spec.methods.push_back(method_from_string(m.get<std::string>()));
    spec.runs = j.value("runs", spec.runs);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    if (j.contains("solver")) spec.solver = solver_options_from_json(j.at("solver"));
    spec.validate();
    return spec;
}

std::uint64_t trial_seed(std::uint64_t base_seed, Index r, Index n, Index m,
                         std::optional<double> snr_db, Index run) {
    std::uint64_t s = mix_seed(base_seed);
    s = combine_seed(s, static_cast<std::uint64_t>(r));
    s = combine_seed(s, static_cast<std::uint64_t>(n));
    s = combine_seed(s, static_cast<std::uint64_t>(m));
    s = combine_seed(s, snr_db ? std::bit_cast<std::uint64_t>(*snr_db) : ~std::uint64_t{0});
    return combine_seed(s, static_cast<std::uint64_t>(run));
}

std::vector<std::pair<InstanceConfig, Method>> expand_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<std::pair<InstanceConfig, Method>> out;
    for (Index r : spec.r)
        for (Index mult : spec.n_multiples)
            for (Index m : spec.m)
                for (const auto& snr : spec.snr_db)
                    for (Index run = 0; run < spec.runs; ++run) {
                        InstanceConfig cfg;
                        cfg.n = mult * r;
                        cfg.d = spec.d;
                        cfg.m = m;
                        cfg.r = r;
                        cfg.snr_db = snr;
                        cfg.seed = trial_seed(spec.base_seed, r, cfg.n, m, snr, run);
                        for (Method method : spec.methods) out.emplace_back(cfg, method);
                    }
    return out;
}

std::vector<TrialRecord> run_sweep(const SweepSpec& spec, int threads, const RecordSink& sink) {
    const auto trials = expand_sweep(spec);
    std::vector<TrialRecord> records(trials.size());
    std::mutex sink_mutex;
    parallel_for(static_cast<Index>(trials.size()), threads, [&](Index i) {
        const auto& [cfg, method] = trials[static_cast<std::size_t>(i)];
        records[static_cast<std::size_t>(i)] = run_trial(cfg, method, spec.solver);
        if (sink) {
            std::lock_guard lock(sink_mutex);
            sink(records[static_cast<std::size_t>(i)]);
        }
    });
    return records;
}

namespace {

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_snr(const std::optional<double>& s) { return s ? fmt_double(*s) : "inf"; }

}  // namespace

std::string csv_header() {
    return "schema,method,n,d,m,r,snr_db,seed,frac_hamming,cov_error,signal_error,wall_ms,failed";
}

std::string csv_row(const TrialRecord& rec) {
    std::ostringstream os;
    const auto& c = rec.config;
    os << kCsvSchema << ',' << to_string(rec.method) << ',' << c.n << ',' << c.d << ',' << c.m << ','
       << c.r << ',' << fmt_snr(c.snr_db) << ',' << c.seed << ',' << fmt_double(rec.frac_hamming) << ','
       << fmt_double(rec.cov_error) << ',' << fmt_double(rec.signal_error) << ','
       << fmt_double(rec.wall_ms) << ',' << (rec.failed ? 1 : 0);
    return os.str();
}

void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
    os << csv_header() << '\n';
    for (const auto& rec : records) os << csv_row(rec) << '\n';
}

Stat describe(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("describe: no values");
    Stat s;
    const double count = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / count;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_ = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) / std::sqrt(count) : 0.0;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    return s;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    using Key = std::tuple<Index, Index, Index, double, int, Index>;
    struct Acc {
        SummaryRow row;
        std::vector<double> fh, cov, sig;
        double wall = 0.0;
    };
    std::map<Key, Acc> groups;
    for (const auto& rec : records) {
        const auto& c = rec.config;
        const double snr_key = c.snr_db.value_or(std::numeric_limits<double>::infinity());
        Key key{c.r, c.n, c.m, snr_key, static_cast<int>(rec.method), c.d};
        auto& acc = groups[key];
        acc.row.method = rec.method;
        acc.row.n = c.n;
        acc.row.d = c.d;
        acc.row.m = c.m;
        acc.row.r = c.r;
        acc.row.snr_db = c.snr_db;
        if (rec.failed) {
            ++acc.row.failures;
            continue;
        }
        acc.fh.push_back(rec.frac_hamming);
        acc.cov.push_back(rec.cov_error);
        acc.sig.push_back(rec.signal_error);
        acc.wall += rec.wall_ms;
    }
    std::vector<SummaryRow> rows;
    for (auto& [key, acc] : groups) {
        acc.row.count = static_cast<Index>(acc.fh.size());
        if (acc.row.count > 0) {
            acc.row.frac_hamming = describe(acc.fh);
            acc.row.cov_error = describe(acc.cov);
            acc.row.signal_error = describe(acc.sig);
            acc.row.mean_wall_ms = acc.wall / static_cast<double>(acc.row.count);
        }
        rows.push_back(acc.row);
    }
    return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "method,n,d,m,r,snr_db,count,failures,frac_hamming_mean,frac_hamming_stderr,"
          "cov_error_mean,cov_error_stderr,signal_error_mean,signal_error_stderr,wall_ms_mean\n";
    for (const auto& row : rows) {
        os << to_string(row.method) << ',' << row.n << ',' << row.d << ',' << row.m << ',' << row.r
           << ',' << fmt_snr(row.snr_db) << ',' << row.count << ',' << row.failures << ','
           << fmt_double(row.frac_hamming.mean) << ',' << fmt_double(row.frac_hamming.stderr_) << ','
           << fmt_double(row.cov_error.mean) << ',' << fmt_double(row.cov_error.stderr_) << ','
           << fmt_double(row.signal_error.mean) << ',' << fmt_double(row.signal_error.stderr_) << ','
           << fmt_double(row.mean_wall_ms) << '\n';
    }
}

nlohmann::json to_json(const std::vector<SummaryRow>& rows) {
    auto stat = [](const Stat& s) {
        return nlohmann::json{{"mean", s.mean}, {"stderr", s.stderr_}, {"min", s.min}, {"max", s.max}};
    };
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        out.push_back({{"method", to_string(row.method)},
                       {"n", row.n},
                       {"d", row.d},
                       {"m", row.m},
                       {"r", row.r},
                       {"snr_db", row.snr_db ? nlohmann::json(*row.snr_db) : nlohmann::json(nullptr)},
                       {"count", row.count},
                       {"failures", row.failures},
                       {"frac_hamming", stat(row.frac_hamming)},
                       {"cov_error", stat(row.cov_error)},
                       {"signal_error", stat(row.signal_error)},
                       {"wall_ms_mean", row.mean_wall_ms}});
    }
    return out;
}

SweepSpec fig5_spec(bool full) {
    SweepSpec spec;
    spec.snr_db = {30.0};
    spec.methods = {Method::DePermute};
    spec.runs = 25;
    spec.base_seed = 5;
    if (full) {
        spec.d = 64;
        spec.r = {4, 5, 8, 10};
        spec.n_multiples = {48};
        spec.m = {4, 8, 16, 32, 64};
    } else {
        spec.d = 32;
        spec.r = {8};
        spec.n_multiples = {28};
        spec.m = {4, 8, 16, 32};
    }
    return spec;
}

SweepSpec fig6_views_spec(bool full) {
    SweepSpec spec;
    spec.snr_db = {30.0};
    spec.methods = {Method::DePermute};
    spec.runs = 25;
    spec.base_seed = 6;
    spec.m = {8, 32};
    if (full) {
        spec.d = 64;
        spec.r = {7, 8, 9, 10};
        spec.n_multiples = {48, 52, 56, 60};
    } else {
        spec.d = 32;
        spec.r = {8};
        spec.n_multiples = {24, 26, 28, 30};
    }
    return spec;
}

SweepSpec fig6_levsort_spec(bool full) {
    SweepSpec spec;
    spec.snr_db = {30.0};
    spec.methods = {Method::DePermute, Method::RLocalLevsort};
    spec.runs = 25;
    spec.base_seed = 7;
    if (full) {
        spec.d = 64;
        spec.r = {11, 12, 13, 14};
        spec.n_multiples = {48, 52, 56, 60};
        spec.m = {64};
    } else {
        spec.d = 32;
        spec.r = {12};
        spec.n_multiples = {24, 28};
        spec.m = {32};
    }
    return spec;
}

}  // namespace rlus
