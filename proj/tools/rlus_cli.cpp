#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rlus/bench.hpp"
#include "rlus/svg.hpp"

namespace fs = std::filesystem;
using namespace rlus;
using nlohmann::json;

namespace {

// RLUS_LOG: unset/0 silent, 1 (or "info") progress events, 2 (or "trace")
// adds Stage-A iterations and per-block GW costs. JSON lines on stderr.
int log_level() {
    const char* v = std::getenv("RLUS_LOG");
    if (!v || !*v) return 0;
    const std::string s(v);
    if (s == "trace" || s == "debug") return 2;
    if (s == "info") return 1;
    try {
        return std::stoi(s);
    } catch (...) {
        return 1;
    }
}

std::mutex log_mutex;

void emit(int level, const json& event) {
    if (log_level() < level) return;
    std::lock_guard lock(log_mutex);
    std::cerr << event.dump() << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return json::parse(is);
}

// ---- solver flags ------------------------------------------------------------

struct SolverFlags {
    std::string options_file;
    std::optional<double> epsilon;
    bool absolute_epsilon = false;
    std::optional<Index> outer_iters, sinkhorn_iters, max_augmentations, refine_rounds;
    std::optional<double> tol, row_factor;
    std::string cost, candidates, lsq, residual, stage_a, levsort_variant;
    bool no_polish = false, no_sorted_starts = false;

    void add_to(CLI::App* app) {
        app->add_option("--options", options_file, "Solver options JSON (flags below override it)");
        app->add_option("--epsilon", epsilon, "Entropic weight (relative unless --absolute-epsilon)");
        app->add_flag("--absolute-epsilon", absolute_epsilon);
        app->add_option("--outer-iters", outer_iters);
        app->add_option("--sinkhorn-iters", sinkhorn_iters);
        app->add_option("--tol", tol);
        app->add_option("--cost", cost, "gram | sqeuclidean");
        app->add_option("--candidates", candidates, "rank | cross");
        app->add_option("--lsq", lsq, "incremental | recompute");
        app->add_option("--residual", residual, "plain | sorted");
        app->add_option("--row-factor", row_factor, "Stage-A system size in multiples of d");
        app->add_option("--max-augmentations", max_augmentations);
        app->add_option("--stage-a", stage_a, "joint | per-view");
        app->add_option("--refine-rounds", refine_rounds);
        app->add_flag("--no-polish", no_polish);
        app->add_flag("--no-sorted-starts", no_sorted_starts);
        app->add_option("--levsort-variant", levsort_variant, "score | assignment");
    }

    SolverOptions resolve(int threads) const {
        SolverOptions o = options_file.empty() ? SolverOptions{}
                                               : solver_options_from_json(read_json(options_file));
        auto& a = o.pipeline.stage_a;
        auto& g = o.pipeline.gw;
        if (epsilon) g.epsilon = *epsilon;
        if (absolute_epsilon) g.absolute_epsilon = true;
        if (outer_iters) g.outer_iters = *outer_iters;
        if (sinkhorn_iters) g.sinkhorn_iters = *sinkhorn_iters;
        if (tol) g.tol = *tol;
        if (!cost.empty()) g.cost_kind = cost_kind_from_string(cost);
        if (no_polish) g.polish = false;
        if (no_sorted_starts) g.sorted_starts = false;
        if (!candidates.empty()) a.candidate_mode = candidate_mode_from_string(candidates);
        if (!lsq.empty()) a.lsq = lsq_method_from_string(lsq);
        if (!residual.empty()) a.residual = residual_kind_from_string(residual);
        if (row_factor) a.row_factor = *row_factor;
        if (max_augmentations) a.max_augmentations = *max_augmentations;
        if (!stage_a.empty()) o.pipeline.stage_a_mode = stage_a_mode_from_string(stage_a);
        if (refine_rounds) o.pipeline.refine_rounds = *refine_rounds;
        if (!levsort_variant.empty()) o.levsort = levsort_variant_from_string(levsort_variant);
        o.pipeline.threads = threads;
        return o;
    }
};

// ---- commands --------------------------------------------------------------

struct GenerateArgs {
    InstanceConfig cfg;
    std::optional<double> snr_db;
    std::string out;
};

int cmd_generate(const GenerateArgs& args) {
    InstanceConfig cfg = args.cfg;
    cfg.snr_db = args.snr_db;
    const auto inst = generate(cfg);
    save_instance(inst, args.out);
    emit(1, {{"event", "generated"}, {"dir", args.out}, {"config", to_json(cfg)}, {"sigma2", inst.sigma2}});
    std::cout << "wrote instance to " << args.out << " (sigma2 = " << inst.sigma2 << ")\n";
    return 0;
}

int cmd_solve(const std::string& in, const std::string& method_name, const SolverFlags& flags,
              const std::string& out, int threads) {
    const auto inst = load_instance(in);
    const Method method = method_from_string(method_name);
    const SolverOptions opts = flags.resolve(threads);

    const auto t0 = std::chrono::steady_clock::now();
    json diagnostics;
    MethodOutput result;
    if (method == Method::DePermute) {
        auto sol = depermute(inst.B, inst.Y, inst.config.r, opts.pipeline);
        diagnostics = to_json(sol)["diagnostics"];
        for (const auto& trace : sol.diagnostics.stage_a_traces)
            for (const auto& e : trace) emit(2, {{"event", "stage_a"}, {"entry", to_json(e)}});
        for (std::size_t k = 0; k < sol.diagnostics.block_costs.size(); ++k)
            emit(2, {{"event", "stage_b"}, {"block", k}, {"gw_cost", sol.diagnostics.block_costs[k]}});
        result.pi_hat = std::move(sol.pi_hat);
        result.X_hat = std::move(sol.X_hat);
        result.Y_hat = std::move(sol.Y_hat);
    } else {
        result = run_method(inst, method, opts);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const auto rec = score(inst, method, result, ms);

    json x = json::array();
    for (Index i = 0; i < result.X_hat.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < result.X_hat.cols(); ++j) row.push_back(result.X_hat(i, j));
        x.push_back(std::move(row));
    }
    json doc{{"method", std::string(to_string(method))},
             {"config", to_json(inst.config)},
             {"options", to_json(opts)},
             {"pi_hat", to_json(result.pi_hat)},
             {"X_hat", std::move(x)},
             {"metrics",
              {{"frac_hamming", rec.frac_hamming},
               {"cov_error", rec.cov_error},
               {"signal_error", rec.signal_error},
               {"wall_ms", rec.wall_ms}}}};
    if (!diagnostics.is_null()) doc["diagnostics"] = std::move(diagnostics);
    write_text(out, doc.dump(2) + "\n");
    emit(1, {{"event", "solved"}, {"method", method_name}, {"metrics", doc["metrics"]}});
    std::cout << method_name << ": frac_hamming " << rec.frac_hamming << ", cov_error "
              << rec.cov_error << ", signal_error " << rec.signal_error << " (" << ms << " ms)\n";
    return 0;
}

// Runs the sweep, streaming rows to `<out>.partial` as they finish, then
// writes the canonical CSV and drops the partial file.
std::vector<TrialRecord> run_and_write(const SweepSpec& spec, const fs::path& out, int threads) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const fs::path partial = out.string() + ".partial";
    std::ofstream stream(partial);
    if (!stream) throw std::runtime_error("cannot write " + partial.string());
    stream << csv_header() << '\n';
    std::size_t done = 0;
    const std::size_t total = expand_sweep(spec).size();
    auto records = run_sweep(spec, threads, [&](const TrialRecord& rec) {
        stream << csv_row(rec) << '\n' << std::flush;
        ++done;
        emit(1, {{"event", "trial"}, {"done", done}, {"total", total},
                 {"method", std::string(to_string(rec.method))}, {"n", rec.config.n},
                 {"m", rec.config.m}, {"seed", rec.config.seed}, {"frac_hamming", rec.frac_hamming},
                 {"failed", rec.failed}});
    });
    stream.close();
    std::ofstream final_os(out);
    write_records_csv(final_os, records);
    final_os.close();
    fs::remove(partial);
    return records;
}

int cmd_sweep(const std::string& spec_file, const std::string& out, const std::string& summary,
              int threads) {
    const auto spec = sweep_spec_from_json(read_json(spec_file));
    const auto records = run_and_write(spec, out, threads);
    const auto rows = summarize(records);
    if (!summary.empty()) {
        std::ofstream os(summary);
        write_summary_csv(os, rows);
    }
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.failed;
    std::cout << "wrote " << records.size() << " records to " << out << " (" << failed
              << " failed)\n";
    return 0;
}

// One curve per distinct key, points ordered as the rows are.
svg::Plot plot_rows(const std::vector<SummaryRow>& rows, std::string title, std::string x_label,
                    std::string y_label, const std::function<double(const SummaryRow&)>& x,
                    const std::function<const Stat&(const SummaryRow&)>& y,
                    const std::function<std::string(const SummaryRow&)>& key) {
    svg::Plot plot{std::move(title), std::move(x_label), std::move(y_label), {}};
    std::map<std::string, std::size_t> index;
    for (const auto& row : rows) {
        const auto k = key(row);
        auto [it, fresh] = index.emplace(k, plot.series.size());
        if (fresh) plot.series.push_back({k, {}, {}, {}});
        auto& s = plot.series[it->second];
        s.x.push_back(x(row));
        s.y.push_back(y(row).mean);
        s.err.push_back(y(row).stderr_);
    }
    for (auto& s : plot.series) {
        // sort points by x for a clean polyline
        std::vector<std::size_t> order(s.x.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
        svg::Series sorted{s.label, {}, {}, {}};
        for (auto i : order) {
            sorted.x.push_back(s.x[i]);
            sorted.y.push_back(s.y[i]);
            sorted.err.push_back(s.err[i]);
        }
        s = std::move(sorted);
    }
    return plot;
}

std::vector<SummaryRow> run_figure(const std::string& name, const SweepSpec& spec,
                                   const fs::path& dir, int threads) {
    std::cout << name << ": " << expand_sweep(spec).size() << " trials\n" << std::flush;
    const auto records = run_and_write(spec, dir / (name + "_records.csv"), threads);
    const auto rows = summarize(records);
    std::ofstream csv(dir / (name + "_summary.csv"));
    write_summary_csv(csv, rows);
    write_text(dir / (name + "_summary.json"), to_json(rows).dump(2) + "\n");
    write_text(dir / (name + "_spec.json"), to_json(spec).dump(2) + "\n");
    return rows;
}

int cmd_reproduce(const std::string& figure, bool full, const fs::path& dir, int threads) {
    fs::create_directories(dir);
    const std::string scale = full ? "full grid" : "desk scale";
    auto str = [](auto v) { return std::to_string(v); };
    if (figure == "fig5") {
        const auto rows = run_figure("fig5", fig5_spec(full), dir, threads);
        const auto plot = plot_rows(
            rows, "Covariance error vs views (" + scale + ")", "m (views)", "cov_error",
            [](const SummaryRow& r) { return double(r.m); },
            [](const SummaryRow& r) -> const Stat& { return r.cov_error; },
            [&](const SummaryRow& r) { return "r=" + str(r.r) + " n=" + str(r.n); });
        write_text(dir / "fig5.svg", svg::render(plot));
    } else if (figure == "fig6") {
        const auto views = run_figure("fig6_views", fig6_views_spec(full), dir, threads);
        for (Index r : fig6_views_spec(full).r) {
            std::vector<SummaryRow> sub;
            for (const auto& row : views)
                if (row.r == r) sub.push_back(row);
            const auto plot = plot_rows(
                sub, "Distortion vs n, r=" + str(r) + " (" + scale + ")", "n", "frac_hamming",
                [](const SummaryRow& row) { return double(row.n); },
                [](const SummaryRow& row) -> const Stat& { return row.frac_hamming; },
                [&](const SummaryRow& row) { return "m=" + str(row.m); });
            write_text(dir / ("fig6_views_r" + str(r) + ".svg"), svg::render(plot));
        }
        const auto lev = run_figure("fig6_levsort", fig6_levsort_spec(full), dir, threads);
        for (Index r : fig6_levsort_spec(full).r) {
            std::vector<SummaryRow> sub;
            for (const auto& row : lev)
                if (row.r == r) sub.push_back(row);
            const auto plot = plot_rows(
                sub, "De-permute vs r-local LEVSORT, r=" + str(r) + " (" + scale + ")", "n",
                "frac_hamming", [](const SummaryRow& row) { return double(row.n); },
                [](const SummaryRow& row) -> const Stat& { return row.frac_hamming; },
                [](const SummaryRow& row) { return std::string(to_string(row.method)); });
            write_text(dir / ("fig6_levsort_r" + str(r) + ".svg"), svg::render(plot));
        }
    } else {
        throw CLI::ValidationError("reproduce", "expected fig5 or fig6");
    }
    std::cout << "wrote " << figure << " outputs to " << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"r-local unlabeled sensing: instance generation, solvers and benchmarks"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Draw a synthetic instance and save it");
    g->add_option("--n", gen.cfg.n)->required();
    g->add_option("--d", gen.cfg.d)->required();
    g->add_option("--m", gen.cfg.m)->required();
    g->add_option("--r", gen.cfg.r)->required();
    g->add_option("--snr-db", gen.snr_db, "Omit for a noiseless instance");
    g->add_option("--seed", gen.cfg.seed)->required();
    g->add_option("--out", gen.out)->required();

    std::string solve_in, solve_method, solve_out;
    SolverFlags flags;
    auto* s = app.add_subcommand("solve", "Run one method on a saved instance");
    s->add_option("--in", solve_in)->required()->check(CLI::ExistingDirectory);
    s->add_option("--method", solve_method)
        ->required()
        ->check(CLI::IsMember({"depermute", "levsort", "identity", "oracle"}));
    s->add_option("--out", solve_out)->required();
    flags.add_to(s);

    std::string sweep_spec, sweep_out, sweep_summary;
    auto* w = app.add_subcommand("sweep", "Run a grid of trials from a JSON spec");
    w->add_option("--spec", sweep_spec)->required()->check(CLI::ExistingFile);
    w->add_option("--out", sweep_out)->required();
    w->add_option("--summary", sweep_summary, "Also write the per-cell summary CSV here");

    std::string figure, repro_out;
    bool full = false;
    auto* r = app.add_subcommand("reproduce", "Run a canned figure grid and plot it");
    r->add_option("figure", figure)->required()->check(CLI::IsMember({"fig5", "fig6"}));
    r->add_flag("--full", full, "Full-size grid instead of the desk-scale one");
    r->add_option("--out", repro_out)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) return cmd_generate(gen);
        if (*s) return cmd_solve(solve_in, solve_method, flags, solve_out, threads);
        if (*w) return cmd_sweep(sweep_spec, sweep_out, sweep_summary, threads);
        if (*r) return cmd_reproduce(figure, full, repro_out, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
