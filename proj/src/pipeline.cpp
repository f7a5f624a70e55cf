#include "rlus/pipeline.hpp"

#include <chrono>

#include "rlus/linalg.hpp"
#include "rlus/parallel.hpp"

namespace rlus {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

StageAConfig pipeline_stage_a_defaults() {
    StageAConfig cfg;
    cfg.residual = ResidualKind::BlockSorted;
    cfg.row_factor = 3.0;
    return cfg;
}

StageAMode stage_a_mode_from_string(std::string_view s) {
    if (s == "per-view" || s == "perview") return StageAMode::PerView;
    if (s == "joint") return StageAMode::Joint;
    throw std::invalid_argument("unknown stage A mode: " + std::string(s));
}

Matrix run_stage_a_views(const Matrix& B, const Matrix& Y, Index r, const StageAConfig& cfg,
                         int threads, std::vector<std::vector<StageATraceEntry>>* traces) {
    if (B.rows() != Y.rows()) throw std::invalid_argument("stage A: B and Y row mismatch");
    Matrix y_hat(Y.rows(), Y.cols());
    if (traces) traces->assign(static_cast<std::size_t>(Y.cols()), {});
    parallel_for(Y.cols(), threads, [&](Index j) {
        auto res = run_stage_a(B, Y.col(j), r, cfg);
        y_hat.col(j) = res.y_hat;
        if (traces) (*traces)[static_cast<std::size_t>(j)] = std::move(res.trace);
    });
    return y_hat;
}

Matrix solve_for_permutation(const Matrix& B, const Matrix& Y, const RLocalPermutation& pi) {
    return linalg::pinv_solve(B, apply(pi.inverse(), Y));
}

Solution depermute(const Matrix& B, const Matrix& Y, Index r, const PipelineConfig& cfg) {
    if (r < 1 || B.rows() % r != 0) throw std::invalid_argument("depermute: r must divide n");
    if (B.rows() != Y.rows()) throw std::invalid_argument("depermute: B and Y row mismatch");
    if (B.rows() < B.cols()) throw std::invalid_argument("depermute: require n >= d");
    if (cfg.refine_rounds < 0) throw std::invalid_argument("depermute: refine_rounds must be >= 0");

    const auto start = std::chrono::steady_clock::now();
    Solution sol;
    if (cfg.stage_a_mode == StageAMode::Joint) {
        auto joint = run_stage_a_joint(B, Y, r, cfg.stage_a);
        sol.Y_hat = std::move(joint.Y_hat);
        sol.diagnostics.stage_a_traces = {std::move(joint.trace)};
    } else {
        sol.Y_hat = run_stage_a_views(B, Y, r, cfg.stage_a, cfg.threads,
                                      &sol.diagnostics.stage_a_traces);
    }
    sol.diagnostics.stage_a_ms = ms_since(start);

    const auto stage_b_start = std::chrono::steady_clock::now();
    auto aligned = stage_b_detailed(sol.Y_hat, Y, r, cfg.gw, cfg.threads);
    sol.X_hat = solve_for_permutation(B, Y, aligned.pi_hat);
    for (Index round = 0; round < cfg.refine_rounds; ++round) {
        aligned = stage_b_detailed(B * sol.X_hat, Y, r, cfg.gw, cfg.threads);
        sol.X_hat = solve_for_permutation(B, Y, aligned.pi_hat);
    }
    sol.pi_hat = std::move(aligned.pi_hat);
    sol.diagnostics.block_costs = std::move(aligned.block_costs);
    sol.diagnostics.stage_b_ms = ms_since(stage_b_start);
    sol.diagnostics.total_ms = ms_since(start);
    return sol;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json to_json(const Solution& sol) {
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& view : sol.diagnostics.stage_a_traces) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : view) entries.push_back(to_json(e));
        traces.push_back(std::move(entries));
    }
    return {{"pi_hat", to_json(sol.pi_hat)},
            {"X_hat", matrix_json(sol.X_hat)},
            {"diagnostics",
             {{"stage_a_traces", std::move(traces)},
              {"block_gw_costs", sol.diagnostics.block_costs},
              {"stage_a_ms", sol.diagnostics.stage_a_ms},
              {"stage_b_ms", sol.diagnostics.stage_b_ms},
              {"total_ms", sol.diagnostics.total_ms}}}};
}

}  // namespace rlus
