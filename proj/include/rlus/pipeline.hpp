#pragma once

#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlus/gwalign.hpp"
#include "rlus/perm.hpp"
#include "rlus/stage_a.hpp"

namespace rlus {

/// PerView runs Stage-A independently on every column of Y. Joint shares one
/// augmentation sequence across all columns (see run_stage_a_joint).
enum class StageAMode { PerView, Joint };
StageAMode stage_a_mode_from_string(std::string_view s);

/// Stage-A settings the pipeline uses by default: the block-sorted residual
/// and an augmented system of 3d rows. StageAConfig{} on its own stops at d
/// rows and ranks candidates by the plain residual.
StageAConfig pipeline_stage_a_defaults();

struct PipelineConfig {
    StageAConfig stage_a = pipeline_stage_a_defaults();
    StageAMode stage_a_mode = StageAMode::Joint;
    GwConfig gw;
    /// Extra (Stage-B, least-squares) rounds on Y_hat = B X_hat. Zero keeps
    /// the plain two-stage pass.
    Index refine_rounds = 0;
    /// Workers for the per-view and per-block loops.
    int threads = 1;
};

struct Diagnostics {
    // One trace per view, or a single shared trace in joint mode.
    std::vector<std::vector<StageATraceEntry>> stage_a_traces;
    std::vector<double> block_costs;
    double stage_a_ms = 0.0;
    double stage_b_ms = 0.0;
    double total_ms = 0.0;
};

/// Orientation: Y ~ pi_hat * B * X_hat.
struct Solution {
    RLocalPermutation pi_hat;
    Matrix X_hat;  // d x m
    Matrix Y_hat;  // n x m, Stage-A estimate of B X*
    Diagnostics diagnostics;
};

/// Stage-A on every column of Y; column j of the result is y_hat_j.
Matrix run_stage_a_views(const Matrix& B, const Matrix& Y, Index r, const StageAConfig& cfg,
                         int threads = 1,
                         std::vector<std::vector<StageATraceEntry>>* traces = nullptr);

/// X_hat = B^+ (pi^T Y), the least-squares signal for a fixed permutation.
Matrix solve_for_permutation(const Matrix& B, const Matrix& Y, const RLocalPermutation& pi);

Solution depermute(const Matrix& B, const Matrix& Y, Index r, const PipelineConfig& cfg = {});

nlohmann::json to_json(const Solution& sol);

}  // namespace rlus
