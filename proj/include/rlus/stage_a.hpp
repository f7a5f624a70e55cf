#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlus/perm.hpp"
#include "rlus/types.hpp"

namespace rlus {

/// How candidate (row, measurement) pairs are formed inside a block.
enum class CandidateMode {
    RankMatched,  // i-th smallest of y_hat with i-th smallest of y
    CrossProduct  // every feasible row with every feasible measurement
};

/// How each candidate's least-squares problem is solved.
enum class LsqMethod {
    Recompute,   // factorize the appended system per candidate
    Incremental  // rank-one update of the current min-norm solution
};

/// Residual used to rank candidates.
enum class ResidualKind {
    Plain,       // ||y - B x||_2
    BlockSorted  // ||y - B x||_2 after sorting both vectors inside every block
};

CandidateMode candidate_mode_from_string(std::string_view s);
LsqMethod lsq_method_from_string(std::string_view s);
ResidualKind residual_kind_from_string(std::string_view s);

struct StageAConfig {
    /// Defaults to ceil(row_factor * d) - n/r, clamped to [0, n - n/r].
    std::optional<Index> max_augmentations;
    /// Target size of the augmented system in multiples of d when
    /// max_augmentations is unset. 1 stops at a square system.
    double row_factor = 1.0;
    CandidateMode candidate_mode = CandidateMode::RankMatched;
    LsqMethod lsq = LsqMethod::Incremental;
    ResidualKind residual = ResidualKind::Plain;
};

struct MatchedPair {
    Index p = 0;  // row of B
    Index q = 0;  // entry of y
    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Labeled system grown one (b_p, y(q)) pair at a time, plus the feasible
/// index sets P (rows of B), Q (entries of y) and K (blocks).
class AugmentedSystem {
public:
    /// Starts from the collapsed system of (B, y).
    AugmentedSystem(const Matrix& B, const Vector& y, Index r);

    Index n() const { return static_cast<Index>(p_free_.size()); }
    Index r() const { return r_; }
    Index num_blocks() const { return n() / r_; }
    Index augmentations() const { return static_cast<Index>(matched_.size()); }

    const Matrix& B_aug() const { return b_aug_; }
    const Vector& y_aug() const { return y_aug_; }
    const std::vector<MatchedPair>& matched() const { return matched_; }

    std::span<const char> p_feasible() const { return p_free_; }
    std::span<const char> q_feasible() const { return q_free_; }
    bool block_active(Index k) const { return active_[static_cast<std::size_t>(k)] != 0; }
    std::vector<Index> active_blocks() const;
    Index feasible_count() const { return free_count_; }

    /// Appends (b_p, y(q)), removes p from P and q from Q and drops the
    /// block from K once fewer than two of its rows remain feasible.
    void append(const Matrix& B, const Vector& y, Index p, Index q);

    /// Largest number of further augmentations the pruning rule allows.
    Index available_augmentations() const;

private:
    Index r_;
    Matrix b_aug_;
    Vector y_aug_;
    std::vector<char> p_free_;
    std::vector<char> q_free_;
    std::vector<char> active_;
    std::vector<Index> block_free_;
    std::vector<MatchedPair> matched_;
    Index free_count_ = 0;
};

/// Feasible indices of block k ordered by ascending v (ties: ascending index).
std::vector<Index> block_sort_indices(const Vector& v, std::span<const char> feasible, Index r,
                                      Index k);

std::vector<MatchedPair> candidate_pairs(std::span<const Index> ps, std::span<const Index> qs,
                                         CandidateMode mode);

/// -sum_{p,q} (a_p - a_q)^2 (b_{s(p)} - b_{s(q)})^2, the 1-D QAP objective of
/// the assignment s (entry p of a goes to entry s(p) of b).
double qap1d_objective(const Vector& a, const Vector& b, const Permutation& s);

struct SortedAlignment {
    Permutation assignment;
    double objective = 0.0;
    bool reversed = false;  // true when the descending matching won
};

/// Better of the two rank matchings: i-th smallest of a with the i-th
/// smallest (or i-th largest) of b. Ties keep ascending-ascending.
SortedAlignment sorted_alignment(const Vector& a, const Vector& b);

/// ||y - y_hat||_2, or for BlockSorted the distance between the blockwise
/// sorted vectors (the residual left after the within-block 1-D alignment).
double forward_residual(const Vector& y, const Vector& y_hat, Index r, ResidualKind kind);

struct ForwardError {
    double error = 0.0;  // forward_residual(y, B x)
    Vector x;            // min-norm LS solution of the appended system
};

/// Solves [B_aug; b_p] x = [y_aug; y(q)] and reports the forward error.
ForwardError forward_error(const Matrix& B, const Vector& y, const AugmentedSystem& aug, Index p,
                           Index q, ResidualKind kind = ResidualKind::Plain);

struct StageATraceEntry {
    Index t = 0;
    Index block = 0;
    Index p = 0;
    Index q = 0;
    double error = 0.0;
};

nlohmann::json to_json(const StageATraceEntry& e);

struct StageAResult {
    Vector y_hat;
    Vector x_hat;
    std::vector<MatchedPair> matched;
    std::vector<StageATraceEntry> trace;
    Matrix B_aug;
};

/// Greedy alternating augmentation for one view y (column of Y).
StageAResult run_stage_a(const Matrix& B, const Vector& y, Index r, const StageAConfig& cfg = {});

struct StageAJointResult {
    Matrix Y_hat;  // n x m
    Matrix X_hat;  // d x m
    std::vector<MatchedPair> matched;
    std::vector<StageATraceEntry> trace;
    Matrix B_aug;
};

/// One augmentation sequence shared by all views. Each block offers the
/// rank-matched pairs most views agree on (CrossProduct: all pairs), scored by
/// the root of the summed squared per-view residuals, and each step appends
/// the full row Y(q, :). With one column this is run_stage_a.
StageAJointResult run_stage_a_joint(const Matrix& B, const Matrix& Y, Index r,
                                    const StageAConfig& cfg = {});

}  // namespace rlus
