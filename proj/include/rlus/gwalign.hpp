#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "rlus/perm.hpp"

namespace rlus {

/// Nonnegative s x s matrix with unit row and column sums (a soft permutation).
class Coupling {
public:
    Coupling() = default;
    /// Throws std::invalid_argument if entries are negative or marginals are
    /// off by more than `tol`.
    explicit Coupling(Matrix gamma, double tol = 1e-6);

    static Coupling uniform(Index s);
    static Coupling from_permutation(const Permutation& p);

    Index size() const { return gamma_.rows(); }
    const Matrix& gamma() const { return gamma_; }
    double max_marginal_deviation() const;

private:
    Matrix gamma_;
};

enum class CostKind { Gram, SquaredEuclidean };
CostKind cost_kind_from_string(std::string_view s);

struct GwConfig {
    /// Entropic weight. Relative to the mean squared difference between
    /// entries of the two cost matrices unless `absolute_epsilon` is set.
    double epsilon = 2e-2;
    bool absolute_epsilon = false;
    Index outer_iters = 200;
    Index sinkhorn_iters = 500;
    /// Relative Frobenius change in the coupling that ends the outer loop.
    double tol = 1e-7;
    CostKind cost_kind = CostKind::Gram;
    /// Run pairwise-swap descent on the thresholded permutation.
    bool polish = true;
    /// gw_match also starts from couplings built by rank-matching row sums
    /// and diagonals (both orders) and by matching sorted row profiles of
    /// the matrices and of their induced distances, keeping the cheapest result.
    bool sorted_starts = true;

    void validate() const;
};

/// Per-block cost matrix built from the rows of `rows`.
Matrix cost_matrix(const Matrix& rows, CostKind kind);

/// sum_{i,k,j,l} (C_src[i,k] - C_tgt[j,l])^2 gamma[i,j] gamma[k,l], via the
/// marginal/cross-term decomposition.
double gw_cost(const Matrix& c_src, const Matrix& c_tgt, const Matrix& gamma);
double gw_cost(const Matrix& c_src, const Matrix& c_tgt, const Coupling& gamma);
/// The same quantity by the explicit quadruple loop (O(s^4)).
double gw_cost_direct(const Matrix& c_src, const Matrix& c_tgt, const Matrix& gamma);

struct GwResult {
    Coupling coupling;
    double cost = 0.0;          // gw_cost of `coupling`
    double initial_cost = 0.0;  // gw_cost of the starting coupling
    double epsilon = 0.0;       // absolute weight actually used
    Index iterations = 0;
    bool converged = false;
};

/// Proximal mirror descent on the GW objective: each step Sinkhorn-projects
/// gamma * exp(-pseudo_cost / eps) back onto the coupling set. Returns the
/// lowest-cost iterate, so the result never exceeds the uniform start.
GwResult entropic_gw_solve(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg = {});
/// Same descent from `init` instead of the uniform coupling. Zero entries of
/// `init` stay zero, so pass a strictly positive coupling.
GwResult entropic_gw_solve(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg,
                           const Coupling& init);
Coupling entropic_gw(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg = {});

/// Min-cost perfect matching (Hungarian / shortest augmenting path).
/// result[i] is the column assigned to row i.
std::vector<Index> linear_assignment(const Matrix& cost);

/// Max-weight assignment on the coupling; result[i] is the target matched to
/// source i.
Permutation threshold_to_permutation(const Coupling& gamma);

/// ||C_src - P C_tgt P^T||_F^2 for the hard assignment p (source i to target p[i]).
double qap_cost(const Matrix& c_src, const Matrix& c_tgt, const Permutation& p);

/// Applies improving transpositions of p until none lowers qap_cost.
/// Each pass tries all pairs (i, j) with i < j in order.
Permutation polish_assignment(const Matrix& c_src, const Matrix& c_tgt, Permutation p);

/// Exhaustive minimizer of ||C_src - P C_tgt P^T||_F^2, where
/// (P C_tgt P^T)[i,j] = C_tgt[p(i), p(j)]. Refuses s > 8.
std::pair<Permutation, double> brute_force_gw(const Matrix& c_src, const Matrix& c_tgt);

struct GwMatch {
    Permutation assignment;  // source i to target assignment[i]
    double cost = 0.0;       // qap_cost of the assignment
    GwResult gw;             // solver run that produced it
};

/// entropic_gw, thresholding and (optionally) polishing, from the uniform
/// start and, with cfg.sorted_starts, six sorting-based starts. Returns the
/// lowest-cost assignment; ties keep the earlier start.
GwMatch gw_match(const Matrix& c_src, const Matrix& c_tgt, const GwConfig& cfg = {});

struct StageBResult {
    RLocalPermutation pi_hat;
    std::vector<double> block_costs;
    std::vector<Index> block_iterations;
};

/// Aligns every block of Y_hat with the same block of Y and returns the
/// estimate of Pi* (Y ~ pi_hat * Y_hat).
StageBResult stage_b_detailed(const Matrix& Y_hat, const Matrix& Y, Index r,
                              const GwConfig& cfg = {}, int threads = 1);
RLocalPermutation stage_b(const Matrix& Y_hat, const Matrix& Y, Index r,
                          const GwConfig& cfg = {});

}  // namespace rlus
