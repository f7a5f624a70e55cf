#pragma once

#include <string_view>

#include "rlus/perm.hpp"
#include "rlus/synth.hpp"

namespace rlus {

enum class BaselineKind { RLocalLevsort, Identity, OraclePermutation };

enum class LevsortVariant {
    ScoreSort,       // rank-match leverage scores inside each block
    BlockAssignment  // assignment on sorted rows of the block projections
};

LevsortVariant levsort_variant_from_string(std::string_view s);

/// Leverage scores: squared row norms of an orthonormal column-space basis.
Vector leverage_scores(const Matrix& m, Index max_rank);

/// Block-local leverage-score matching of U_Y U_Y^T against U_B U_B^T.
RLocalPermutation rlocal_levsort(const Matrix& B, const Matrix& Y, Index r,
                                 LevsortVariant variant = LevsortVariant::ScoreSort);

/// Least squares with the true permutation: B^+ (Pi*^T Y).
Matrix oracle_solve(const SensingInstance& inst);

}  // namespace rlus
