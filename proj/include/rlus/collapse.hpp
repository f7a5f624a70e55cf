#pragma once

#include "rlus/types.hpp"

namespace rlus {

/// Labeled system obtained by summing the rows of every r-block. Summation
/// erases any within-block permutation, so these (n/r) equations are exact.
struct CollapsedSystem {
    Matrix B_tilde;  // (n/r) x d
    Matrix Y_tilde;  // (n/r) x m
};

/// Row k of the result is the sum of rows k*r .. k*r + r - 1 of `m`.
Matrix block_sums(const Matrix& m, Index r);

CollapsedSystem collapse(const Matrix& B, const Matrix& Y, Index r);

/// B * (B_tilde^+ Y_tilde): the collapsed-system estimate of B X.
Matrix init_estimate(const CollapsedSystem& cs, const Matrix& B);

}  // namespace rlus
