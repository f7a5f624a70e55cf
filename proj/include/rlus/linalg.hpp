#pragma once

#include "rlus/types.hpp"

namespace rlus::linalg {

/// Rank tolerance used throughout: max(rows, cols) * eps * sigma_max.
double rank_tolerance(Index rows, Index cols, double sigma_max);

/// Minimum-norm least-squares solution A^+ rhs via a truncated SVD.
Matrix pinv_solve(const Matrix& a, const Matrix& rhs);
Vector pinv_solve(const Matrix& a, const Vector& rhs);

/// Numerical rank under rank_tolerance.
Index numerical_rank(const Matrix& a);

/// Thin left singular vectors spanning the numerical column space, truncated
/// to at most `max_rank` columns.
Matrix column_basis(const Matrix& a, Index max_rank);

/// SVD-based factorization that serves repeated min-norm solves against the
/// same matrix and exposes the null-space basis.
class PseudoInverse {
public:
    explicit PseudoInverse(const Matrix& a);

    Index rank() const { return rank_; }
    Vector solve(const Vector& rhs) const;
    /// Orthonormal basis (cols x (cols - rank)) of the null space of A.
    const Matrix& null_basis() const { return null_; }
    /// (A^T A)^+ b.
    Vector gram_solve(const Vector& b) const;

private:
    Matrix u_;
    Vector inv_sigma_;
    Matrix v_;
    Matrix null_;
    Index rank_ = 0;
};

}  // namespace rlus::linalg
