#include "rlus/linalg.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/SVD>

namespace rlus::linalg {

double rank_tolerance(Index rows, Index cols, double sigma_max) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
           sigma_max;
}

namespace {

template <class Svd>
Index rank_of(const Svd& svd, Index rows, Index cols) {
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0;
    const double tol = rank_tolerance(rows, cols, s(0));
    Index rank = 0;
    while (rank < s.size() && s(rank) > tol) ++rank;
    return rank;
}

}  // namespace

Matrix pinv_solve(const Matrix& a, const Matrix& rhs) {
    if (a.rows() != rhs.rows())
        throw std::invalid_argument("pinv_solve: row count mismatch");
    if (a.size() == 0) return Matrix::Zero(a.cols(), rhs.cols());
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index rank = rank_of(svd, a.rows(), a.cols());
    const auto u = svd.matrixU().leftCols(rank);
    const auto v = svd.matrixV().leftCols(rank);
    const Vector inv = svd.singularValues().head(rank).cwiseInverse();
    return v * (inv.asDiagonal() * (u.transpose() * rhs));
}

Vector pinv_solve(const Matrix& a, const Vector& rhs) {
    return pinv_solve(a, Matrix(rhs)).col(0);
}

Index numerical_rank(const Matrix& a) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return rank_of(svd, a.rows(), a.cols());
}

Matrix column_basis(const Matrix& a, Index max_rank) {
    if (a.size() == 0) return Matrix(a.rows(), 0);
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const Index rank = std::min(rank_of(svd, a.rows(), a.cols()), max_rank);
    return svd.matrixU().leftCols(rank);
}

PseudoInverse::PseudoInverse(const Matrix& a) {
    const Index cols = a.cols();
    if (a.rows() == 0) {
        u_ = Matrix(0, 0);
        v_ = Matrix(cols, 0);
        null_ = Matrix::Identity(cols, cols);
        return;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    rank_ = rank_of(svd, a.rows(), cols);
    u_ = svd.matrixU().leftCols(rank_);
    v_ = svd.matrixV().leftCols(rank_);
    inv_sigma_ = svd.singularValues().head(rank_).cwiseInverse();
    null_ = svd.matrixV().rightCols(cols - rank_);
}

Vector PseudoInverse::solve(const Vector& rhs) const {
    if (rank_ == 0) return Vector::Zero(v_.rows());
    return v_ * inv_sigma_.cwiseProduct(u_.transpose() * rhs);
}

Vector PseudoInverse::gram_solve(const Vector& b) const {
    if (rank_ == 0) return Vector::Zero(v_.rows());
    return v_ * (inv_sigma_.cwiseAbs2().cwiseProduct(v_.transpose() * b));
}

}  // namespace rlus::linalg
