#include "rlus/collapse.hpp"

#include "rlus/linalg.hpp"

namespace rlus {

Matrix block_sums(const Matrix& m, Index r) {
    if (r < 1 || m.rows() % r != 0)
        throw std::invalid_argument("collapse: r must divide the row count");
    const Index blocks = m.rows() / r;
    Matrix out(blocks, m.cols());
    for (Index k = 0; k < blocks; ++k) out.row(k) = m.middleRows(k * r, r).colwise().sum();
    return out;
}

CollapsedSystem collapse(const Matrix& B, const Matrix& Y, Index r) {
    if (B.rows() != Y.rows())
        throw std::invalid_argument("collapse: B and Y have different row counts");
    return {block_sums(B, r), block_sums(Y, r)};
}

Matrix init_estimate(const CollapsedSystem& cs, const Matrix& B) {
    return B * linalg::pinv_solve(cs.B_tilde, cs.Y_tilde);
}

}  // namespace rlus
