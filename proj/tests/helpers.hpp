#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "rlus/perm.hpp"
#include "rlus/types.hpp"

namespace rlus::test {

inline Matrix gaussian(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> nd;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

inline Vector gaussian(Index size, Rng& rng) { return gaussian(size, 1, rng).col(0); }

// Every permutation of {0..s-1} in lexicographic order.
inline std::vector<Permutation> all_permutations(Index s) {
    std::vector<Index> m(static_cast<std::size_t>(s));
    std::iota(m.begin(), m.end(), Index{0});
    std::vector<Permutation> out;
    do out.emplace_back(m);
    while (std::next_permutation(m.begin(), m.end()));
    return out;
}

// Every r-local permutation of size n (small n only).
inline std::vector<RLocalPermutation> all_rlocal(Index n, Index r) {
    const auto base = all_permutations(r);
    const Index nb = n / r;
    std::vector<RLocalPermutation> out;
    std::vector<std::size_t> digit(static_cast<std::size_t>(nb), 0);
    while (true) {
        std::vector<Permutation> blocks;
        for (auto d : digit) blocks.push_back(base[d]);
        out.emplace_back(r, blocks);
        std::size_t k = 0;
        while (k < digit.size() && ++digit[k] == base.size()) digit[k++] = 0;
        if (k == digit.size()) break;
    }
    return out;
}

// Min-norm least squares from a full SVD, V diag(1/s) U^T rhs, written out
// explicitly so it shares no code with the library's solver.
inline Matrix svd_min_norm(const Matrix& a, const Matrix& rhs) {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double tol = static_cast<double>(std::max(a.rows(), a.cols())) *
                       std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
    Matrix x = Matrix::Zero(a.cols(), rhs.cols());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > tol)
            x += svd.matrixV().col(i) * (svd.matrixU().col(i).transpose() * rhs) / s(i);
    return x;
}

// Min-norm solution of a consistent wide system with full row rank.
inline Matrix normal_eq_min_norm(const Matrix& a, const Matrix& rhs) {
    const Matrix g = a * a.transpose();
    return a.transpose() * g.llt().solve(rhs);
}

inline Matrix dense_perm(const Permutation& p) {
    Matrix m = Matrix::Zero(p.size(), p.size());
    for (Index i = 0; i < p.size(); ++i) m(i, p[i]) = 1.0;
    return m;
}

inline RLocalPermutation random_rlocal(Index n, Index r, std::uint64_t seed) {
    Rng rng(seed);
    return sample_rlocal(n, r, rng);
}

}  // namespace rlus::test
