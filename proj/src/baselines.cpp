#include "rlus/baselines.hpp"

#include <algorithm>
#include <numeric>

#include "rlus/gwalign.hpp"
#include "rlus/linalg.hpp"
#include "rlus/pipeline.hpp"

namespace rlus {

LevsortVariant levsort_variant_from_string(std::string_view s) {
    if (s == "score" || s == "score-sort") return LevsortVariant::ScoreSort;
    if (s == "assignment" || s == "block-assignment") return LevsortVariant::BlockAssignment;
    throw std::invalid_argument("unknown LEVSORT variant: " + std::string(s));
}

Vector leverage_scores(const Matrix& m, Index max_rank) {
    return linalg::column_basis(m, max_rank).rowwise().squaredNorm();
}

namespace {

std::vector<Index> sorted_by(const Vector& v, Index begin, Index r) {
    std::vector<Index> idx(static_cast<std::size_t>(r));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return v(begin + a) < v(begin + b); });
    return idx;
}

// Row descriptor invariant to relabeling inside the block: the diagonal
// entry followed by the sorted off-diagonal entries.
Matrix block_descriptors(const Matrix& proj) {
    const Index r = proj.rows();
    Matrix desc(r, r);
    for (Index i = 0; i < r; ++i) {
        std::vector<double> off;
        for (Index j = 0; j < r; ++j)
            if (j != i) off.push_back(proj(i, j));
        std::sort(off.begin(), off.end());
        desc(i, 0) = proj(i, i);
        for (Index j = 1; j < r; ++j) desc(i, j) = off[static_cast<std::size_t>(j - 1)];
    }
    return desc;
}

}  // namespace

RLocalPermutation rlocal_levsort(const Matrix& B, const Matrix& Y, Index r, LevsortVariant variant) {
    if (r < 1 || B.rows() % r != 0) throw std::invalid_argument("rlocal_levsort: r must divide n");
    if (B.rows() != Y.rows()) throw std::invalid_argument("rlocal_levsort: B and Y row mismatch");
    if (Y.cols() < 1) throw std::invalid_argument("rlocal_levsort: Y needs at least one column");

    const Index d = B.cols();
    const Matrix ub = linalg::column_basis(B, d);
    const Matrix uy = linalg::column_basis(Y, d);
    const Index blocks = B.rows() / r;
    std::vector<Permutation> perms;
    perms.reserve(static_cast<std::size_t>(blocks));

    if (variant == LevsortVariant::ScoreSort) {
        const Vector lb = ub.rowwise().squaredNorm();
        const Vector ly = uy.rowwise().squaredNorm();
        for (Index k = 0; k < blocks; ++k) {
            const auto by = sorted_by(ly, k * r, r);
            const auto bb = sorted_by(lb, k * r, r);
            std::vector<Index> map(static_cast<std::size_t>(r));
            for (std::size_t i = 0; i < map.size(); ++i) map[static_cast<std::size_t>(by[i])] = bb[i];
            perms.emplace_back(std::move(map));
        }
    } else {
        for (Index k = 0; k < blocks; ++k) {
            const Matrix db = block_descriptors(ub.middleRows(k * r, r) * ub.middleRows(k * r, r).transpose());
            const Matrix dy = block_descriptors(uy.middleRows(k * r, r) * uy.middleRows(k * r, r).transpose());
            Matrix cost(r, r);
            for (Index i = 0; i < r; ++i)
                for (Index p = 0; p < r; ++p) cost(i, p) = (dy.row(i) - db.row(p)).squaredNorm();
            perms.emplace_back(linear_assignment(cost));
        }
    }
    return RLocalPermutation(r, std::move(perms));
}

Matrix oracle_solve(const SensingInstance& inst) {
    return solve_for_permutation(inst.B, inst.Y, inst.pi_star);
}

}  // namespace rlus
