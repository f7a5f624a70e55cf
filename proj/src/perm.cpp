#include "rlus/perm.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace rlus {

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
    std::vector<char> seen(map_.size(), 0);
    for (Index v : map_) {
        if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)])
            throw std::invalid_argument("Permutation: index map is not a bijection");
        seen[static_cast<std::size_t>(v)] = 1;
    }
}

Permutation Permutation::identity(Index size) {
    std::vector<Index> map(static_cast<std::size_t>(size));
    std::iota(map.begin(), map.end(), Index{0});
    return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
    std::vector<Index> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i)
        inv[static_cast<std::size_t>(map_[i])] = static_cast<Index>(i);
    return Permutation(std::move(inv));
}

Permutation compose(const Permutation& a, const Permutation& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("compose: permutation sizes differ");
    std::vector<Index> out(a.map_.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a[b.map_[i]];
    return Permutation(std::move(out));
}

bool Permutation::is_identity() const {
    for (std::size_t i = 0; i < map_.size(); ++i)
        if (map_[i] != static_cast<Index>(i)) return false;
    return true;
}

Matrix Permutation::to_dense() const {
    Matrix p = Matrix::Zero(size(), size());
    for (Index i = 0; i < size(); ++i) p(i, (*this)[i]) = 1.0;
    return p;
}

RLocalPermutation::RLocalPermutation(Index r, std::vector<Permutation> blocks)
    : r_(r), blocks_(std::move(blocks)) {
    if (r_ < 1) throw std::invalid_argument("RLocalPermutation: block size must be positive");
    for (const auto& b : blocks_)
        if (b.size() != r_)
            throw std::invalid_argument("RLocalPermutation: every block must have size r");
}

RLocalPermutation RLocalPermutation::identity(Index n, Index r) {
    if (r < 1 || n % r != 0)
        throw std::invalid_argument("RLocalPermutation: r must divide n");
    return RLocalPermutation(r, std::vector<Permutation>(static_cast<std::size_t>(n / r),
                                                         Permutation::identity(r)));
}

RLocalPermutation RLocalPermutation::inverse() const {
    std::vector<Permutation> inv;
    inv.reserve(blocks_.size());
    for (const auto& b : blocks_) inv.push_back(b.inverse());
    return RLocalPermutation(r_, std::move(inv));
}

RLocalPermutation compose(const RLocalPermutation& a, const RLocalPermutation& b) {
    if (a.r_ != b.r_ || a.blocks_.size() != b.blocks_.size())
        throw std::invalid_argument("compose: r-local permutations have different shapes");
    std::vector<Permutation> out;
    out.reserve(a.blocks_.size());
    for (std::size_t k = 0; k < a.blocks_.size(); ++k)
        out.push_back(compose(a.blocks_[k], b.blocks_[k]));
    return RLocalPermutation(a.r_, std::move(out));
}

bool RLocalPermutation::is_identity() const {
    return std::all_of(blocks_.begin(), blocks_.end(),
                       [](const Permutation& p) { return p.is_identity(); });
}

Matrix RLocalPermutation::to_dense() const {
    Matrix p = Matrix::Zero(n(), n());
    for (Index i = 0; i < n(); ++i) p(i, map_global(i)) = 1.0;
    return p;
}

RLocalPermutation sample_rlocal(Index n, Index r, Rng& rng) {
    if (n < 1 || r < 1 || n % r != 0)
        throw std::invalid_argument("sample_rlocal: r must divide n");
    std::vector<Permutation> blocks;
    blocks.reserve(static_cast<std::size_t>(n / r));
    std::vector<Index> map(static_cast<std::size_t>(r));
    for (Index k = 0; k < n / r; ++k) {
        std::iota(map.begin(), map.end(), Index{0});
        for (Index i = r - 1; i > 0; --i) {
            std::uniform_int_distribution<Index> pick(0, i);
            std::swap(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(pick(rng))]);
        }
        blocks.emplace_back(map);
    }
    return RLocalPermutation(r, std::move(blocks));
}

Matrix apply(const RLocalPermutation& perm, const Matrix& m) {
    if (m.rows() != perm.n())
        throw std::invalid_argument("apply: matrix row count does not match permutation size");
    Matrix out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(perm.map_global(i));
    return out;
}

Index hamming_distortion(const RLocalPermutation& a, const RLocalPermutation& b) {
    if (a.n() != b.n() || a.r() != b.r())
        throw std::invalid_argument("hamming_distortion: permutation shapes differ");
    Index count = 0;
    for (Index i = 0; i < a.n(); ++i)
        if (a.map_global(i) != b.map_global(i)) ++count;
    return count;
}

double fractional_hamming(const RLocalPermutation& a, const RLocalPermutation& b) {
    return a.n() == 0 ? 0.0
                      : static_cast<double>(hamming_distortion(a, b)) / static_cast<double>(a.n());
}

nlohmann::json to_json(const RLocalPermutation& perm) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : perm.blocks())
        blocks.push_back(std::vector<Index>(b.map().begin(), b.map().end()));
    return {{"r", perm.r()}, {"blocks", std::move(blocks)}};
}

RLocalPermutation rlocal_from_json(const nlohmann::json& j) {
    const auto r = j.at("r").get<Index>();
    std::vector<Permutation> blocks;
    for (const auto& b : j.at("blocks")) blocks.emplace_back(b.get<std::vector<Index>>());
    return RLocalPermutation(r, std::move(blocks));
}

}  // namespace rlus
