#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlus/types.hpp"

namespace rlus {

/// A permutation of {0, ..., s-1} stored as an index map: `map[i]` is the
/// column of the nonzero entry in row i of the permutation matrix.
class Permutation {
public:
    Permutation() = default;
    /// Throws std::invalid_argument unless `map` is a bijection.
    explicit Permutation(std::vector<Index> map);

    static Permutation identity(Index size);

    Index size() const { return static_cast<Index>(map_.size()); }
    Index operator[](Index i) const { return map_[static_cast<std::size_t>(i)]; }
    std::span<const Index> map() const { return map_; }

    Permutation inverse() const;
    /// (a * b)[i] = a[b[i]], i.e. the matrix product A B of the index maps.
    friend Permutation compose(const Permutation& a, const Permutation& b);

    bool is_identity() const;
    Matrix to_dense() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<Index> map_;
};

/// Block-diagonal permutation made of n/r independent r x r blocks. Block k
/// acts on global rows {k*r, ..., k*r + r - 1}.
class RLocalPermutation {
public:
    RLocalPermutation() = default;
    RLocalPermutation(Index r, std::vector<Permutation> blocks);

    static RLocalPermutation identity(Index n, Index r);

    Index r() const { return r_; }
    Index n() const { return r_ * num_blocks(); }
    Index num_blocks() const { return static_cast<Index>(blocks_.size()); }
    const Permutation& block(Index k) const { return blocks_[static_cast<std::size_t>(k)]; }
    const std::vector<Permutation>& blocks() const { return blocks_; }

    /// Global row index of the nonzero entry in global row i.
    Index map_global(Index i) const { return (i / r_) * r_ + block(i / r_)[i % r_]; }

    RLocalPermutation inverse() const;
    friend RLocalPermutation compose(const RLocalPermutation& a, const RLocalPermutation& b);

    bool is_identity() const;
    /// Debug helper; the library never materializes permutation matrices.
    Matrix to_dense() const;

    friend bool operator==(const RLocalPermutation&, const RLocalPermutation&) = default;

private:
    Index r_ = 1;
    std::vector<Permutation> blocks_;
};

/// Uniform r-local permutation: Fisher-Yates in each block independently.
RLocalPermutation sample_rlocal(Index n, Index r, Rng& rng);

/// Row i of the result is row perm.map_global(i) of `m`, i.e. perm * m.
Matrix apply(const RLocalPermutation& perm, const Matrix& m);

/// Number of rows on which the two permutations disagree.
Index hamming_distortion(const RLocalPermutation& a, const RLocalPermutation& b);
double fractional_hamming(const RLocalPermutation& a, const RLocalPermutation& b);

// {"r": 4, "blocks": [[...], ...]}
nlohmann::json to_json(const RLocalPermutation& perm);
RLocalPermutation rlocal_from_json(const nlohmann::json& j);

}  // namespace rlus
