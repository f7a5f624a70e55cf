#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rlus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// All sampling goes through this engine so that runs are reproducible from a
// single 64-bit seed.
using Rng = std::mt19937_64;

// Raised when an iterative solver cannot produce a finite answer (e.g. an
// entropic kernel underflows for a too-small regularization weight).
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) {
    return mix_seed(seed ^ mix_seed(value + 0x632be59bd9b4e019ULL));
}

}  // namespace rlus
