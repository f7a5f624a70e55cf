#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "rlus/perm.hpp"

namespace rlus {

struct InstanceConfig {
    Index n = 0;
    Index d = 0;
    Index m = 1;
    Index r = 1;
    /// Empty means noiseless (infinite SNR).
    std::optional<double> snr_db;
    std::uint64_t seed = 0;

    void validate() const;
    bool noiseless() const { return !snr_db.has_value(); }

    friend bool operator==(const InstanceConfig&, const InstanceConfig&) = default;
};

nlohmann::json to_json(const InstanceConfig& cfg);
InstanceConfig config_from_json(const nlohmann::json& j);

/// The solver-visible part of an instance: (B, Y, r). Nothing else.
struct ProblemView {
    const Matrix& B;
    const Matrix& Y;
    Index r;
};

/// One realization of Y = Pi* B X* + N.
struct SensingInstance {
    InstanceConfig config;
    Matrix B;
    Matrix X_star;
    RLocalPermutation pi_star;
    double sigma2 = 0.0;
    Matrix Y;
    /// B * X_star before permutation; evaluation only.
    Matrix Y_clean;

    ProblemView problem() const { return {B, Y, config.r}; }
};

/// sigma^2 = ||B X||_F^2 / (n * 10^(snr_db / 10)).
double noise_variance(double clean_energy, Index n, double snr_db);

SensingInstance generate(const InstanceConfig& cfg);

/// Same draw as generate() but with the permutation forced to the identity.
SensingInstance generate_unshuffled(const InstanceConfig& cfg);

/// 10 log10(||B X*||_F^2 / (n sigma^2)); +infinity for noiseless instances.
double empirical_snr(const SensingInstance& inst);

// Instance directories: config.json, pi_star.json and one .bin file per matrix
// (magic "RLUS", u32 rows, u32 cols, row-major little-endian f64).
void write_matrix_bin(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_bin(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

void save_instance(const SensingInstance& inst, const std::filesystem::path& dir);
SensingInstance load_instance(const std::filesystem::path& dir);

}  // namespace rlus
