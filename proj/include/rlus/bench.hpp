#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlus/baselines.hpp"
#include "rlus/pipeline.hpp"
#include "rlus/synth.hpp"

namespace rlus {

enum class Method { DePermute, RLocalLevsort, Identity, OraclePermutation };

Method method_from_string(std::string_view s);
std::string_view to_string(Method m);
Method to_method(BaselineKind kind);

struct SolverOptions {
    PipelineConfig pipeline;
    LevsortVariant levsort = LevsortVariant::ScoreSort;
};

nlohmann::json to_json(const SolverOptions& opts);
/// Missing keys keep their defaults.
SolverOptions solver_options_from_json(const nlohmann::json& j);

// ---- metrics ---------------------------------------------------------------

/// ||Y_hat Y_hat^T - Y* Y*^T||_F / ||Y* Y*^T||_F without forming n x n products.
double covariance_error(const Matrix& Y_hat, const Matrix& Y_star);
/// ||X_hat - X*||_F / ||X*||_F.
double relative_error(const Matrix& X_hat, const Matrix& X_star);

struct TrialRecord {
    InstanceConfig config;
    Method method = Method::DePermute;
    double frac_hamming = 0.0;
    double cov_error = 0.0;
    double signal_error = 0.0;
    double wall_ms = 0.0;
    bool failed = false;
    std::string error;  // message when failed
};

/// Output of one method on one instance.
struct MethodOutput {
    RLocalPermutation pi_hat;
    Matrix X_hat;
    Matrix Y_hat;  // covariance-error input; B X_hat unless the method has its own
};

MethodOutput run_method(const SensingInstance& inst, Method method, const SolverOptions& opts);

/// Scores an output against the instance ground truth.
TrialRecord score(const SensingInstance& inst, Method method, const MethodOutput& out,
                  double wall_ms);

/// Generates the instance, runs the method and scores it. Solver failures
/// are recorded (failed = true), not thrown.
TrialRecord run_trial(const InstanceConfig& cfg, Method method, const SolverOptions& opts);

// ---- sweeps ----------------------------------------------------------------

struct SweepSpec {
    Index d = 32;
    std::vector<Index> r;
    /// n is given as multiples of r: n = mult * r.
    std::vector<Index> n_multiples;
    std::vector<Index> m;
    /// nullopt entries mean noiseless.
    std::vector<std::optional<double>> snr_db;
    std::vector<Method> methods;
    Index runs = 25;
    std::uint64_t base_seed = 0;
    SolverOptions solver;

    void validate() const;
};

nlohmann::json to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

/// Instance seed for one grid point and run; independent of the method so
/// that all methods see the same instances.
std::uint64_t trial_seed(std::uint64_t base_seed, Index r, Index n, Index m,
                         std::optional<double> snr_db, Index run);

/// All (config, method) trials in canonical order: r, n, m, snr, run, method.
std::vector<std::pair<InstanceConfig, Method>> expand_sweep(const SweepSpec& spec);

using RecordSink = std::function<void(const TrialRecord&)>;

/// Runs every trial; `sink` sees records as they complete (under a lock).
/// The returned list is in canonical order regardless of `threads`.
std::vector<TrialRecord> run_sweep(const SweepSpec& spec, int threads = 1,
                                   const RecordSink& sink = {});

inline constexpr std::string_view kCsvSchema = "v1";
std::string csv_header();
std::string csv_row(const TrialRecord& rec);
void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records);

// ---- summaries -------------------------------------------------------------

struct Stat {
    double mean = 0.0;
    double stderr_ = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SummaryRow {
    Method method = Method::DePermute;
    Index n = 0, d = 0, m = 0, r = 0;
    std::optional<double> snr_db;
    Index count = 0;     // successful trials
    Index failures = 0;
    Stat frac_hamming;
    Stat cov_error;
    Stat signal_error;
    double mean_wall_ms = 0.0;
};

/// Mean and standard error (sample sd / sqrt(count)) of the values.
Stat describe(const std::vector<double>& values);

/// One row per (r, n, m, snr, method) cell, ordered that way. Failed trials
/// are counted but excluded from the statistics.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
nlohmann::json to_json(const std::vector<SummaryRow>& rows);

// ---- canned experiment grids ----------------------------------------------

/// Covariance error against the number of views.
SweepSpec fig5_spec(bool full);
/// Distortion against n for m in {8, 32}.
SweepSpec fig6_views_spec(bool full);
/// De-permute against block LEVSORT with m = d.
SweepSpec fig6_levsort_spec(bool full);

}  // namespace rlus
