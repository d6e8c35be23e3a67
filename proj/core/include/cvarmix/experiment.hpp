#pragma once

#include <filesystem>
#include <vector>

#include "cvarmix/config.hpp"

namespace cvarmix {

/// Fixed metrics CSV schema, one row per batch.
extern const char* const kMetricsHeader;

std::string metrics_to_csv(std::span<const BatchMetrics> metrics, int batch_episodes);

struct SeedArtifacts {
    std::uint64_t seed = 0;
    std::filesystem::path metrics_csv;
    std::filesystem::path checkpoint;
};

struct ExperimentResult {
    std::vector<SeedArtifacts> seeds;

    std::vector<std::filesystem::path> metrics_paths() const;
};

/// Runs one seed of the configured experiment on the calling thread.
SeedArtifacts run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every configured seed, in parallel worker slots, writing one metrics
/// CSV and one checkpoint per seed under config.output_dir. Outputs are a
/// pure function of (config, seed) except the wallclock_seconds column.
/// Throws DiagnosticError before any training starts if the output directory
/// cannot be created or written.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Per-batch mean and standard error (sample std / sqrt(#files)) of every
/// metrics column across seed CSVs sharing one schema and row count. Writes
/// the summary CSV to out_path and returns it.
std::filesystem::path aggregate(const std::vector<std::filesystem::path>& csv_paths,
                                const std::filesystem::path& out_path);

/// Rolls out `episodes` episodes of a checkpointed policy on the configured
/// environment and writes the empirical quantile curve as CSV.
std::filesystem::path dump_quantile_curve(const ExperimentConfig& config,
                                          const std::filesystem::path& checkpoint_path,
                                          int episodes, const std::filesystem::path& out_path);

}  // namespace cvarmix
