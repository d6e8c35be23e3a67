#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvarmix/learners.hpp"

namespace cvarmix {

enum class EnvKind { Maze, RiskyBandit };
enum class AlgorithmKind { Reinforce, CvarPg, MixPrecomputed, MixIql, DrlMkv, DrlLim };

std::string to_string(EnvKind kind);
std::string to_string(AlgorithmKind kind);

/// One experiment: an environment, an algorithm, its hyperparameters, and
/// the seed list. Parsed from JSON with strict schema validation.
struct ExperimentConfig {
    EnvKind env = EnvKind::Maze;
    AlgorithmKind algorithm = AlgorithmKind::MixPrecomputed;
    double alpha = 0.1;
    int batch_episodes = 50;  // N
    int batches = 0;          // M, required
    int iql_frequency = 5;    // C
    std::size_t iql_sample_size = 20000;
    double learning_rate = 1e-2;
    double value_learning_rate = 1e-1;     // reinforce baseline, 10x policy rate
    double iql_learning_rate = 1e-1;
    double quantile_learning_rate = 1e-2;  // distributional learners
    int quantile_count = 80;
    double expectile = 0.8;
    double awr_beta = 1.0;
    double softmax_temperature = 0.05;
    std::optional<AlphaSchedule> curriculum;
    std::vector<std::uint64_t> seeds = {0};
    std::filesystem::path output_dir = ".";

    /// Throws ContractViolation naming the offending field.
    void validate() const;
};

/// Loads and validates a JSON config. Missing required keys, invariant
/// violations, unknown keys and malformed documents all raise
/// ContractViolation with the key path in the message.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& json_text);

}  // namespace cvarmix
