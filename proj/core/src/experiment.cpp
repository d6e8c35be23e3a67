#include "cvarmix/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "cvarmix/checkpoint.hpp"
#include "cvarmix/distributional.hpp"
#include "cvarmix/errors.hpp"
#include "cvarmix/oracle.hpp"
#include "cvarmix/risk.hpp"

namespace cvarmix {

const char* const kMetricsHeader =
    "batch_index,episodes_so_far,mean_return,cvar_alpha_return,risk_averse_rate,"
    "red_visit_rate,goal_rate,grad_norm,alpha_current,wallclock_seconds";

std::string metrics_to_csv(std::span<const BatchMetrics> metrics, int batch_episodes) {
    std::string out = kMetricsHeader;
    out += '\n';
    char buf[256];
    for (const BatchMetrics& m : metrics) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n", m.batch_index,
                      static_cast<long long>(m.batch_index) * batch_episodes, m.mean_return,
                      m.cvar_alpha_return, m.risk_averse_rate, m.red_visit_rate, m.goal_rate,
                      m.grad_norm, m.alpha_current, m.wallclock_seconds);
        out += buf;
    }
    return out;
}

std::vector<std::filesystem::path> ExperimentResult::metrics_paths() const {
    std::vector<std::filesystem::path> out;
    out.reserve(seeds.size());
    for (const auto& s : seeds) out.push_back(s.metrics_csv);
    return out;
}

namespace {

struct BuiltEnv {
    std::unique_ptr<Env> env;
    std::unique_ptr<ExplicitModel> model;
    std::unique_ptr<MazeSpec> maze;  // null for the bandit
};

BuiltEnv build_env(EnvKind kind) {
    BuiltEnv built;
    if (kind == EnvKind::Maze) {
        built.maze = std::make_unique<MazeSpec>(MazeSpec::canonical());
        built.env = std::make_unique<MazeEnv>(*built.maze);
        built.model = std::make_unique<ExplicitModel>(explicit_model(*built.maze));
    } else {
        const RiskyBanditSpec spec;
        built.env = std::make_unique<RiskyBanditEnv>(spec);
        built.model = std::make_unique<ExplicitModel>(explicit_model(spec));
    }
    return built;
}

std::string artifact_stem(const ExperimentConfig& config, std::uint64_t seed) {
    return to_string(config.algorithm) + "_" + to_string(config.env) + "_seed" +
           std::to_string(seed);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DiagnosticError("cannot open " + path.string() + " for write");
    out << content;
    if (!out) throw DiagnosticError("write failed for " + path.string());
}

}  // namespace

SeedArtifacts run_seed(const ExperimentConfig& config, std::uint64_t seed) {
    const BuiltEnv built = build_env(config.env);
    Rng env_rng(split_seed(seed, static_cast<std::uint64_t>(Stream::Environment)));
    Rng buffer_rng(split_seed(seed, static_cast<std::uint64_t>(Stream::Buffer)));
    Rng explore_rng(split_seed(seed, static_cast<std::uint64_t>(Stream::Exploration)));
    Rng eval_rng(split_seed(seed, static_cast<std::uint64_t>(Stream::Evaluation)));

    SeedArtifacts artifacts;
    artifacts.seed = seed;
    const std::string stem = artifact_stem(config, seed);
    artifacts.metrics_csv = config.output_dir / (stem + ".csv");
    artifacts.checkpoint = config.output_dir / (stem + ".ckpt");

    std::vector<BatchMetrics> metrics;
    Checkpoint ckpt;
    switch (config.algorithm) {
        case AlgorithmKind::Reinforce:
        case AlgorithmKind::CvarPg: {
            PgTrainOptions opts;
            opts.alpha = config.alpha;
            opts.batch_episodes = config.batch_episodes;
            opts.batches = config.batches;
            opts.lr = config.learning_rate;
            opts.lr_value = config.value_learning_rate;
            opts.curriculum = config.curriculum;
            const bool reinforce = config.algorithm == AlgorithmKind::Reinforce;
            SoftmaxTrainResult result =
                reinforce ? train_reinforce(*built.env, built.maze.get(), opts, env_rng)
                          : train_cvar_pg(*built.env, built.maze.get(), opts, env_rng);
            metrics = std::move(result.metrics);
            ckpt.payload = Checkpoint::Softmax{
                FeatureMap{built.env->num_states(), built.env->num_actions()},
                std::move(result.params)};
            break;
        }
        case AlgorithmKind::MixPrecomputed:
        case AlgorithmKind::MixIql: {
            MixTrainOptions opts;
            opts.alpha = config.alpha;
            opts.batch_episodes = config.batch_episodes;
            opts.batches = config.batches;
            opts.iql_frequency = config.iql_frequency;
            opts.lr = config.learning_rate;
            opts.lr_iql = config.iql_learning_rate;
            opts.iql_sample_size = config.iql_sample_size;
            opts.expectile = config.expectile;
            opts.awr_beta = config.awr_beta;
            opts.softmax_temperature = config.softmax_temperature;
            opts.pi_n_mode = config.algorithm == AlgorithmKind::MixIql
                                 ? RiskNeutralMode::Iql
                                 : RiskNeutralMode::Precomputed;
            opts.curriculum = config.curriculum;
            MixTrainResult result =
                mix_train(*built.env, *built.model, built.maze.get(), opts, env_rng, buffer_rng);
            metrics = std::move(result.metrics);
            ckpt.payload = Checkpoint::Mixture{
                FeatureMap{built.env->num_states(), built.env->num_actions()},
                std::move(result.params)};
            break;
        }
        case AlgorithmKind::DrlMkv: {
            DrlTrainOptions opts;
            opts.alpha = config.alpha;
            opts.quantile_count = config.quantile_count;
            opts.lr = config.quantile_learning_rate;
            opts.batches = config.batches;
            opts.batch_episodes = config.batch_episodes;
            DrlMkvResult result =
                train_drl_mkv(*built.env, built.maze.get(), opts, env_rng, explore_rng);
            metrics = std::move(result.metrics);
            ckpt.payload = Checkpoint::Quantile{std::move(result.z), config.alpha};
            break;
        }
        case AlgorithmKind::DrlLim: {
            DrlTrainOptions opts;
            opts.alpha = config.alpha;
            opts.quantile_count = config.quantile_count;
            opts.lr = config.quantile_learning_rate;
            opts.batches = config.batches;
            opts.batch_episodes = config.batch_episodes;
            DrlLimResult result = train_drl_lim(*built.env, built.maze.get(), opts, env_rng,
                                                explore_rng, eval_rng);
            metrics = std::move(result.metrics);
            ckpt.payload = Checkpoint::QuantileAugmented{std::move(result.z), result.k0};
            break;
        }
    }

    write_file(artifacts.metrics_csv, metrics_to_csv(metrics, config.batch_episodes));
    ckpt.save(artifacts.checkpoint);
    return artifacts;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) {
        throw DiagnosticError("run_experiment: cannot create output directory " +
                              config.output_dir.string() + ": " + ec.message());
    }
    {  // fail before any training if the directory is not writable
        const auto probe = config.output_dir / ".write_probe";
        std::ofstream out(probe);
        if (!out) {
            throw DiagnosticError("run_experiment: output directory not writable: " +
                                  config.output_dir.string());
        }
        out.close();
        std::filesystem::remove(probe, ec);
    }

    std::vector<std::future<SeedArtifacts>> futures;
    futures.reserve(config.seeds.size());
    for (std::uint64_t seed : config.seeds) {
        futures.push_back(std::async(std::launch::async,
                                     [&config, seed] { return run_seed(config, seed); }));
    }
    ExperimentResult result;
    result.seeds.reserve(futures.size());
    for (auto& f : futures) result.seeds.push_back(f.get());
    return result;
}

namespace {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("aggregate: cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ContractViolation("aggregate: empty file " + path.string());
    std::stringstream header(line);
    for (std::string col; std::getline(header, col, ',');) table.columns.push_back(col);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::vector<double> values;
        for (std::string cell; std::getline(row, cell, ',');) values.push_back(std::stod(cell));
        if (values.size() != table.columns.size()) {
            throw ContractViolation("aggregate: ragged row in " + path.string());
        }
        table.rows.push_back(std::move(values));
    }
    return table;
}

}  // namespace

std::filesystem::path aggregate(const std::vector<std::filesystem::path>& csv_paths,
                                const std::filesystem::path& out_path) {
    if (csv_paths.empty()) throw ContractViolation("aggregate: no input files");
    std::vector<CsvTable> tables;
    tables.reserve(csv_paths.size());
    for (const auto& p : csv_paths) tables.push_back(read_csv(p));
    const CsvTable& first = tables.front();
    for (const CsvTable& t : tables) {
        if (t.columns != first.columns) {
            throw ContractViolation("aggregate: schema mismatch across input files");
        }
        if (t.rows.size() != first.rows.size()) {
            throw ContractViolation("aggregate: row count mismatch across input files");
        }
    }

    std::string out = first.columns.front();  // batch_index keys the rows
    for (std::size_t c = 1; c < first.columns.size(); ++c) {
        out += ',' + first.columns[c] + "_mean," + first.columns[c] + "_sem";
    }
    out += '\n';

    const double n = static_cast<double>(tables.size());
    char buf[64];
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", first.rows[r][0]);
        out += buf;
        for (std::size_t c = 1; c < first.columns.size(); ++c) {
            double mean = 0.0;
            for (const CsvTable& t : tables) mean += t.rows[r][c];
            mean /= n;
            double sem = 0.0;
            if (tables.size() > 1) {
                double ss = 0.0;
                for (const CsvTable& t : tables) {
                    const double d = t.rows[r][c] - mean;
                    ss += d * d;
                }
                sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
            }
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", mean, sem);
            out += buf;
        }
        out += '\n';
    }
    write_file(out_path, out);
    return out_path;
}

std::filesystem::path dump_quantile_curve(const ExperimentConfig& config,
                                          const std::filesystem::path& checkpoint_path,
                                          int episodes, const std::filesystem::path& out_path) {
    if (episodes <= 0) throw ContractViolation("dump_quantile_curve: episodes must be positive");
    const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
    PolicyFn policy;
    try {
        policy = ckpt.policy_fn();
    } catch (const ContractViolation&) {
        throw ContractViolation(std::string("dump_quantile_curve: checkpoint kind \"") +
                                ckpt.kind() + "\" cannot be rolled out as a stateless policy");
    }
    const BuiltEnv built = build_env(config.env);
    const std::vector<double> probe = policy(built.env->initial_state());
    if (static_cast<int>(probe.size()) != built.env->num_actions()) {
        throw ContractViolation("dump_quantile_curve: checkpoint was trained on a different "
                                "environment than the config names");
    }
    Rng rng(split_seed(config.seeds.front(), static_cast<std::uint64_t>(Stream::Evaluation)));
    std::vector<double> returns;
    returns.reserve(episodes);
    for (int i = 0; i < episodes; ++i) {
        returns.push_back(run_episode(*built.env, policy, rng).total_return);
    }
    write_file(out_path, quantile_curve(returns).to_csv());
    return out_path;
}

}  // namespace cvarmix
