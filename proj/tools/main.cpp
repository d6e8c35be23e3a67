// Command line front end: seeded experiment runs, multi-seed aggregation,
// quantile-curve export, and the oracle golden-check suites.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvarmix/checkpoint.hpp"
#include "cvarmix/distributional.hpp"
#include "cvarmix/errors.hpp"
#include "cvarmix/experiment.hpp"
#include "cvarmix/oracle.hpp"
#include "cvarmix/risk.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string token = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                              : comma - pos);
        if (!token.empty()) seeds.push_back(std::stoull(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (seeds.empty()) throw cvarmix::ContractViolation("--seeds: empty seed list");
    return seeds;
}

int run_train(const std::string& config_path, const std::string& seeds_arg,
              const std::string& out_dir) {
    cvarmix::ExperimentConfig config = cvarmix::parse_config(config_path);
    if (!seeds_arg.empty()) config.seeds = parse_seed_list(seeds_arg);
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.validate();
    const cvarmix::ExperimentResult result = cvarmix::run_experiment(config);
    for (const auto& seed : result.seeds) {
        std::cout << "seed " << seed.seed << ": " << seed.metrics_csv.string() << "  "
                  << seed.checkpoint.string() << "\n";
    }
    return kExitOk;
}

int run_aggregate(const std::vector<std::string>& inputs, const std::string& in_dir,
                  const std::string& out_file) {
    std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
    if (!in_dir.empty()) {
        for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
            if (entry.path().extension() == ".csv") paths.push_back(entry.path());
        }
        std::sort(paths.begin(), paths.end());
    }
    if (paths.empty()) throw cvarmix::ContractViolation("aggregate: no input CSV files");
    const auto out = cvarmix::aggregate(paths, out_file);
    std::cout << out.string() << "\n";
    return kExitOk;
}

int run_quantile_curve(const std::string& config_path, const std::string& checkpoint,
                       int episodes, const std::string& out_file) {
    const cvarmix::ExperimentConfig config = cvarmix::parse_config(config_path);
    const auto out = cvarmix::dump_quantile_curve(config, checkpoint, episodes, out_file);
    std::cout << out.string() << "\n";
    return kExitOk;
}

struct SuiteReport {
    int checks = 0;
    int failures = 0;

    void expect(bool ok, const std::string& label, const std::string& detail) {
        ++checks;
        if (!ok) ++failures;
        std::cout << (ok ? "  ok   " : "  FAIL ") << label << "  (" << detail << ")\n";
    }
};

void oracle_bfs(SuiteReport& report) {
    using namespace cvarmix;
    const MazeSpec maze = MazeSpec::canonical();
    const PathLengths lengths = bfs_path_lengths(maze);
    char detail[96];
    std::snprintf(detail, sizeof(detail), "red=%d safe=%d", lengths.red_path_len,
                  lengths.safe_path_len);
    report.expect(lengths.red_path_len == 9 && lengths.safe_path_len == 11,
                  "canonical maze path lengths (9, 11)", detail);

    // Value iteration must route its greedy policy down the short noisy arm.
    const ExplicitModel model = explicit_model(maze);
    const StateActionTable q = value_iteration(model, maze.discount, 1e-10);
    int state = model.initial_state();
    bool through_red = false;
    int steps = 0;
    while (state != maze.state_id(maze.goal) && steps < 50) {
        state = maze.state_id(maze.move(maze.pos_of(state), greedy_action(q, state)));
        if (state == maze.state_id(maze.red)) through_red = true;
        ++steps;
    }
    std::snprintf(detail, sizeof(detail), "steps=%d red=%d", steps, through_red ? 1 : 0);
    report.expect(steps == 9 && through_red, "greedy risk-neutral rollout takes the red arm",
                  detail);
}

void oracle_cvar(SuiteReport& report) {
    using namespace cvarmix;
    char detail[128];

    const ExplicitModel bandit = explicit_model(RiskyBanditSpec{});
    StateActionTable uniform = StateActionTable::zeros(1, 2);
    uniform.at(0, 0) = uniform.at(0, 1) = 0.5;
    const FiniteReturnDistribution mixed =
        enumerate_returns(bandit, uniform, NoiseGrid::standard(1), 1);
    report.expect(mixed.atoms.size() == 3 && std::abs(mixed.atoms[0].prob - 0.05) < 1e-12 &&
                      std::abs(mixed.atoms[1].prob - 0.5) < 1e-12 &&
                      std::abs(mixed.atoms[2].prob - 0.45) < 1e-12,
                  "bandit uniform-policy atoms {(-10,.05),(1,.5),(3,.45)}",
                  "exact enumeration");

    StateActionTable risky = StateActionTable::zeros(1, 2);
    risky.at(0, 1) = 1.0;
    const FiniteReturnDistribution b = enumerate_returns(bandit, risky, NoiseGrid::standard(1), 1);
    std::snprintf(detail, sizeof(detail), "cvar0.1=%.6f cvar0.2=%.6f mean=%.6f",
                  exact_cvar(b, 0.1), exact_cvar(b, 0.2), exact_cvar(b, 1.0));
    report.expect(std::abs(exact_cvar(b, 0.1) + 10.0) < 1e-12 &&
                      std::abs(exact_cvar(b, 0.2) + 3.5) < 1e-12 &&
                      std::abs(exact_cvar(b, 1.0) - 1.7) < 1e-12,
                  "bandit action-B exact CVaR {-10, -3.5, 1.7}", detail);

    const NoiseGrid grid = NoiseGrid::standard(1001);
    FiniteReturnDistribution unit;
    for (double z : grid.values) unit.atoms.push_back({z, 1.0 / 1001.0});
    const double grid_cvar = exact_cvar(unit, 0.1);
    std::snprintf(detail, sizeof(detail), "cvar=%.6f", grid_cvar);
    report.expect(std::abs(grid_cvar + 1.755) < 0.1,
                  "discretized N(0,1) CVaR_0.1 near -1.755", detail);

    // Red arm of the maze under the greedy risk-neutral policy: nine steps,
    // one noisy reward, exact law enumerable.
    const MazeSpec maze = MazeSpec::canonical();
    const ExplicitModel model = explicit_model(maze);
    const StateActionTable q = value_iteration(model, maze.discount, 1e-10);
    StateActionTable greedy = StateActionTable::zeros(maze.num_states(), kMazeActions);
    for (int s = 0; s < maze.num_states(); ++s) greedy.at(s, greedy_action(q, s)) = 1.0;
    const FiniteReturnDistribution short_path =
        enumerate_returns(model, greedy, grid, maze.max_episode_len);
    const double short_cvar = exact_cvar(short_path, 0.1);
    std::snprintf(detail, sizeof(detail), "mean=%.6f cvar=%.6f", short_path.mean(), short_cvar);
    report.expect(std::abs(short_path.mean() - 1.94822) < 1e-3 &&
                      std::abs(short_cvar + 50.31) < 0.1,
                  "short-arm return law: mean 1.94822, CVaR_0.1 -50.31", detail);
}

void oracle_gradcheck(SuiteReport& report) {
    using namespace cvarmix;
    const FeatureMap fm{4, 3};
    Rng rng(20240901);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        SoftmaxPolicyParams params;
        params.theta.resize(fm.dim());
        for (auto& v : params.theta) v = rng.next_normal();
        const int state = static_cast<int>(rng.next_below(fm.num_states));
        const int action = static_cast<int>(rng.next_below(fm.num_actions));
        const auto logp = [&](std::span<const double> theta) {
            SoftmaxPolicyParams p{std::vector<double>(theta.begin(), theta.end())};
            return std::log(softmax_policy_probs(p, fm, state)[action]);
        };
        const std::vector<double> numeric = finite_diff_logp(logp, params.theta, 1e-5);
        const std::vector<double> analytic = softmax_log_grad(params, fm, state, action);
        for (int i = 0; i < fm.dim(); ++i) {
            worst = std::max(worst, std::abs(numeric[i] - analytic[i]));
        }
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "max abs err=%.3g", worst);
    report.expect(worst < 1e-6, "softmax score matches central differences", detail);
}

int run_oracle(const std::string& suite) {
    SuiteReport report;
    std::cout << "oracle suite: " << suite << "\n";
    if (suite == "bfs" || suite == "all") oracle_bfs(report);
    if (suite == "cvar" || suite == "all") oracle_cvar(report);
    if (suite == "gradcheck" || suite == "all") oracle_gradcheck(report);
    if (report.checks == 0) {
        std::cerr << "unknown suite \"" << suite << "\" (choices: bfs, cvar, gradcheck, all)\n";
        return kExitValidation;
    }
    std::cout << report.checks - report.failures << "/" << report.checks << " checks passed\n";
    return report.failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse reinforcement learning benchmark (CVaR policy gradient with "
                 "mixture policies)"};
    app.require_subcommand(1);

    std::string config_path, seeds_arg, out_dir;
    auto* train = app.add_subcommand("train", "Run the configured experiment for every seed");
    train->add_option("--config", config_path, "JSON experiment config")->required();
    train->add_option("--seeds", seeds_arg, "Comma separated seed list (overrides config)");
    train->add_option("--out", out_dir, "Output directory (overrides config)");

    std::vector<std::string> agg_inputs;
    std::string agg_dir, agg_out;
    auto* agg = app.add_subcommand("aggregate", "Mean/standard-error summary across seed CSVs");
    agg->add_option("--in", agg_dir, "Directory of per-seed CSV files");
    agg->add_option("--files", agg_inputs, "Explicit CSV paths");
    agg->add_option("--out", agg_out, "Summary CSV path")->required();

    std::string qc_config, qc_ckpt, qc_out;
    int qc_episodes = 2000;
    auto* qc = app.add_subcommand("quantile-curve",
                                  "Roll out a checkpointed policy and export its return "
                                  "quantile curve");
    qc->add_option("--config", qc_config, "JSON experiment config")->required();
    qc->add_option("--checkpoint", qc_ckpt, "Policy checkpoint path")->required();
    qc->add_option("--episodes", qc_episodes, "Number of evaluation episodes");
    qc->add_option("--out", qc_out, "Curve CSV path")->required();

    std::string suite = "all";
    auto* oracle = app.add_subcommand("oracle", "Run the brute-force golden-check suites");
    oracle->add_option("--suite", suite, "bfs | cvar | gradcheck | all");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(config_path, seeds_arg, out_dir);
        if (agg->parsed()) return run_aggregate(agg_inputs, agg_dir, agg_out);
        if (qc->parsed()) return run_quantile_curve(qc_config, qc_ckpt, qc_episodes, qc_out);
        if (oracle->parsed()) return run_oracle(suite);
    } catch (const cvarmix::ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
