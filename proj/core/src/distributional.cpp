#include "cvarmix/distributional.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "cvarmix/errors.hpp"
#include "cvarmix/risk.hpp"

namespace cvarmix {

QuantileTable QuantileTable::zeros(int num_states, int num_actions, int quantile_count) {
    QuantileTable t;
    t.num_states = num_states;
    t.num_actions = num_actions;
    t.quantile_count = quantile_count;
    t.data.assign(static_cast<std::size_t>(num_states) * num_actions * quantile_count, 0.0);
    return t;
}

double QuantileTable::cvar(int state, int action, double alpha) const {
    const auto q = at(state, action);
    const std::size_t m = tail_count(alpha, q.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += q[j];
    return sum / static_cast<double>(m);
}

bool QuantileTable::nondecreasing(int state, int action) const {
    const auto q = at(state, action);
    return std::is_sorted(q.begin(), q.end());
}

int drl_mkv_greedy(const QuantileTable& z, int state, double alpha) {
    int best = 0;
    double best_cvar = z.cvar(state, 0, alpha);
    for (int a = 1; a < z.num_actions; ++a) {
        const double c = z.cvar(state, a, alpha);
        if (c > best_cvar) {
            best_cvar = c;
            best = a;
        }
    }
    return best;
}

int drl_mkv_act(const QuantileTable& z, int state, double alpha, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.next_double() < epsilon) {
        return static_cast<int>(rng.next_below(z.num_actions));
    }
    return drl_mkv_greedy(z, state, alpha);
}

namespace {

/// One pinball-regression step of every quantile of `values` toward the
/// target set, then the crossing fix by sorting.
void quantile_regression_step(std::span<double> values, std::span<const double> targets,
                              double lr) {
    const int m = static_cast<int>(values.size());
    const double inv_targets = 1.0 / static_cast<double>(targets.size());
    for (int j = 0; j < m; ++j) {
        const double tau = (j + 0.5) / static_cast<double>(m);
        std::size_t below = 0;
        for (double t : targets) below += (t < values[j]) ? 1 : 0;
        values[j] += lr * (tau - static_cast<double>(below) * inv_targets);
    }
    std::sort(values.begin(), values.end());
}

}  // namespace

void drl_mkv_update(QuantileTable& z, const Transition& t, int next_action, double gamma,
                    double lr) {
    const int m = z.quantile_count;
    std::vector<double> targets(m);
    if (t.done) {
        std::fill(targets.begin(), targets.end(), t.reward);
    } else {
        const auto next = z.at(t.next_state, next_action);
        for (int k = 0; k < m; ++k) targets[k] = t.reward + gamma * next[k];
    }
    quantile_regression_step(z.at(t.state, t.action), targets, lr);
}

double track_k(double k, double reward, double gamma) {
    if (!(gamma > 0.0)) throw ContractViolation("track_k: gamma must be positive");
    return (k - reward) / gamma;
}

int KGrid::bin(double v) const {
    const int i = static_cast<int>(std::floor((v - lo) / step()));
    return std::clamp(i, 0, bins - 1);
}

AugmentedQuantileTable AugmentedQuantileTable::zeros(int num_states, int num_actions, KGrid grid,
                                                     int quantile_count) {
    AugmentedQuantileTable t;
    t.table = QuantileTable::zeros(num_states * grid.bins, num_actions, quantile_count);
    t.grid = grid;
    t.base_states = num_states;
    return t;
}

int drl_lim_greedy(const AugmentedQuantileTable& z, AugmentedState state) {
    const double k = z.grid.value(state.k_bin);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < z.table.num_actions; ++a) {
        const auto q = z.at(state, a);
        double shortfall = 0.0;
        for (double v : q) shortfall += std::max(k - v, 0.0);
        const double score = -shortfall / static_cast<double>(q.size());
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

int drl_lim_act(const AugmentedQuantileTable& z, AugmentedState state, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.next_double() < epsilon) {
        return static_cast<int>(rng.next_below(z.table.num_actions));
    }
    return drl_lim_greedy(z, state);
}

void drl_lim_update(AugmentedQuantileTable& z, const AugTransition& t, double gamma, double lr) {
    const int m = z.table.quantile_count;
    std::vector<double> targets(m);
    if (t.done) {
        std::fill(targets.begin(), targets.end(), t.reward);
    } else {
        const int next_action = drl_lim_greedy(z, t.next_state);
        const auto next = z.at(t.next_state, next_action);
        for (int k = 0; k < m; ++k) targets[k] = t.reward + gamma * next[k];
    }
    quantile_regression_step(z.at(t.state, t.action), targets, lr);
}

namespace {

double annealed_epsilon(const DrlTrainOptions& opts, int batch_index) {
    const int half = std::max(1, opts.batches / 2);
    if (batch_index >= half) return opts.epsilon_end;
    const double frac = static_cast<double>(batch_index) / half;
    return opts.epsilon_start + frac * (opts.epsilon_end - opts.epsilon_start);
}

}  // namespace

DrlMkvResult train_drl_mkv(const Env& env, const MazeSpec* maze, const DrlTrainOptions& opts,
                           Rng& env_rng, Rng& explore_rng) {
    const auto start = std::chrono::steady_clock::now();
    DrlMkvResult result;
    result.z = QuantileTable::zeros(env.num_states(), env.num_actions(), opts.quantile_count);
    result.metrics.reserve(opts.batches);
    const double gamma = env.discount();
    for (int b = 0; b < opts.batches; ++b) {
        const double eps = annealed_epsilon(opts, b);
        std::vector<Trajectory> batch;
        batch.reserve(opts.batch_episodes);
        for (int e = 0; e < opts.batch_episodes; ++e) {
            Trajectory traj;
            int state = env.initial_state();
            double weight = 1.0;
            for (int step = 0; step < env.max_episode_len(); ++step) {
                const int action = drl_mkv_act(result.z, state, opts.alpha, eps, explore_rng);
                Transition tr = env.step(state, action, env_rng);
                if (step + 1 == env.max_episode_len()) tr.done = true;
                const int next_action =
                    tr.done ? 0 : drl_mkv_greedy(result.z, tr.next_state, opts.alpha);
                drl_mkv_update(result.z, tr, next_action, gamma, opts.lr);
                traj.total_return += weight * tr.reward;
                weight *= gamma;
                traj.transitions.push_back(tr);
                state = tr.next_state;
                if (tr.done) break;
            }
            batch.push_back(std::move(traj));
        }
        result.metrics.push_back(batch_metrics(b, batch, opts.alpha, opts.alpha, 0.0, maze));
        result.metrics.back().wallclock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return result;
}

DrlLimResult train_drl_lim(const Env& env, const MazeSpec* maze, const DrlTrainOptions& opts,
                           Rng& env_rng, Rng& explore_rng, Rng& eval_rng) {
    const auto start = std::chrono::steady_clock::now();
    DrlLimResult result;
    result.z = AugmentedQuantileTable::zeros(env.num_states(), env.num_actions(), opts.k_grid,
                                             opts.quantile_count);
    result.metrics.reserve(opts.batches);
    const double gamma = env.discount();

    auto greedy_returns = [&](int episodes) {
        std::vector<double> returns;
        returns.reserve(episodes);
        for (int e = 0; e < episodes; ++e) {
            double k = result.k0;
            int state = env.initial_state();
            double ret = 0.0, weight = 1.0;
            for (int step = 0; step < env.max_episode_len(); ++step) {
                const AugmentedState aug{state, opts.k_grid.bin(k)};
                const int action = drl_lim_greedy(result.z, aug);
                const Transition tr = env.step(state, action, eval_rng);
                ret += weight * tr.reward;
                weight *= gamma;
                k = track_k(k, tr.reward, gamma);
                state = tr.next_state;
                if (tr.done) break;
            }
            returns.push_back(ret);
        }
        return returns;
    };

    for (int b = 0; b < opts.batches; ++b) {
        if (opts.k_refresh_batches > 0 && b % opts.k_refresh_batches == 0) {
            const std::vector<double> returns = greedy_returns(opts.k_eval_episodes);
            result.k0 = empirical_cvar(returns, opts.alpha);
        }
        const double eps = annealed_epsilon(opts, b);
        std::vector<Trajectory> batch;
        batch.reserve(opts.batch_episodes);
        for (int e = 0; e < opts.batch_episodes; ++e) {
            Trajectory traj;
            int state = env.initial_state();
            double k = result.k0;
            double weight = 1.0;
            for (int step = 0; step < env.max_episode_len(); ++step) {
                const AugmentedState aug{state, opts.k_grid.bin(k)};
                const int action = drl_lim_act(result.z, aug, eps, explore_rng);
                Transition tr = env.step(state, action, env_rng);
                if (step + 1 == env.max_episode_len()) tr.done = true;
                const double k_next = track_k(k, tr.reward, gamma);
                const AugmentedState aug_next{tr.next_state, opts.k_grid.bin(k_next)};
                drl_lim_update(result.z, {aug, action, tr.reward, aug_next, tr.done}, gamma,
                               opts.lr);
                traj.total_return += weight * tr.reward;
                weight *= gamma;
                traj.transitions.push_back(tr);
                state = tr.next_state;
                k = k_next;
                if (tr.done) break;
            }
            batch.push_back(std::move(traj));
        }
        result.metrics.push_back(batch_metrics(b, batch, opts.alpha, opts.alpha, 0.0, maze));
        result.metrics.back().wallclock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return result;
}

}  // namespace cvarmix
