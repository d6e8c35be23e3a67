#pragma once

#include <span>
#include <vector>

#include "cvarmix/env.hpp"
#include "cvarmix/learners.hpp"
#include "cvarmix/rng.hpp"

namespace cvarmix {

/// Per-(state, action) return distribution approximated by M quantile values
/// at midpoint levels (j - 0.5) / M. Every update re-sorts the touched list,
/// so the represented quantile function stays nondecreasing.
struct QuantileTable {
    int num_states = 0;
    int num_actions = 0;
    int quantile_count = 80;  // M
    std::vector<double> data;

    static QuantileTable zeros(int num_states, int num_actions, int quantile_count = 80);

    std::span<double> at(int state, int action) {
        const std::size_t base =
            (static_cast<std::size_t>(state) * num_actions + action) * quantile_count;
        return {data.data() + base, static_cast<std::size_t>(quantile_count)};
    }
    std::span<const double> at(int state, int action) const {
        const std::size_t base =
            (static_cast<std::size_t>(state) * num_actions + action) * quantile_count;
        return {data.data() + base, static_cast<std::size_t>(quantile_count)};
    }

    /// Mean of the lowest ceil(alpha * M) quantile values.
    double cvar(int state, int action, double alpha) const;
    bool nondecreasing(int state, int action) const;
};

/// Greedy action under the per-step CVaR criterion; lowest id wins ties.
int drl_mkv_greedy(const QuantileTable& z, int state, double alpha);

/// Epsilon-greedy wrapper around drl_mkv_greedy. epsilon = 0 consumes no
/// randomness.
int drl_mkv_act(const QuantileTable& z, int state, double alpha, double epsilon, Rng& rng);

/// Distributional backup by quantile regression: every quantile of (s, a)
/// takes one pinball-loss step toward the target set
/// {r + gamma z(s', a')_k}_k (all targets r when terminal), then the list is
/// re-sorted to repair quantile crossings.
void drl_mkv_update(QuantileTable& z, const Transition& t, int next_action, double gamma,
                    double lr);

/// Tracking-variable propagation (k - reward) / gamma. Unclamped; binning to
/// the augmented grid happens at state construction.
double track_k(double k, double reward, double gamma);

/// Uniform grid of tracking-variable values with nearest-bin clamped
/// assignment, spanning the maze's return range.
struct KGrid {
    double lo = -200.0;
    double hi = 20.0;
    int bins = 64;

    double step() const { return (hi - lo) / bins; }
    double value(int bin) const { return lo + (bin + 0.5) * step(); }
    int bin(double v) const;
};

struct AugmentedState {
    int state = 0;
    int k_bin = 0;
};

/// Quantile table over the augmented state space (s, k_bin).
struct AugmentedQuantileTable {
    QuantileTable table;  // indexed by state * grid.bins + k_bin
    KGrid grid;
    int base_states = 0;

    static AugmentedQuantileTable zeros(int num_states, int num_actions, KGrid grid,
                                        int quantile_count = 80);
    std::span<double> at(AugmentedState s, int action) {
        return table.at(s.state * grid.bins + s.k_bin, action);
    }
    std::span<const double> at(AugmentedState s, int action) const {
        return table.at(s.state * grid.bins + s.k_bin, action);
    }
};

/// Greedy action maximizing E[-(k - Z)^+] evaluated on the augmented table;
/// the k in `state` must already be the propagated (k - r) / gamma value.
int drl_lim_greedy(const AugmentedQuantileTable& z, AugmentedState state);

int drl_lim_act(const AugmentedQuantileTable& z, AugmentedState state, double epsilon, Rng& rng);

struct AugTransition {
    AugmentedState state;
    int action = 0;
    double reward = 0.0;
    AugmentedState next_state;
    bool done = false;
};

/// Same backup and sort fix as drl_mkv_update, with the successor action
/// chosen by the tracking-variable rule at the propagated k.
void drl_lim_update(AugmentedQuantileTable& z, const AugTransition& t, double gamma, double lr);

struct DrlTrainOptions {
    double alpha = 0.1;
    int quantile_count = 80;
    double lr = 0.01;
    int batches = 600;
    int batch_episodes = 50;  // episodes grouped per metrics row
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    // The k re-estimation cadence of DRL-lim.
    int k_refresh_batches = 50;
    int k_eval_episodes = 200;
    KGrid k_grid;
};

struct DrlMkvResult {
    QuantileTable z;
    std::vector<BatchMetrics> metrics;
};

struct DrlLimResult {
    AugmentedQuantileTable z;
    double k0 = 0.0;  // last initial-state tracking value estimate
    std::vector<BatchMetrics> metrics;
};

/// Off-policy epsilon-greedy training loops; the policy updates at every
/// environment step, metrics are grouped per batch_episodes episodes.
/// epsilon anneals linearly from epsilon_start to epsilon_end over the first
/// half of training.
DrlMkvResult train_drl_mkv(const Env& env, const MazeSpec* maze, const DrlTrainOptions& opts,
                           Rng& env_rng, Rng& explore_rng);
DrlLimResult train_drl_lim(const Env& env, const MazeSpec* maze, const DrlTrainOptions& opts,
                           Rng& env_rng, Rng& explore_rng, Rng& eval_rng);

}  // namespace cvarmix
