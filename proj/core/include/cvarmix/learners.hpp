#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cvarmix/env.hpp"
#include "cvarmix/policy.hpp"
#include "cvarmix/rng.hpp"

namespace cvarmix {

/// Ring buffer of transitions with seeded uniform sampling (with
/// replacement). Sampling order is a pure function of the seed and the
/// insertion history.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, std::uint64_t seed)
        : capacity_(capacity), rng_(seed) {}

    void push(const Transition& t);
    void push_trajectory(const Trajectory& traj);
    std::size_t size() const { return full_ ? capacity_ : head_; }
    std::size_t capacity() const { return capacity_; }
    std::vector<Transition> sample(std::size_t n);

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
    std::size_t head_ = 0;
    bool full_ = false;
    Rng rng_;
};

/// Linear risk-level annealing: alpha_start at batch 0 down to alpha_target
/// at anneal_batches, constant afterward.
struct AlphaSchedule {
    double alpha_start = 0.8;
    double alpha_target = 0.1;
    int anneal_batches = 0;
};

double alpha_schedule(int batch_index, const AlphaSchedule& schedule);

/// Tabular implicit Q-learning state: Q and V estimators, a periodically
/// synced target Q, and the extracted policy logits.
struct IqlTables {
    StateActionTable q;
    StateActionTable target_q;
    StateActionTable policy_logits;
    std::vector<double> v;
    double expectile = 0.8;       // eta in the asymmetric value loss
    double awr_temperature = 1.0; // beta in the advantage weighting
    int target_sync = 10;         // passes between target_q refreshes
    int passes_done = 0;

    static IqlTables zeros(int num_states, int num_actions, double eta, double beta);
    std::vector<double> policy_probs(int state) const;
    StateActionTable policy_prob_table() const;
};

/// One pass of tabular IQL over a transition sample: per transition, a
/// squared-loss step of Q toward r + gamma V(s') (plain r when terminal), an
/// expectile step of V toward target_q(s,a), and an advantage-weighted
/// log-likelihood step on the policy logits with the exponent clipped at +5.
/// All three use the table state from before the transition's updates.
void iql_update(std::span<const Transition> sample, IqlTables& tables, double gamma, double lr);

/// One CVaR policy-gradient ascent step from a batch of trajectories:
///   g = 1/(alpha N) * sum_{i in tail} (R_i - q_hat) * sum_t dlog pi(a|s)
/// with the tail set chosen by tail_indices (exactly ceil(alpha N) members,
/// stable under ties). Updates the policy in place and returns ||g||_2, which
/// is exactly zero iff the batch's return tail is flat.
double cvar_pg_update(std::span<const Trajectory> batch, DifferentiablePolicy& policy,
                      double alpha, double lr);

/// REINFORCE with a learned state-value baseline: the policy ascends the
/// advantage-weighted score averaged over trajectories, then the baseline
/// table regresses toward the observed returns-to-go.
void reinforce_update(std::span<const Trajectory> batch, TabularSoftmaxPolicy& policy,
                      std::vector<double>& baseline_v, double gamma, double lr_policy,
                      double lr_value);

/// Per-batch training diagnostics shared by every learner driver.
struct BatchMetrics {
    int batch_index = 0;
    double mean_return = 0.0;
    double cvar_alpha_return = 0.0;
    double risk_averse_rate = 0.0;
    double red_visit_rate = 0.0;
    double goal_rate = 0.0;
    double grad_norm = 0.0;
    double alpha_current = 0.0;
    double wallclock_seconds = 0.0;  // elapsed driver time when the row was recorded
};

/// cvar_alpha is the risk level the cvar_alpha_return column reports at (the
/// benchmark target, fixed across algorithms); alpha_current is the level the
/// learner optimized this batch (annealed for curricula, 1 for risk-neutral
/// learners).
BatchMetrics batch_metrics(int batch_index, std::span<const Trajectory> batch, double cvar_alpha,
                           double alpha_current, double grad_norm, const MazeSpec* maze);

enum class RiskNeutralMode { Precomputed, Iql };

struct MixTrainOptions {
    double alpha = 0.1;
    int batch_episodes = 50;   // N
    int batches = 600;         // M
    int iql_frequency = 5;     // C
    double lr = 1e-2;
    double lr_iql = 1e-1;
    std::size_t iql_sample_size = 20000;
    double expectile = 0.8;
    double awr_beta = 1.0;
    double softmax_temperature = 0.05;
    RiskNeutralMode pi_n_mode = RiskNeutralMode::Precomputed;
    std::optional<AlphaSchedule> curriculum;
    std::size_t buffer_capacity = 1000000;
};

struct MixTrainResult {
    MixturePolicyParams params;
    IqlTables iql;
    std::vector<BatchMetrics> metrics;
};

/// The mixture-policy training loop: every batch samples N episodes with the
/// current mixture, stores them, and takes one CVaR policy-gradient step on
/// (theta1, theta2); every C-th batch additionally runs one IQL pass over a
/// buffer sample when the risk-neutral component is learned online
/// (Precomputed mode freezes pi_n and skips IQL).
MixTrainResult mix_train(const Env& env, const ExplicitModel& model, const MazeSpec* maze,
                         const MixTrainOptions& opts, Rng& env_rng, Rng& buffer_rng);

struct PgTrainOptions {
    double alpha = 0.1;  // cvar_pg only
    int batch_episodes = 50;
    int batches = 600;
    double lr = 1e-2;
    double lr_value = 1e-1;  // reinforce only
    std::optional<AlphaSchedule> curriculum;
};

struct SoftmaxTrainResult {
    SoftmaxPolicyParams params;
    std::vector<double> baseline_v;  // reinforce only
    std::vector<BatchMetrics> metrics;
};

SoftmaxTrainResult train_cvar_pg(const Env& env, const MazeSpec* maze, const PgTrainOptions& opts,
                                 Rng& env_rng);
SoftmaxTrainResult train_reinforce(const Env& env, const MazeSpec* maze,
                                   const PgTrainOptions& opts, Rng& env_rng);

}  // namespace cvarmix
