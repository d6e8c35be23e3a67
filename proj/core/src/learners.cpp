#include "cvarmix/learners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "cvarmix/errors.hpp"
#include "cvarmix/risk.hpp"

namespace cvarmix {

void ReplayBuffer::push(const Transition& t) {
    if (capacity_ == 0) return;
    if (data_.size() < capacity_) {
        data_.push_back(t);
        head_ = data_.size() % capacity_;
        full_ = data_.size() == capacity_;
        return;
    }
    data_[head_] = t;
    head_ = (head_ + 1) % capacity_;
    full_ = true;
}

void ReplayBuffer::push_trajectory(const Trajectory& traj) {
    for (const Transition& t : traj.transitions) push(t);
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n) {
    if (size() == 0) throw ContractViolation("ReplayBuffer::sample: buffer is empty");
    std::vector<Transition> out;
    out.reserve(n);
    const std::size_t sz = size();
    for (std::size_t i = 0; i < n; ++i) out.push_back(data_[rng_.next_below(sz)]);
    return out;
}

double alpha_schedule(int batch_index, const AlphaSchedule& schedule) {
    if (batch_index < 0) throw ContractViolation("alpha_schedule: batch_index must be >= 0");
    if (schedule.alpha_start < schedule.alpha_target) {
        throw ContractViolation("alpha_schedule: alpha_start must be >= alpha_target");
    }
    if (schedule.anneal_batches <= 0 || batch_index >= schedule.anneal_batches) {
        return schedule.alpha_target;
    }
    const double frac = static_cast<double>(batch_index) / schedule.anneal_batches;
    return schedule.alpha_start + frac * (schedule.alpha_target - schedule.alpha_start);
}

IqlTables IqlTables::zeros(int num_states, int num_actions, double eta, double beta) {
    IqlTables t;
    t.q = StateActionTable::zeros(num_states, num_actions);
    t.target_q = StateActionTable::zeros(num_states, num_actions);
    t.policy_logits = StateActionTable::zeros(num_states, num_actions);
    t.v.assign(num_states, 0.0);
    t.expectile = eta;
    t.awr_temperature = beta;
    return t;
}

std::vector<double> IqlTables::policy_probs(int state) const {
    const auto row = policy_logits.row(state);
    const double m = *std::max_element(row.begin(), row.end());
    std::vector<double> probs(row.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        probs[i] = std::exp(row[i] - m);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
    return probs;
}

StateActionTable IqlTables::policy_prob_table() const {
    StateActionTable out = StateActionTable::zeros(policy_logits.num_states,
                                                   policy_logits.num_actions);
    for (int s = 0; s < out.num_states; ++s) {
        const std::vector<double> probs = policy_probs(s);
        for (int a = 0; a < out.num_actions; ++a) out.at(s, a) = probs[a];
    }
    return out;
}

void iql_update(std::span<const Transition> sample, IqlTables& tables, double gamma, double lr) {
    if (sample.empty()) throw ContractViolation("iql_update: sample must be nonempty");
    if (!(tables.expectile > 0.0 && tables.expectile < 1.0)) {
        throw ContractViolation("iql_update: expectile must lie in (0,1)");
    }
    if (tables.awr_temperature < 0.0) {
        throw ContractViolation("iql_update: awr temperature must be >= 0");
    }
    const double eta = tables.expectile;
    const double beta = tables.awr_temperature;
    for (const Transition& t : sample) {
        // Snapshot the quantities the three losses read, then apply all steps.
        const double q_sa = tables.q.at(t.state, t.action);
        const double v_s = tables.v[t.state];
        const double q_target = t.done ? t.reward : t.reward + gamma * tables.v[t.next_state];
        const double target_q_sa = tables.target_q.at(t.state, t.action);

        tables.q.at(t.state, t.action) = q_sa + lr * (q_target - q_sa);

        const double u = target_q_sa - v_s;
        const double asym = std::abs(eta - (u < 0.0 ? 1.0 : 0.0));
        tables.v[t.state] = v_s + lr * 2.0 * asym * u;

        const double advantage = q_sa - v_s;
        const double weight = std::exp(std::min(beta * advantage, 5.0));
        const std::vector<double> probs = tables.policy_probs(t.state);
        for (int b = 0; b < tables.policy_logits.num_actions; ++b) {
            const double indicator = (b == t.action) ? 1.0 : 0.0;
            tables.policy_logits.at(t.state, b) += lr * weight * (indicator - probs[b]);
        }
    }
    tables.passes_done += 1;
    if (tables.target_sync > 0 && tables.passes_done % tables.target_sync == 0) {
        tables.target_q = tables.q;
    }
}

double cvar_pg_update(std::span<const Trajectory> batch, DifferentiablePolicy& policy,
                      double alpha, double lr) {
    const std::size_t n = batch.size();
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ContractViolation("cvar_pg_update: alpha must lie in (0,1]");
    }
    if (static_cast<double>(n) * alpha < 1.0 - 1e-9) {
        throw ContractViolation("cvar_pg_update: batch size below ceil(1/alpha)");
    }
    std::vector<double> returns(n);
    for (std::size_t i = 0; i < n; ++i) returns[i] = batch[i].total_return;

    const std::vector<std::size_t> tail = tail_indices(returns, alpha);
    const double q_hat = returns[tail.back()];
    const double scale = 1.0 / (alpha * static_cast<double>(n));

    std::vector<double> grad(policy.param_dim(), 0.0);
    for (std::size_t idx : tail) {
        const double coeff = scale * (returns[idx] - q_hat);
        if (coeff == 0.0) continue;
        for (const Transition& t : batch[idx].transitions) {
            policy.accumulate_score(t.state, t.action, coeff, grad);
        }
    }
    const double norm = std::sqrt(
        std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    policy.ascend(grad, lr);
    return norm;
}

namespace {

std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
    std::vector<double> g(traj.transitions.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = traj.transitions.size(); i-- > 0;) {
        acc = traj.transitions[i].reward + gamma * acc;
        g[i] = acc;
    }
    return g;
}

}  // namespace

void reinforce_update(std::span<const Trajectory> batch, TabularSoftmaxPolicy& policy,
                      std::vector<double>& baseline_v, double gamma, double lr_policy,
                      double lr_value) {
    if (batch.empty()) throw ContractViolation("reinforce_update: batch must be nonempty");
    std::vector<double> grad(policy.param_dim(), 0.0);
    for (const Trajectory& traj : batch) {
        const std::vector<double> g = returns_to_go(traj, gamma);
        for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
            const Transition& tr = traj.transitions[t];
            policy.accumulate_score(tr.state, tr.action, g[t] - baseline_v[tr.state], grad);
        }
    }
    policy.ascend(grad, lr_policy / static_cast<double>(batch.size()));
    for (const Trajectory& traj : batch) {
        const std::vector<double> g = returns_to_go(traj, gamma);
        for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
            double& v = baseline_v[traj.transitions[t].state];
            v += lr_value * (g[t] - v);
        }
    }
}

BatchMetrics batch_metrics(int batch_index, std::span<const Trajectory> batch, double cvar_alpha,
                           double alpha_current, double grad_norm, const MazeSpec* maze) {
    BatchMetrics m;
    m.batch_index = batch_index;
    m.alpha_current = alpha_current;
    m.grad_norm = grad_norm;
    if (batch.empty()) return m;
    std::vector<double> returns(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) returns[i] = batch[i].total_return;
    m.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) /
                    static_cast<double>(returns.size());
    m.cvar_alpha_return = empirical_cvar(returns, cvar_alpha);
    if (maze != nullptr) {
        int long_paths = 0, red = 0, goal = 0;
        const int goal_id = maze->state_id(maze->goal);
        const int red_id = maze->state_id(maze->red);
        for (const Trajectory& traj : batch) {
            const PathClass cls = classify_path(traj, *maze);
            if (cls == PathClass::RiskAverseLong) ++long_paths;
            bool saw_red = false, saw_goal = false;
            for (const Transition& t : traj.transitions) {
                if (t.state == red_id || t.next_state == red_id) saw_red = true;
                if (t.next_state == goal_id) saw_goal = true;
            }
            if (saw_red) ++red;
            if (saw_goal) ++goal;
        }
        const double n = static_cast<double>(batch.size());
        m.risk_averse_rate = long_paths / n;
        m.red_visit_rate = red / n;
        m.goal_rate = goal / n;
    }
    return m;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<Trajectory> sample_batch(const Env& env, const DifferentiablePolicy& policy,
                                     int episodes, Rng& rng) {
    std::vector<Trajectory> batch;
    batch.reserve(episodes);
    const PolicyFn fn = policy.as_policy_fn();
    for (int i = 0; i < episodes; ++i) batch.push_back(run_episode(env, fn, rng));
    return batch;
}

}  // namespace

MixTrainResult mix_train(const Env& env, const ExplicitModel& model, const MazeSpec* maze,
                         const MixTrainOptions& opts, Rng& env_rng, Rng& buffer_rng) {
    const FeatureMap fm{env.num_states(), env.num_actions()};
    IqlTables iql = IqlTables::zeros(env.num_states(), env.num_actions(), opts.expectile,
                                     opts.awr_beta);

    StateActionTable pi_n;
    if (opts.pi_n_mode == RiskNeutralMode::Precomputed) {
        const StateActionTable q_star = value_iteration(model, env.discount(), 1e-10);
        pi_n = risk_neutral_from_q(q_star, opts.softmax_temperature);
    } else {
        pi_n = iql.policy_prob_table();  // uniform until the first IQL pass
    }

    TabularMixturePolicy policy(fm, MixturePolicyParams::zeros(fm, std::move(pi_n)));
    ReplayBuffer buffer(opts.buffer_capacity, buffer_rng.next_u64());

    const auto start = std::chrono::steady_clock::now();
    MixTrainResult result;
    result.metrics.reserve(opts.batches);
    for (int m = 1; m <= opts.batches; ++m) {
        const double alpha = opts.curriculum ? alpha_schedule(m - 1, *opts.curriculum)
                                             : opts.alpha;
        const std::vector<Trajectory> batch =
            sample_batch(env, policy, opts.batch_episodes, env_rng);
        for (const Trajectory& traj : batch) buffer.push_trajectory(traj);

        const double grad_norm = cvar_pg_update(batch, policy, alpha, opts.lr);
        result.metrics.push_back(batch_metrics(m - 1, batch, opts.alpha, alpha, grad_norm, maze));
        result.metrics.back().wallclock_seconds = seconds_since(start);

        if (opts.pi_n_mode == RiskNeutralMode::Iql && opts.iql_frequency > 0 &&
            m % opts.iql_frequency == 0) {
            const std::vector<Transition> sample =
                buffer.sample(std::min(opts.iql_sample_size, buffer.size()));
            iql_update(sample, iql, env.discount(), opts.lr_iql);
            policy.params().risk_neutral = iql.policy_prob_table();
        }
    }
    result.params = policy.params();
    result.iql = std::move(iql);
    return result;
}

SoftmaxTrainResult train_cvar_pg(const Env& env, const MazeSpec* maze, const PgTrainOptions& opts,
                                 Rng& env_rng) {
    const FeatureMap fm{env.num_states(), env.num_actions()};
    TabularSoftmaxPolicy policy = TabularSoftmaxPolicy::zeros(fm);
    const auto start = std::chrono::steady_clock::now();
    SoftmaxTrainResult result;
    result.metrics.reserve(opts.batches);
    for (int m = 1; m <= opts.batches; ++m) {
        const double alpha = opts.curriculum ? alpha_schedule(m - 1, *opts.curriculum)
                                             : opts.alpha;
        const std::vector<Trajectory> batch =
            sample_batch(env, policy, opts.batch_episodes, env_rng);
        const double grad_norm = cvar_pg_update(batch, policy, alpha, opts.lr);
        result.metrics.push_back(batch_metrics(m - 1, batch, opts.alpha, alpha, grad_norm, maze));
        result.metrics.back().wallclock_seconds = seconds_since(start);
    }
    result.params = policy.params();
    return result;
}

SoftmaxTrainResult train_reinforce(const Env& env, const MazeSpec* maze,
                                   const PgTrainOptions& opts, Rng& env_rng) {
    const FeatureMap fm{env.num_states(), env.num_actions()};
    TabularSoftmaxPolicy policy = TabularSoftmaxPolicy::zeros(fm);
    std::vector<double> baseline(env.num_states(), 0.0);
    const auto start = std::chrono::steady_clock::now();
    SoftmaxTrainResult result;
    result.metrics.reserve(opts.batches);
    for (int m = 1; m <= opts.batches; ++m) {
        const std::vector<Trajectory> batch =
            sample_batch(env, policy, opts.batch_episodes, env_rng);
        reinforce_update(batch, policy, baseline, env.discount(), opts.lr, opts.lr_value);
        result.metrics.push_back(batch_metrics(m - 1, batch, opts.alpha, 1.0, 0.0, maze));
        result.metrics.back().wallclock_seconds = seconds_since(start);
    }
    result.params = policy.params();
    result.baseline_v = std::move(baseline);
    return result;
}

}  // namespace cvarmix
