#pragma once

#include <span>
#include <vector>

#include "cvarmix/env.hpp"

namespace cvarmix {

/// One-hot state-action feature indexing: zeta(s,a) has a single 1 at
/// index(s,a), so parameter vectors live in R^{S*A} and every per-state
/// operation touches a contiguous block of A entries.
struct FeatureMap {
    int num_states = 0;
    int num_actions = 0;

    int dim() const { return num_states * num_actions; }
    int index(int state, int action) const { return state * num_actions + action; }
    int block_start(int state) const { return state * num_actions; }
};

/// Dense (state, action) table, row-major over states.
struct StateActionTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> data;

    static StateActionTable zeros(int num_states, int num_actions) {
        return {num_states, num_actions,
                std::vector<double>(static_cast<std::size_t>(num_states) * num_actions, 0.0)};
    }
    double& at(int s, int a) { return data[static_cast<std::size_t>(s) * num_actions + a]; }
    double at(int s, int a) const { return data[static_cast<std::size_t>(s) * num_actions + a]; }
    std::span<double> row(int s) {
        return {data.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }
    std::span<const double> row(int s) const {
        return {data.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }
};

struct SoftmaxPolicyParams {
    std::vector<double> theta;  // dimension FeatureMap::dim()
};

/// pi(a|s) = exp(theta[s,a]) / sum_b exp(theta[s,b]), max-subtracted.
std::vector<double> softmax_policy_probs(const SoftmaxPolicyParams& params, const FeatureMap& fm,
                                         int state);

/// Score vector d log pi(a|s) / d theta: zeta(s,a) minus the policy-expected
/// feature vector. Dense, nonzero only in state's block.
std::vector<double> softmax_log_grad(const SoftmaxPolicyParams& params, const FeatureMap& fm,
                                     int state, int action);

/// Mixture of an adjustable softmax policy pi'(theta1) and a frozen
/// risk-neutral table, blended per (s,a) by sigmoid(theta2[s,a]) and
/// renormalized over actions (per-action weights do not preserve
/// normalization on their own).
struct MixturePolicyParams {
    std::vector<double> theta1;      // adjustable policy logits
    std::vector<double> theta2;      // mixture weight logits
    StateActionTable risk_neutral;   // rows sum to 1 within 1e-9

    static MixturePolicyParams zeros(const FeatureMap& fm, StateActionTable risk_neutral);
    void validate(const FeatureMap& fm) const;
};

std::vector<double> mixture_probs(const MixturePolicyParams& params, const FeatureMap& fm,
                                  int state);

struct MixtureLogGrad {
    std::vector<double> d_theta1;  // full feature dimension
    std::vector<double> d_theta2;
};

/// Exact log-gradient of the renormalized mixture. Throws ContractViolation
/// when pi(a|s) = 0 (gradient undefined).
MixtureLogGrad mixture_log_grad(const MixturePolicyParams& params, const FeatureMap& fm, int state,
                                int action);

/// Q-iteration on an explicit model until the sup-norm Bellman residual drops
/// below tol. Throws DiagnosticError if the iteration cap is hit first.
StateActionTable value_iteration(const ExplicitModel& model, double gamma, double tol,
                                 int max_iterations = 200000);

/// pi(a|s) proportional to exp(Q(s,a) / temperature); rows sum to 1.
StateActionTable risk_neutral_from_q(const StateActionTable& q, double temperature);

/// Greedy action ids (lowest id wins ties) and a deterministic rollout used
/// to sanity-check learned Q tables.
int greedy_action(const StateActionTable& q, int state);

/// Tabular policy with exact score functions, the interface consumed by the
/// policy-gradient learners. Parameters are exposed flattened so generic
/// finite-difference checks and optimizers can treat every policy alike.
class DifferentiablePolicy {
public:
    virtual ~DifferentiablePolicy() = default;
    virtual int num_actions() const = 0;
    virtual int param_dim() const = 0;
    virtual std::vector<double> action_probs(int state) const = 0;
    /// grad += weight * d log pi(action|state) / d params
    virtual void accumulate_score(int state, int action, double weight,
                                  std::span<double> grad) const = 0;
    virtual void ascend(std::span<const double> grad, double lr) = 0;
    virtual std::vector<double> flat_params() const = 0;
    virtual void set_flat_params(std::span<const double> params) = 0;

    PolicyFn as_policy_fn() const {
        return [this](int state) { return action_probs(state); };
    }
};

class TabularSoftmaxPolicy final : public DifferentiablePolicy {
public:
    TabularSoftmaxPolicy(FeatureMap fm, SoftmaxPolicyParams params);
    static TabularSoftmaxPolicy zeros(const FeatureMap& fm);

    int num_actions() const override { return fm_.num_actions; }
    int param_dim() const override { return fm_.dim(); }
    std::vector<double> action_probs(int state) const override;
    void accumulate_score(int state, int action, double weight,
                          std::span<double> grad) const override;
    void ascend(std::span<const double> grad, double lr) override;
    std::vector<double> flat_params() const override { return params_.theta; }
    void set_flat_params(std::span<const double> params) override;

    const SoftmaxPolicyParams& params() const { return params_; }
    const FeatureMap& feature_map() const { return fm_; }

private:
    FeatureMap fm_;
    SoftmaxPolicyParams params_;
};

/// Flat parameter layout: [theta1; theta2].
class TabularMixturePolicy final : public DifferentiablePolicy {
public:
    TabularMixturePolicy(FeatureMap fm, MixturePolicyParams params);

    int num_actions() const override { return fm_.num_actions; }
    int param_dim() const override { return 2 * fm_.dim(); }
    std::vector<double> action_probs(int state) const override;
    void accumulate_score(int state, int action, double weight,
                          std::span<double> grad) const override;
    void ascend(std::span<const double> grad, double lr) override;
    std::vector<double> flat_params() const override;
    void set_flat_params(std::span<const double> params) override;

    const MixturePolicyParams& params() const { return params_; }
    MixturePolicyParams& params() { return params_; }
    const FeatureMap& feature_map() const { return fm_; }

private:
    FeatureMap fm_;
    MixturePolicyParams params_;
};

}  // namespace cvarmix
