#include "cvarmix/policy.hpp"

#include <algorithm>
#include <cmath>

#include "cvarmix/errors.hpp"

namespace cvarmix {

namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& p : out) p /= sum;
}

}  // namespace

std::vector<double> softmax_policy_probs(const SoftmaxPolicyParams& params, const FeatureMap& fm,
                                         int state) {
    std::vector<double> probs(fm.num_actions);
    softmax_into({params.theta.data() + fm.block_start(state),
                  static_cast<std::size_t>(fm.num_actions)},
                 probs);
    return probs;
}

std::vector<double> softmax_log_grad(const SoftmaxPolicyParams& params, const FeatureMap& fm,
                                     int state, int action) {
    std::vector<double> grad(fm.dim(), 0.0);
    const std::vector<double> probs = softmax_policy_probs(params, fm, state);
    const int base = fm.block_start(state);
    for (int b = 0; b < fm.num_actions; ++b) grad[base + b] = -probs[b];
    grad[base + action] += 1.0;
    return grad;
}

MixturePolicyParams MixturePolicyParams::zeros(const FeatureMap& fm,
                                               StateActionTable risk_neutral) {
    MixturePolicyParams p;
    p.theta1.assign(fm.dim(), 0.0);
    p.theta2.assign(fm.dim(), 0.0);
    p.risk_neutral = std::move(risk_neutral);
    p.validate(fm);
    return p;
}

void MixturePolicyParams::validate(const FeatureMap& fm) const {
    if (static_cast<int>(theta1.size()) != fm.dim() ||
        static_cast<int>(theta2.size()) != fm.dim()) {
        throw ContractViolation("MixturePolicyParams: parameter dimension mismatch");
    }
    if (risk_neutral.num_states != fm.num_states ||
        risk_neutral.num_actions != fm.num_actions) {
        throw ContractViolation("MixturePolicyParams: risk-neutral table shape mismatch");
    }
    for (int s = 0; s < fm.num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < fm.num_actions; ++a) {
            const double p = risk_neutral.at(s, a);
            if (!(p >= 0.0)) {
                throw ContractViolation("MixturePolicyParams: negative risk-neutral probability");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ContractViolation("MixturePolicyParams: risk-neutral row does not sum to 1");
        }
    }
}

namespace {

/// Per-state mixture quantities shared by probs and gradients.
struct MixtureBlock {
    std::vector<double> adjustable;   // pi'(.|s)
    std::vector<double> weight;       // sigma(theta2[s,.])
    std::vector<double> unnormalized; // sigma*pi' + (1-sigma)*pi_n
    double normalizer = 0.0;          // sum of unnormalized
};

MixtureBlock mixture_block(const MixturePolicyParams& params, const FeatureMap& fm, int state) {
    const int A = fm.num_actions;
    const int base = fm.block_start(state);
    MixtureBlock blk;
    blk.adjustable.resize(A);
    softmax_into({params.theta1.data() + base, static_cast<std::size_t>(A)}, blk.adjustable);
    blk.weight.resize(A);
    blk.unnormalized.resize(A);
    for (int b = 0; b < A; ++b) {
        blk.weight[b] = sigmoid(params.theta2[base + b]);
        blk.unnormalized[b] = blk.weight[b] * blk.adjustable[b] +
                              (1.0 - blk.weight[b]) * params.risk_neutral.at(state, b);
        blk.normalizer += blk.unnormalized[b];
    }
    return blk;
}

}  // namespace

std::vector<double> mixture_probs(const MixturePolicyParams& params, const FeatureMap& fm,
                                  int state) {
    MixtureBlock blk = mixture_block(params, fm, state);
    std::vector<double> probs(fm.num_actions);
    for (int b = 0; b < fm.num_actions; ++b) probs[b] = blk.unnormalized[b] / blk.normalizer;
    return probs;
}

MixtureLogGrad mixture_log_grad(const MixturePolicyParams& params, const FeatureMap& fm, int state,
                                int action) {
    const int A = fm.num_actions;
    const int base = fm.block_start(state);
    const MixtureBlock blk = mixture_block(params, fm, state);
    const double u_a = blk.unnormalized[action];
    if (u_a <= 0.0) {
        throw ContractViolation("mixture_log_grad: pi(a|s) = 0, gradient undefined");
    }

    MixtureLogGrad grad;
    grad.d_theta1.assign(fm.dim(), 0.0);
    grad.d_theta2.assign(fm.dim(), 0.0);

    // log pi(a|s) = log u_a - log Z with u_b = sigma_b pi'_b + (1-sigma_b) n_b.
    // d u_b / d theta1[c] = sigma_b pi'_b (delta_bc - pi'_c)
    // d u_b / d theta2[c] = delta_bc (pi'_b - n_b) sigma_b (1 - sigma_b)
    double weighted_adjustable = 0.0;  // sum_b sigma_b pi'_b
    for (int b = 0; b < A; ++b) weighted_adjustable += blk.weight[b] * blk.adjustable[b];

    const double sa_pa = blk.weight[action] * blk.adjustable[action];
    for (int c = 0; c < A; ++c) {
        double g1 = -sa_pa * blk.adjustable[c] / u_a -
                    blk.adjustable[c] * (blk.weight[c] - weighted_adjustable) / blk.normalizer;
        if (c == action) g1 += sa_pa / u_a;

        const double swing = (blk.adjustable[c] - params.risk_neutral.at(state, c)) *
                             blk.weight[c] * (1.0 - blk.weight[c]);
        double g2 = -swing / blk.normalizer;
        if (c == action) g2 += swing / u_a;

        grad.d_theta1[base + c] = g1;
        grad.d_theta2[base + c] = g2;
    }
    return grad;
}

StateActionTable value_iteration(const ExplicitModel& model, double gamma, double tol,
                                 int max_iterations) {
    const int S = model.num_states();
    const int A = model.num_actions();
    StateActionTable q = StateActionTable::zeros(S, A);
    StateActionTable next = StateActionTable::zeros(S, A);
    std::vector<double> v(S, 0.0);
    for (int iter = 0; iter < max_iterations; ++iter) {
        for (int s = 0; s < S; ++s) {
            v[s] = *std::max_element(q.row(s).begin(), q.row(s).end());
        }
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const auto& outs = model.outcomes(s, a);
                if (outs.empty()) {
                    next.at(s, a) = 0.0;  // terminal or unreachable
                    continue;
                }
                double value = 0.0;
                for (const Outcome& o : outs) {
                    value += o.prob * (o.reward + (o.terminal ? 0.0 : gamma * v[o.next_state]));
                }
                next.at(s, a) = value;
                residual = std::max(residual, std::abs(value - q.at(s, a)));
            }
        }
        std::swap(q.data, next.data);
        if (residual < tol) return q;
    }
    throw DiagnosticError("value_iteration: no convergence within iteration cap");
}

StateActionTable risk_neutral_from_q(const StateActionTable& q, double temperature) {
    if (!(temperature > 0.0)) {
        throw ContractViolation("risk_neutral_from_q: temperature must be positive");
    }
    StateActionTable probs = StateActionTable::zeros(q.num_states, q.num_actions);
    std::vector<double> scaled(q.num_actions);
    for (int s = 0; s < q.num_states; ++s) {
        for (int a = 0; a < q.num_actions; ++a) scaled[a] = q.at(s, a) / temperature;
        softmax_into(scaled, probs.row(s));
    }
    return probs;
}

int greedy_action(const StateActionTable& q, int state) {
    const auto row = q.row(state);
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(FeatureMap fm, SoftmaxPolicyParams params)
    : fm_(fm), params_(std::move(params)) {
    if (static_cast<int>(params_.theta.size()) != fm_.dim()) {
        throw ContractViolation("TabularSoftmaxPolicy: parameter dimension mismatch");
    }
}

TabularSoftmaxPolicy TabularSoftmaxPolicy::zeros(const FeatureMap& fm) {
    return TabularSoftmaxPolicy(fm, SoftmaxPolicyParams{std::vector<double>(fm.dim(), 0.0)});
}

std::vector<double> TabularSoftmaxPolicy::action_probs(int state) const {
    return softmax_policy_probs(params_, fm_, state);
}

void TabularSoftmaxPolicy::accumulate_score(int state, int action, double weight,
                                            std::span<double> grad) const {
    const std::vector<double> probs = action_probs(state);
    const int base = fm_.block_start(state);
    for (int b = 0; b < fm_.num_actions; ++b) grad[base + b] -= weight * probs[b];
    grad[base + action] += weight;
}

void TabularSoftmaxPolicy::ascend(std::span<const double> grad, double lr) {
    for (int i = 0; i < fm_.dim(); ++i) params_.theta[i] += lr * grad[i];
}

void TabularSoftmaxPolicy::set_flat_params(std::span<const double> params) {
    if (static_cast<int>(params.size()) != fm_.dim()) {
        throw ContractViolation("TabularSoftmaxPolicy: parameter dimension mismatch");
    }
    params_.theta.assign(params.begin(), params.end());
}

TabularMixturePolicy::TabularMixturePolicy(FeatureMap fm, MixturePolicyParams params)
    : fm_(fm), params_(std::move(params)) {
    params_.validate(fm_);
}

std::vector<double> TabularMixturePolicy::action_probs(int state) const {
    return mixture_probs(params_, fm_, state);
}

void TabularMixturePolicy::accumulate_score(int state, int action, double weight,
                                            std::span<double> grad) const {
    const MixtureLogGrad g = mixture_log_grad(params_, fm_, state, action);
    const int base = fm_.block_start(state);
    const int dim = fm_.dim();
    for (int b = 0; b < fm_.num_actions; ++b) {
        grad[base + b] += weight * g.d_theta1[base + b];
        grad[dim + base + b] += weight * g.d_theta2[base + b];
    }
}

void TabularMixturePolicy::ascend(std::span<const double> grad, double lr) {
    const int dim = fm_.dim();
    for (int i = 0; i < dim; ++i) {
        params_.theta1[i] += lr * grad[i];
        params_.theta2[i] += lr * grad[dim + i];
    }
}

std::vector<double> TabularMixturePolicy::flat_params() const {
    std::vector<double> flat(params_.theta1);
    flat.insert(flat.end(), params_.theta2.begin(), params_.theta2.end());
    return flat;
}

void TabularMixturePolicy::set_flat_params(std::span<const double> params) {
    const int dim = fm_.dim();
    if (static_cast<int>(params.size()) != 2 * dim) {
        throw ContractViolation("TabularMixturePolicy: parameter dimension mismatch");
    }
    params_.theta1.assign(params.begin(), params.begin() + dim);
    params_.theta2.assign(params.begin() + dim, params.end());
}

}  // namespace cvarmix
