#pragma once

#include <filesystem>
#include <variant>

#include "cvarmix/distributional.hpp"
#include "cvarmix/policy.hpp"

namespace cvarmix {

/// Everything the training drivers can persist. Text format with exact
/// round-tripping doubles; the header names the policy kind and dimensions.
struct Checkpoint {
    struct Softmax {
        FeatureMap fm;
        SoftmaxPolicyParams params;
    };
    struct Mixture {
        FeatureMap fm;
        MixturePolicyParams params;
    };
    struct Quantile {
        QuantileTable table;
        double alpha = 0.1;  // action-selection risk level
    };
    struct QuantileAugmented {
        AugmentedQuantileTable table;
        double k0 = 0.0;
    };

    std::variant<Softmax, Mixture, Quantile, QuantileAugmented> payload;

    std::string kind() const;
    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    /// Action-distribution provider for rollouts. Quantile checkpoints act
    /// greedily (deterministic distributions).
    PolicyFn policy_fn() const;
};

}  // namespace cvarmix
