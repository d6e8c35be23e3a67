#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cvarmix {

/// Derives the seed for a named consumer stream from a master seed.
///
/// SplitMix64 evaluated at counter position `stream`: adding a consumer never
/// perturbs the seeds handed to existing consumers, so experiment outputs stay
/// stable when new streams are introduced.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Stream ids for the per-seed experiment workers. Fixed; append only.
enum class Stream : std::uint64_t {
    Environment = 0,   // reward noise + action sampling during episodes
    PolicyInit = 1,    // reserved for randomized parameter initialization
    Buffer = 2,        // replay buffer sampling
    Exploration = 3,   // epsilon-greedy draws of the distributional learners
    Evaluation = 4,    // greedy evaluation rollouts (k re-estimation)
};

/// Quantile function of the standard normal distribution.
double inverse_normal_cdf(double p);

/// Deterministic random stream: a std::mt19937_64 engine (bit-exact across
/// platforms per the standard) with hand-rolled distributions, since the
/// standard library's distribution implementations are not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1): never returns an endpoint, safe for quantile maps.
    double next_double_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the inverse-CDF map; one engine draw per variate.
    double next_normal() { return inverse_normal_cdf(next_double_open()); }

    /// Uniform integer in [0, n). Rejection sampling, exactly uniform.
    std::uint64_t next_below(std::uint64_t n);

    /// Samples an index from an unnormalized-tolerant discrete distribution
    /// by inverse-CDF walk. The caller is responsible for validity checks.
    std::size_t sample_discrete(std::span<const double> probs);

private:
    std::mt19937_64 engine_;
};

}  // namespace cvarmix
