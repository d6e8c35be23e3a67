#include "cvarmix/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include "cvarmix/errors.hpp"

namespace cvarmix {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ContractViolation("inverse_normal_cdf: p must lie in (0,1)");
    }
    static const boost::math::normal_distribution<double> unit_normal(0.0, 1.0);
    return boost::math::quantile(unit_normal, p);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw ContractViolation("Rng::next_below: n must be positive");
    const std::uint64_t threshold = (-n) % n;  // (2^64 - n) mod n
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) return r % n;
    }
}

std::size_t Rng::sample_discrete(std::span<const double> probs) {
    const double u = next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;  // guard against accumulated rounding
}

}  // namespace cvarmix
