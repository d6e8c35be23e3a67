#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cvarmix {

/// Number of samples in the lower alpha-tail: ceil(alpha * n), computed with
/// a small slack so exact products like 0.2 * 10 do not round up. Every tail
/// consumer (quantile, CVaR, flatness, the policy-gradient tail set) shares
/// this count, which is what makes the zero-gradient/flat-tail equivalence
/// exact.
std::size_t tail_count(double alpha, std::size_t n);

/// Indices of the tail_count(alpha, n) smallest values: everything strictly
/// below the alpha-quantile first, then values equal to it in ascending
/// original-index order. Deterministic under ties.
std::vector<std::size_t> tail_indices(std::span<const double> values, double alpha);

/// The ceil(alpha*N)-th smallest value, the plug-in estimator of
/// q_alpha(Z) = min{z | F(z) >= alpha}. alpha must lie in (0,1], N >= 1.
double empirical_quantile(std::span<const double> values, double alpha);

/// Mean of the ceil(alpha*N) smallest values; equals the sample mean at
/// alpha = 1.
double empirical_cvar(std::span<const double> values, double alpha);

/// Evaluates the dual form max_k k - E[(k - Z)^+] / alpha over a candidate
/// grid and returns (argmax, max). First maximizer wins under value ties.
std::pair<double, double> cvar_dual(std::span<const double> values, double alpha,
                                    std::span<const double> k_grid);

/// Empirical quantile function: (i/N, i-th smallest value) for i = 1..N.
struct QuantileCurve {
    std::vector<std::pair<double, double>> points;

    /// Two-column CSV (probability,value) with a header row.
    std::string to_csv() const;
};

QuantileCurve quantile_curve(std::span<const double> values);

/// True iff all tail_count(alpha, N) smallest values equal the empirical
/// alpha-quantile exactly: the condition under which the CVaR policy-gradient
/// estimator is identically zero.
bool tail_flatness(std::span<const double> values, double alpha);

}  // namespace cvarmix
