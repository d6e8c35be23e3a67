#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cvarmix/env.hpp"
#include "cvarmix/policy.hpp"

namespace cvarmix {

/// Exact atomic return distribution used for brute-force verification.
struct FiniteReturnDistribution {
    struct Atom {
        double value = 0.0;
        double prob = 0.0;
    };
    std::vector<Atom> atoms;  // sorted ascending by value

    double mean() const;
    double total_prob() const;
    /// Throws ContractViolation unless probabilities are nonnegative, sum to
    /// 1 within 1e-9 and values ascend.
    void validate() const;
    std::string to_csv() const;
};

/// Equiprobable discretization of N(0,1) at quantile midpoints
/// Phi^{-1}((i-0.5)/m). Symmetric about zero, which preserves the tail
/// quantiles CVaR checks care about.
struct NoiseGrid {
    std::vector<double> values;

    static NoiseGrid standard(int m = 1001);
    std::size_t size() const { return values.size(); }
};

/// Exhaustively enumerates the discounted-return distribution of a table
/// policy on an explicit model, branching over the noise grid at every noisy
/// outcome. Atoms closer than 1e-12 merge. Throws DiagnosticError when the
/// leaf count would exceed atom_cap.
FiniteReturnDistribution enumerate_returns(const ExplicitModel& model,
                                           const StateActionTable& policy,
                                           const NoiseGrid& noise, int max_len,
                                           std::size_t atom_cap = 1000000);

/// CVaR_alpha as the exact integral of the quantile function of an atomic
/// law: ascending atoms accumulate until mass alpha, splitting the straddling
/// atom fractionally.
double exact_cvar(const FiniteReturnDistribution& dist, double alpha);

/// Central finite differences of a log-probability function, one coordinate
/// at a time. Guards against probability underflow: requires
/// exp(log_prob(params)) > 10 * eps.
std::vector<double> finite_diff_logp(
    const std::function<double(std::span<const double>)>& log_prob,
    std::span<const double> params, double eps);

struct PathLengths {
    int red_path_len = 0;   // shortest start->goal path forced through red
    int safe_path_len = 0;  // shortest start->goal path avoiding red
};

/// BFS path analysis on a maze. Throws DiagnosticError when the goal is
/// unreachable, red is unreachable, or no red-free path exists.
PathLengths bfs_path_lengths(const MazeSpec& maze);

}  // namespace cvarmix
