#include "cvarmix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>

#include "cvarmix/errors.hpp"
#include "cvarmix/rng.hpp"

namespace cvarmix {

double FiniteReturnDistribution::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms) m += a.prob * a.value;
    return m;
}

double FiniteReturnDistribution::total_prob() const {
    double p = 0.0;
    for (const Atom& a : atoms) p += a.prob;
    return p;
}

void FiniteReturnDistribution::validate() const {
    double sum = 0.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (const Atom& a : atoms) {
        if (!(a.prob >= 0.0)) throw ContractViolation("FiniteReturnDistribution: negative prob");
        if (a.value < prev) throw ContractViolation("FiniteReturnDistribution: atoms not sorted");
        prev = a.value;
        sum += a.prob;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ContractViolation("FiniteReturnDistribution: probabilities do not sum to 1");
    }
}

std::string FiniteReturnDistribution::to_csv() const {
    std::string out = "value,probability\n";
    char buf[64];
    for (const Atom& a : atoms) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", a.value, a.prob);
        out += buf;
    }
    return out;
}

NoiseGrid NoiseGrid::standard(int m) {
    if (m <= 0) throw ContractViolation("NoiseGrid: m must be positive");
    NoiseGrid grid;
    grid.values.resize(m);
    for (int i = 1; i <= m; ++i) {
        grid.values[i - 1] = inverse_normal_cdf((i - 0.5) / static_cast<double>(m));
    }
    return grid;
}

namespace {

struct Leaf {
    int state;
    int depth;
    double prob;
    double value;
    double weight;  // gamma^depth
};

}  // namespace

FiniteReturnDistribution enumerate_returns(const ExplicitModel& model,
                                           const StateActionTable& policy,
                                           const NoiseGrid& noise, int max_len,
                                           std::size_t atom_cap) {
    if (policy.num_states != model.num_states() || policy.num_actions != model.num_actions()) {
        throw ContractViolation("enumerate_returns: policy shape mismatch");
    }
    const double gamma = model.discount();
    std::vector<FiniteReturnDistribution::Atom> leaves;
    std::deque<Leaf> frontier;
    frontier.push_back({model.initial_state(), 0, 1.0, 0.0, 1.0});

    auto emit = [&](double value, double prob) {
        leaves.push_back({value, prob});
        if (leaves.size() > atom_cap) {
            throw DiagnosticError(
                "enumerate_returns: atom cap exceeded; use a smaller noise grid or a "
                "deterministic policy");
        }
    };

    while (!frontier.empty()) {
        const Leaf node = frontier.front();
        frontier.pop_front();
        if (node.depth >= max_len) {
            emit(node.value, node.prob);
            continue;
        }
        for (int a = 0; a < model.num_actions(); ++a) {
            const double pa = policy.at(node.state, a);
            if (pa == 0.0) continue;
            for (const Outcome& o : model.outcomes(node.state, a)) {
                const double branch_prob = node.prob * pa * o.prob;
                if (o.noise_scale > 0.0) {
                    const double atom_prob = branch_prob / static_cast<double>(noise.size());
                    for (double z : noise.values) {
                        const double value =
                            node.value + node.weight * (o.reward + o.noise_scale * z);
                        if (o.terminal) {
                            emit(value, atom_prob);
                        } else {
                            frontier.push_back({o.next_state, node.depth + 1, atom_prob, value,
                                                node.weight * gamma});
                        }
                        if (frontier.size() + leaves.size() > atom_cap) {
                            throw DiagnosticError(
                                "enumerate_returns: atom cap exceeded; use a smaller noise grid "
                                "or a deterministic policy");
                        }
                    }
                } else {
                    const double value = node.value + node.weight * o.reward;
                    if (o.terminal) {
                        emit(value, branch_prob);
                    } else {
                        frontier.push_back(
                            {o.next_state, node.depth + 1, branch_prob, value, node.weight * gamma});
                        if (frontier.size() + leaves.size() > atom_cap) {
                            throw DiagnosticError(
                                "enumerate_returns: atom cap exceeded; use a smaller noise grid "
                                "or a deterministic policy");
                        }
                    }
                }
            }
        }
    }

    std::sort(leaves.begin(), leaves.end(),
              [](const auto& a, const auto& b) { return a.value < b.value; });
    FiniteReturnDistribution dist;
    for (const auto& leaf : leaves) {
        if (!dist.atoms.empty() && leaf.value - dist.atoms.back().value < 1e-12) {
            dist.atoms.back().prob += leaf.prob;
        } else {
            dist.atoms.push_back(leaf);
        }
    }
    return dist;
}

double exact_cvar(const FiniteReturnDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ContractViolation("exact_cvar: alpha must lie in (0,1]");
    }
    dist.validate();
    double acc = 0.0;
    double sum = 0.0;
    for (const auto& atom : dist.atoms) {
        const double take = std::min(atom.prob, alpha - acc);
        if (take <= 0.0) break;
        sum += take * atom.value;
        acc += take;
        if (acc >= alpha) break;
    }
    return sum / alpha;
}

std::vector<double> finite_diff_logp(
    const std::function<double(std::span<const double>)>& log_prob,
    std::span<const double> params, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("finite_diff_logp: eps must be positive");
    std::vector<double> x(params.begin(), params.end());
    const double base_prob = std::exp(log_prob(x));
    if (!(base_prob > 10.0 * eps)) {
        throw DiagnosticError("finite_diff_logp: probability too close to zero for stable "
                              "central differences");
    }
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = log_prob(x);
        x[i] = saved - eps;
        const double down = log_prob(x);
        x[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

namespace {

/// Shortest path length between two cells, never stepping on `banned` cells
/// (endpoints excepted) and never passing through `transit_ban` mid-path.
int bfs_distance(const MazeSpec& maze, GridPos src, GridPos dst,
                 const GridPos* transit_ban) {
    if (src == dst) return 0;
    std::vector<int> dist(maze.num_states(), -1);
    std::queue<GridPos> queue;
    dist[maze.state_id(src)] = 0;
    queue.push(src);
    while (!queue.empty()) {
        const GridPos u = queue.front();
        queue.pop();
        for (int a = 0; a < kMazeActions; ++a) {
            const GridPos v = maze.move(u, a);
            if (v == u) continue;
            if (dist[maze.state_id(v)] != -1) continue;
            if (transit_ban && v == *transit_ban && !(v == dst)) continue;
            dist[maze.state_id(v)] = dist[maze.state_id(u)] + 1;
            if (v == dst) return dist[maze.state_id(v)];
            queue.push(v);
        }
    }
    return -1;
}

}  // namespace

PathLengths bfs_path_lengths(const MazeSpec& maze) {
    maze.validate();
    const int direct = bfs_distance(maze, maze.start, maze.goal, nullptr);
    if (direct < 0) throw DiagnosticError("bfs_path_lengths: goal unreachable from start");

    // Shortest path through red: start->red (not crossing the absorbing
    // goal), then red->goal.
    const int to_red = bfs_distance(maze, maze.start, maze.red, &maze.goal);
    if (to_red < 0) throw DiagnosticError("bfs_path_lengths: red unreachable from start");
    const int red_to_goal = bfs_distance(maze, maze.red, maze.goal, nullptr);
    if (red_to_goal < 0) throw DiagnosticError("bfs_path_lengths: goal unreachable from red");

    const int safe = bfs_distance(maze, maze.start, maze.goal, &maze.red);
    if (safe < 0) {
        throw DiagnosticError("bfs_path_lengths: no red-free path from start to goal");
    }
    return {to_red + red_to_goal, safe};
}

}  // namespace cvarmix
