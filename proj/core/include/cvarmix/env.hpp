#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cvarmix/rng.hpp"

namespace cvarmix {

struct GridPos {
    int x = 0;
    int y = 0;
    friend bool operator==(const GridPos&, const GridPos&) = default;
    friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

/// Maze actions, in id order.
enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kMazeActions = 4;

/// Episodic gridworld with one noisy-reward cell. Entering `red` draws the
/// step reward from -1 + red_noise_scale * N(0,1); entering `goal` pays
/// goal_reward and terminates; every other step costs step_reward. Moves into
/// walls or off the grid leave the agent in place (the step still costs).
struct MazeSpec {
    int width = 6;
    int height = 6;
    std::set<GridPos> walls;
    GridPos start{0, 0};
    GridPos goal{4, 5};
    GridPos red{3, 5};
    double step_reward = -1.0;
    double goal_reward = 10.0;
    double red_noise_scale = 30.0;
    int max_episode_len = 100;
    double discount = 0.999;

    /// The benchmark maze: a ring whose short arm (length 9) climbs the left
    /// column and crosses the top through the red cell, and whose long arm
    /// (length 11) runs along the bottom and up the right edge, red-free.
    static MazeSpec canonical();

    /// Parses the ASCII map format (`#` wall, `S` start, `G` goal, `R` red,
    /// `.` free; rows top to bottom). Throws ContractViolation on bad input.
    static MazeSpec from_ascii(const std::string& text);
    std::string to_ascii() const;

    int num_states() const { return width * height; }
    int state_id(GridPos p) const { return p.y * width + p.x; }
    GridPos pos_of(int state) const { return {state % width, state / width}; }
    bool in_bounds(GridPos p) const {
        return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
    }
    bool is_wall(GridPos p) const { return walls.count(p) > 0; }
    bool is_free(GridPos p) const { return in_bounds(p) && !is_wall(p); }

    /// Destination of `action` from `p` with stay-in-place collisions.
    GridPos move(GridPos p, int action) const;

    /// Throws ContractViolation if start/goal/red collide, sit on walls, or
    /// leave the grid.
    void validate() const;
};

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool done = false;
};

struct Trajectory {
    std::vector<Transition> transitions;
    double total_return = 0.0;  // discounted sum of rewards over the episode

    int length() const { return static_cast<int>(transitions.size()); }

    /// Recomputes the discounted return from the stored transitions.
    double recompute_return(double discount) const;
};

enum class PathClass { RiskAverseLong, RedShort, Other };

/// Episodic MDP interface. Implementations are immutable specs; all
/// per-episode state lives in the caller, so instances may be shared freely
/// across concurrent experiment runners.
class Env {
public:
    virtual ~Env() = default;
    virtual int num_states() const = 0;
    virtual int num_actions() const = 0;
    virtual int initial_state() const = 0;
    virtual int max_episode_len() const = 0;
    virtual double discount() const = 0;
    /// One environment step. Throws ContractViolation on terminal/illegal
    /// states or unknown action ids. `done` reflects goal entry only; episode
    /// truncation at the step budget is the runner's job.
    virtual Transition step(int state, int action, Rng& rng) const = 0;
};

class MazeEnv final : public Env {
public:
    explicit MazeEnv(MazeSpec spec);

    int num_states() const override { return spec_.num_states(); }
    int num_actions() const override { return kMazeActions; }
    int initial_state() const override { return spec_.state_id(spec_.start); }
    int max_episode_len() const override { return spec_.max_episode_len; }
    double discount() const override { return spec_.discount; }
    Transition step(int state, int action, Rng& rng) const override;

    const MazeSpec& spec() const { return spec_; }

private:
    MazeSpec spec_;
};

/// One-step two-armed bandit where the risk-neutral and CVaR-optimal actions
/// provably differ: action 0 pays 1 surely, action 1 pays 3 with probability
/// 0.9 and -10 with probability 0.1. E[1] = 1.7 > E[0] = 1 while
/// CVaR_0.1(1) = -10 < CVaR_0.1(0) = 1.
struct RiskyBanditSpec {
    double safe_reward = 1.0;
    double risky_high = 3.0;
    double risky_low = -10.0;
    double risky_low_prob = 0.1;
};

class RiskyBanditEnv final : public Env {
public:
    explicit RiskyBanditEnv(RiskyBanditSpec spec = {}) : spec_(spec) {}

    int num_states() const override { return 1; }
    int num_actions() const override { return 2; }
    int initial_state() const override { return 0; }
    int max_episode_len() const override { return 1; }
    double discount() const override { return 1.0; }
    Transition step(int state, int action, Rng& rng) const override;

    const RiskyBanditSpec& spec() const { return spec_; }

private:
    RiskyBanditSpec spec_;
};

/// Per-state action distribution provider used by the episode runner.
using PolicyFn = std::function<std::vector<double>(int state)>;

/// Rolls out one episode. The policy must return a valid distribution for
/// every state visited (nonnegative, summing to 1 within 1e-9); anything else
/// is a contract violation. Identical (env, policy, seed) triples produce
/// bitwise-identical trajectories.
Trajectory run_episode(const Env& env, const PolicyFn& policy, Rng& rng);

PathClass classify_path(const Trajectory& traj, const MazeSpec& maze);

/// Explicit MDP model: enumerable outcome distributions per (state, action),
/// consumed by value iteration and the exact return-distribution oracle.
struct Outcome {
    double prob = 1.0;
    int next_state = 0;
    double reward = 0.0;
    bool terminal = false;
    /// Scale of an independent standard-normal kick added to `reward` on this
    /// outcome (the maze's red cell). Zero for deterministic rewards.
    double noise_scale = 0.0;
};

class ExplicitModel {
public:
    ExplicitModel(int num_states, int num_actions, int initial_state, double discount,
                  int max_episode_len);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int initial_state() const { return initial_state_; }
    double discount() const { return discount_; }
    int max_episode_len() const { return max_episode_len_; }

    void set_outcomes(int state, int action, std::vector<Outcome> outcomes);
    const std::vector<Outcome>& outcomes(int state, int action) const;

    /// Mean immediate reward of (state, action); noise kicks have zero mean.
    double expected_reward(int state, int action) const;

private:
    int num_states_;
    int num_actions_;
    int initial_state_;
    double discount_;
    int max_episode_len_;
    std::vector<std::vector<Outcome>> table_;  // indexed state * A + action
};

ExplicitModel explicit_model(const MazeSpec& maze);
ExplicitModel explicit_model(const RiskyBanditSpec& bandit);

}  // namespace cvarmix
