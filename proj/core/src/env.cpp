#include "cvarmix/env.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cvarmix/errors.hpp"

namespace cvarmix {

MazeSpec MazeSpec::canonical() {
    MazeSpec m;
    m.walls.clear();
    for (int x = 1; x <= 4; ++x) {
        for (int y = 1; y <= 4; ++y) m.walls.insert({x, y});
    }
    m.start = {0, 0};
    m.red = {3, 5};
    m.goal = {4, 5};
    m.validate();
    return m;
}

void MazeSpec::validate() const {
    auto check_cell = [&](GridPos p, const char* name) {
        if (!in_bounds(p)) {
            throw ContractViolation(std::string("MazeSpec: ") + name + " out of bounds");
        }
        if (is_wall(p)) {
            throw ContractViolation(std::string("MazeSpec: ") + name + " sits on a wall");
        }
    };
    check_cell(start, "start");
    check_cell(goal, "goal");
    check_cell(red, "red");
    if (start == goal || start == red || goal == red) {
        throw ContractViolation("MazeSpec: start, goal and red must be distinct");
    }
    if (max_episode_len <= 0) throw ContractViolation("MazeSpec: max_episode_len must be positive");
    if (discount <= 0.0 || discount > 1.0) {
        throw ContractViolation("MazeSpec: discount must lie in (0,1]");
    }
}

GridPos MazeSpec::move(GridPos p, int action) const {
    static constexpr int dx[kMazeActions] = {0, 0, -1, 1};
    static constexpr int dy[kMazeActions] = {1, -1, 0, 0};
    GridPos q{p.x + dx[action], p.y + dy[action]};
    return is_free(q) ? q : p;
}

MazeSpec MazeSpec::from_ascii(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw ContractViolation("MazeSpec::from_ascii: empty map");
    MazeSpec m;
    m.height = static_cast<int>(rows.size());
    m.width = static_cast<int>(rows.front().size());
    m.walls.clear();
    bool have_start = false, have_goal = false, have_red = false;
    for (int r = 0; r < m.height; ++r) {
        if (static_cast<int>(rows[r].size()) != m.width) {
            throw ContractViolation("MazeSpec::from_ascii: ragged rows");
        }
        const int y = m.height - 1 - r;  // rows are listed top to bottom
        for (int x = 0; x < m.width; ++x) {
            const GridPos p{x, y};
            switch (rows[r][x]) {
                case '#': m.walls.insert(p); break;
                case 'S': m.start = p; have_start = true; break;
                case 'G': m.goal = p; have_goal = true; break;
                case 'R': m.red = p; have_red = true; break;
                case '.': break;
                default:
                    throw ContractViolation(std::string("MazeSpec::from_ascii: bad character '") +
                                            rows[r][x] + "'");
            }
        }
    }
    if (!have_start || !have_goal || !have_red) {
        throw ContractViolation("MazeSpec::from_ascii: map must mark S, G and R");
    }
    m.validate();
    return m;
}

std::string MazeSpec::to_ascii() const {
    std::string out;
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            const GridPos p{x, y};
            char c = '.';
            if (is_wall(p)) c = '#';
            else if (p == start) c = 'S';
            else if (p == goal) c = 'G';
            else if (p == red) c = 'R';
            out.push_back(c);
        }
        out.push_back('\n');
    }
    return out;
}

double Trajectory::recompute_return(double discount) const {
    double acc = 0.0;
    double weight = 1.0;
    for (const Transition& t : transitions) {
        acc += weight * t.reward;
        weight *= discount;
    }
    return acc;
}

MazeEnv::MazeEnv(MazeSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Transition MazeEnv::step(int state, int action, Rng& rng) const {
    if (state < 0 || state >= spec_.num_states()) {
        throw ContractViolation("MazeEnv::step: unknown state id");
    }
    const GridPos p = spec_.pos_of(state);
    if (!spec_.is_free(p)) throw ContractViolation("MazeEnv::step: state is a wall cell");
    if (p == spec_.goal) throw ContractViolation("MazeEnv::step: state is terminal");
    if (action < 0 || action >= kMazeActions) {
        throw ContractViolation("MazeEnv::step: unknown action id");
    }

    const GridPos q = spec_.move(p, action);
    Transition t;
    t.state = state;
    t.action = action;
    t.next_state = spec_.state_id(q);
    if (q == spec_.goal) {
        t.reward = spec_.goal_reward;
        t.done = true;
    } else if (q == spec_.red) {
        t.reward = spec_.step_reward + spec_.red_noise_scale * rng.next_normal();
        t.done = false;
    } else {
        t.reward = spec_.step_reward;
        t.done = false;
    }
    return t;
}

Transition RiskyBanditEnv::step(int state, int action, Rng& rng) const {
    if (state != 0) throw ContractViolation("RiskyBanditEnv::step: unknown state id");
    if (action != 0 && action != 1) {
        throw ContractViolation("RiskyBanditEnv::step: unknown action id");
    }
    Transition t;
    t.state = 0;
    t.action = action;
    t.next_state = 0;
    t.done = true;
    if (action == 0) {
        t.reward = spec_.safe_reward;
    } else {
        t.reward = rng.next_double() < spec_.risky_low_prob ? spec_.risky_low : spec_.risky_high;
    }
    return t;
}

Trajectory run_episode(const Env& env, const PolicyFn& policy, Rng& rng) {
    Trajectory traj;
    int state = env.initial_state();
    const double gamma = env.discount();
    double weight = 1.0;
    for (int t = 0; t < env.max_episode_len(); ++t) {
        const std::vector<double> probs = policy(state);
        if (static_cast<int>(probs.size()) != env.num_actions()) {
            throw ContractViolation("run_episode: policy returned wrong arity");
        }
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw ContractViolation("run_episode: negative action probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ContractViolation("run_episode: action distribution does not sum to 1");
        }
        const int action = static_cast<int>(rng.sample_discrete(probs));
        Transition tr = env.step(state, action, rng);
        traj.total_return += weight * tr.reward;
        weight *= gamma;
        state = tr.next_state;
        const bool out_of_budget = (t + 1 == env.max_episode_len());
        if (tr.done || out_of_budget) {
            tr.done = true;
            traj.transitions.push_back(tr);
            break;
        }
        traj.transitions.push_back(tr);
    }
    return traj;
}

PathClass classify_path(const Trajectory& traj, const MazeSpec& maze) {
    const int goal_id = maze.state_id(maze.goal);
    const int red_id = maze.state_id(maze.red);
    bool reached_goal = false;
    bool visited_red = false;
    for (const Transition& t : traj.transitions) {
        if (t.state == red_id || t.next_state == red_id) visited_red = true;
        if (t.next_state == goal_id) reached_goal = true;
    }
    if (reached_goal && visited_red) return PathClass::RedShort;
    if (reached_goal && !visited_red && traj.length() <= 14) return PathClass::RiskAverseLong;
    return PathClass::Other;
}

ExplicitModel::ExplicitModel(int num_states, int num_actions, int initial_state, double discount,
                             int max_episode_len)
    : num_states_(num_states),
      num_actions_(num_actions),
      initial_state_(initial_state),
      discount_(discount),
      max_episode_len_(max_episode_len),
      table_(static_cast<std::size_t>(num_states) * num_actions) {}

void ExplicitModel::set_outcomes(int state, int action, std::vector<Outcome> outcomes) {
    table_[static_cast<std::size_t>(state) * num_actions_ + action] = std::move(outcomes);
}

const std::vector<Outcome>& ExplicitModel::outcomes(int state, int action) const {
    return table_[static_cast<std::size_t>(state) * num_actions_ + action];
}

double ExplicitModel::expected_reward(int state, int action) const {
    const auto& outs = outcomes(state, action);
    return std::accumulate(outs.begin(), outs.end(), 0.0,
                           [](double acc, const Outcome& o) { return acc + o.prob * o.reward; });
}

ExplicitModel explicit_model(const MazeSpec& maze) {
    ExplicitModel model(maze.num_states(), kMazeActions, maze.state_id(maze.start),
                        maze.discount, maze.max_episode_len);
    for (int s = 0; s < maze.num_states(); ++s) {
        const GridPos p = maze.pos_of(s);
        if (!maze.is_free(p) || p == maze.goal) continue;  // unreachable or terminal
        for (int a = 0; a < kMazeActions; ++a) {
            const GridPos q = maze.move(p, a);
            Outcome o;
            o.prob = 1.0;
            o.next_state = maze.state_id(q);
            if (q == maze.goal) {
                o.reward = maze.goal_reward;
                o.terminal = true;
            } else if (q == maze.red) {
                o.reward = maze.step_reward;
                o.noise_scale = maze.red_noise_scale;
            } else {
                o.reward = maze.step_reward;
            }
            model.set_outcomes(s, a, {o});
        }
    }
    return model;
}

ExplicitModel explicit_model(const RiskyBanditSpec& bandit) {
    ExplicitModel model(1, 2, 0, 1.0, 1);
    model.set_outcomes(0, 0, {{1.0, 0, bandit.safe_reward, true, 0.0}});
    model.set_outcomes(0, 1, {{1.0 - bandit.risky_low_prob, 0, bandit.risky_high, true, 0.0},
                              {bandit.risky_low_prob, 0, bandit.risky_low, true, 0.0}});
    return model;
}

}  // namespace cvarmix
