#include "cvarmix/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cvarmix/errors.hpp"

namespace cvarmix {

namespace {

constexpr const char* kMagic = "cvarmix-checkpoint v1";

void write_values(std::ostream& out, const char* name, std::span<const double> values) {
    out << name << ' ' << values.size();
    char buf[32];
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out << buf;
    }
    out << '\n';
}

std::vector<double> read_values(std::istream& in, const std::string& expected_name) {
    std::string name;
    std::size_t count = 0;
    if (!(in >> name >> count) || name != expected_name) {
        throw ContractViolation("checkpoint: expected section \"" + expected_name + "\"");
    }
    std::vector<double> values(count);
    for (double& v : values) {
        if (!(in >> v)) throw ContractViolation("checkpoint: truncated value section");
    }
    return values;
}

}  // namespace

std::string Checkpoint::kind() const {
    switch (payload.index()) {
        case 0: return "softmax";
        case 1: return "mixture";
        case 2: return "quantile";
        default: return "quantile_augmented";
    }
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ContractViolation("checkpoint: cannot open " + path.string() + " for write");
    out << kMagic << '\n' << "kind " << kind() << '\n';
    if (const auto* sm = std::get_if<Softmax>(&payload)) {
        out << "shape " << sm->fm.num_states << ' ' << sm->fm.num_actions << '\n';
        write_values(out, "theta", sm->params.theta);
    } else if (const auto* mx = std::get_if<Mixture>(&payload)) {
        out << "shape " << mx->fm.num_states << ' ' << mx->fm.num_actions << '\n';
        write_values(out, "theta1", mx->params.theta1);
        write_values(out, "theta2", mx->params.theta2);
        write_values(out, "risk_neutral", mx->params.risk_neutral.data);
    } else if (const auto* qt = std::get_if<Quantile>(&payload)) {
        out << "shape " << qt->table.num_states << ' ' << qt->table.num_actions << ' '
            << qt->table.quantile_count << '\n';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", qt->alpha);
        out << "alpha " << buf << '\n';
        write_values(out, "quantiles", qt->table.data);
    } else {
        const auto& aq = std::get<QuantileAugmented>(payload);
        out << "shape " << aq.table.base_states << ' ' << aq.table.table.num_actions << ' '
            << aq.table.table.quantile_count << '\n';
        char buf[96];
        std::snprintf(buf, sizeof(buf), "grid %.17g %.17g %d\n", aq.table.grid.lo,
                      aq.table.grid.hi, aq.table.grid.bins);
        out << buf;
        std::snprintf(buf, sizeof(buf), "k0 %.17g\n", aq.k0);
        out << buf;
        write_values(out, "quantiles", aq.table.table.data);
    }
    if (!out) throw DiagnosticError("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("checkpoint: cannot open " + path.string());
    std::string magic;
    std::getline(in, magic);
    if (magic != kMagic) throw ContractViolation("checkpoint: unrecognized header");
    std::string key, kind;
    if (!(in >> key >> kind) || key != "kind") {
        throw ContractViolation("checkpoint: missing kind");
    }

    Checkpoint ckpt;
    if (kind == "softmax" || kind == "mixture") {
        int states = 0, actions = 0;
        if (!(in >> key >> states >> actions) || key != "shape") {
            throw ContractViolation("checkpoint: missing shape");
        }
        const FeatureMap fm{states, actions};
        if (kind == "softmax") {
            Softmax sm{fm, SoftmaxPolicyParams{read_values(in, "theta")}};
            if (static_cast<int>(sm.params.theta.size()) != fm.dim()) {
                throw ContractViolation("checkpoint: theta dimension mismatch");
            }
            ckpt.payload = std::move(sm);
        } else {
            Mixture mx;
            mx.fm = fm;
            mx.params.theta1 = read_values(in, "theta1");
            mx.params.theta2 = read_values(in, "theta2");
            StateActionTable table = StateActionTable::zeros(states, actions);
            table.data = read_values(in, "risk_neutral");
            if (static_cast<int>(table.data.size()) != fm.dim()) {
                throw ContractViolation("checkpoint: risk_neutral dimension mismatch");
            }
            mx.params.risk_neutral = std::move(table);
            mx.params.validate(fm);
            ckpt.payload = std::move(mx);
        }
    } else if (kind == "quantile") {
        int states = 0, actions = 0, m = 0;
        if (!(in >> key >> states >> actions >> m) || key != "shape") {
            throw ContractViolation("checkpoint: missing shape");
        }
        Quantile qt;
        if (!(in >> key >> qt.alpha) || key != "alpha") {
            throw ContractViolation("checkpoint: missing alpha");
        }
        qt.table = QuantileTable::zeros(states, actions, m);
        qt.table.data = read_values(in, "quantiles");
        if (qt.table.data.size() != static_cast<std::size_t>(states) * actions * m) {
            throw ContractViolation("checkpoint: quantile dimension mismatch");
        }
        ckpt.payload = std::move(qt);
    } else if (kind == "quantile_augmented") {
        int states = 0, actions = 0, m = 0;
        if (!(in >> key >> states >> actions >> m) || key != "shape") {
            throw ContractViolation("checkpoint: missing shape");
        }
        QuantileAugmented aq;
        KGrid grid;
        if (!(in >> key >> grid.lo >> grid.hi >> grid.bins) || key != "grid") {
            throw ContractViolation("checkpoint: missing grid");
        }
        if (!(in >> key >> aq.k0) || key != "k0") {
            throw ContractViolation("checkpoint: missing k0");
        }
        aq.table = AugmentedQuantileTable::zeros(states, actions, grid, m);
        aq.table.table.data = read_values(in, "quantiles");
        if (aq.table.table.data.size() !=
            static_cast<std::size_t>(states) * grid.bins * actions * m) {
            throw ContractViolation("checkpoint: quantile dimension mismatch");
        }
        ckpt.payload = std::move(aq);
    } else {
        throw ContractViolation("checkpoint: unknown kind \"" + kind + "\"");
    }
    return ckpt;
}

PolicyFn Checkpoint::policy_fn() const {
    if (const auto* sm = std::get_if<Softmax>(&payload)) {
        const FeatureMap fm = sm->fm;
        const SoftmaxPolicyParams params = sm->params;
        return [fm, params](int state) { return softmax_policy_probs(params, fm, state); };
    }
    if (const auto* mx = std::get_if<Mixture>(&payload)) {
        const FeatureMap fm = mx->fm;
        const MixturePolicyParams params = mx->params;
        return [fm, params](int state) { return mixture_probs(params, fm, state); };
    }
    if (const auto* qt = std::get_if<Quantile>(&payload)) {
        const QuantileTable table = qt->table;
        const double alpha = qt->alpha;
        return [table, alpha](int state) {
            std::vector<double> probs(table.num_actions, 0.0);
            probs[drl_mkv_greedy(table, state, alpha)] = 1.0;
            return probs;
        };
    }
    throw ContractViolation(
        "checkpoint: tracking-variable policies need per-step state, not a PolicyFn");
}

}  // namespace cvarmix
