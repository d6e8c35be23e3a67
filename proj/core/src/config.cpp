#include "cvarmix/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "cvarmix/errors.hpp"

namespace cvarmix {

using nlohmann::json;

std::string to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::Maze: return "maze";
        case EnvKind::RiskyBandit: return "risky_bandit";
    }
    return "?";
}

std::string to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::Reinforce: return "reinforce";
        case AlgorithmKind::CvarPg: return "cvar_pg";
        case AlgorithmKind::MixPrecomputed: return "mix_precomputed";
        case AlgorithmKind::MixIql: return "mix_iql";
        case AlgorithmKind::DrlMkv: return "drl_mkv";
        case AlgorithmKind::DrlLim: return "drl_lim";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ContractViolation("config: \"alpha\" must lie in (0,1]");
    }
    if (batch_episodes <= 0) {
        throw ContractViolation("config: \"batch_episodes\" must be positive");
    }
    if (static_cast<double>(batch_episodes) * alpha < 1.0 - 1e-9) {
        throw ContractViolation("config: \"batch_episodes\" * \"alpha\" must be >= 1");
    }
    if (batches < 0) throw ContractViolation("config: \"batches\" must be >= 0");
    if (iql_frequency <= 0) throw ContractViolation("config: \"iql_frequency\" must be positive");
    for (const auto& [name, rate] :
         {std::pair<const char*, double>{"learning_rate", learning_rate},
          {"value_learning_rate", value_learning_rate},
          {"iql_learning_rate", iql_learning_rate},
          {"quantile_learning_rate", quantile_learning_rate}}) {
        if (!(rate > 0.0)) {
            throw ContractViolation(std::string("config: \"") + name + "\" must be positive");
        }
    }
    if (quantile_count <= 0) throw ContractViolation("config: \"quantile_count\" must be positive");
    if (!(expectile > 0.0 && expectile < 1.0)) {
        throw ContractViolation("config: \"expectile\" must lie in (0,1)");
    }
    if (awr_beta < 0.0) throw ContractViolation("config: \"awr_beta\" must be >= 0");
    if (!(softmax_temperature > 0.0)) {
        throw ContractViolation("config: \"softmax_temperature\" must be positive");
    }
    if (curriculum) {
        if (curriculum->alpha_start < curriculum->alpha_target) {
            throw ContractViolation(
                "config: \"curriculum.alpha_start\" must be >= the target alpha");
        }
        if (!(curriculum->alpha_start <= 1.0)) {
            throw ContractViolation("config: \"curriculum.alpha_start\" must be <= 1");
        }
        if (curriculum->anneal_batches < 0) {
            throw ContractViolation("config: \"curriculum.anneal_batches\" must be >= 0");
        }
    }
    if (seeds.empty()) throw ContractViolation("config: \"seeds\" must be nonempty");
}

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& reason) {
    throw ContractViolation("config: \"" + path + "\" " + reason);
}

double get_number(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) bad_key(key, "must be a number");
    return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key) {
    if (!j.at(key).is_number_integer()) bad_key(key, "must be an integer");
    return j.at(key).get<int>();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ContractViolation(std::string("config: malformed JSON document: ") + e.what());
    }
    if (!doc.is_object()) throw ContractViolation("config: document must be a JSON object");

    static const std::set<std::string> known = {
        "env",           "algorithm",        "alpha",
        "batch_episodes", "batches",          "iql_frequency",
        "iql_sample_size", "learning_rate",   "value_learning_rate",
        "iql_learning_rate", "quantile_learning_rate", "quantile_count",
        "expectile",     "awr_beta",         "softmax_temperature",
        "curriculum",    "seeds",            "output_dir"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) bad_key(key, "is not a recognized configuration key");
    }
    for (const char* required : {"env", "algorithm", "batches"}) {
        if (!doc.contains(required)) {
            throw ContractViolation(std::string("config: missing required key \"") + required +
                                    "\"");
        }
    }

    ExperimentConfig cfg;
    const std::string env = doc.at("env").get<std::string>();
    if (env == "maze") cfg.env = EnvKind::Maze;
    else if (env == "risky_bandit") cfg.env = EnvKind::RiskyBandit;
    else bad_key("env", "must be \"maze\" or \"risky_bandit\"");

    const std::string algo = doc.at("algorithm").get<std::string>();
    if (algo == "reinforce") cfg.algorithm = AlgorithmKind::Reinforce;
    else if (algo == "cvar_pg") cfg.algorithm = AlgorithmKind::CvarPg;
    else if (algo == "mix_precomputed") cfg.algorithm = AlgorithmKind::MixPrecomputed;
    else if (algo == "mix_iql") cfg.algorithm = AlgorithmKind::MixIql;
    else if (algo == "drl_mkv") cfg.algorithm = AlgorithmKind::DrlMkv;
    else if (algo == "drl_lim") cfg.algorithm = AlgorithmKind::DrlLim;
    else bad_key("algorithm", "is not a recognized algorithm name");

    cfg.batches = get_int(doc, "batches");
    if (doc.contains("alpha")) cfg.alpha = get_number(doc, "alpha");
    if (doc.contains("batch_episodes")) cfg.batch_episodes = get_int(doc, "batch_episodes");
    if (doc.contains("iql_frequency")) cfg.iql_frequency = get_int(doc, "iql_frequency");
    if (doc.contains("iql_sample_size")) {
        const int n = get_int(doc, "iql_sample_size");
        if (n <= 0) bad_key("iql_sample_size", "must be positive");
        cfg.iql_sample_size = static_cast<std::size_t>(n);
    }
    if (doc.contains("learning_rate")) cfg.learning_rate = get_number(doc, "learning_rate");
    cfg.value_learning_rate = 10.0 * cfg.learning_rate;
    if (doc.contains("value_learning_rate")) {
        cfg.value_learning_rate = get_number(doc, "value_learning_rate");
    }
    if (doc.contains("iql_learning_rate")) {
        cfg.iql_learning_rate = get_number(doc, "iql_learning_rate");
    }
    if (doc.contains("quantile_learning_rate")) {
        cfg.quantile_learning_rate = get_number(doc, "quantile_learning_rate");
    }
    if (doc.contains("quantile_count")) cfg.quantile_count = get_int(doc, "quantile_count");
    if (doc.contains("expectile")) cfg.expectile = get_number(doc, "expectile");
    if (doc.contains("awr_beta")) cfg.awr_beta = get_number(doc, "awr_beta");
    if (doc.contains("softmax_temperature")) {
        cfg.softmax_temperature = get_number(doc, "softmax_temperature");
    }
    if (doc.contains("curriculum")) {
        const json& cur = doc.at("curriculum");
        if (!cur.is_object()) bad_key("curriculum", "must be an object");
        for (const auto& [key, value] : cur.items()) {
            if (key != "alpha_start" && key != "anneal_batches") {
                bad_key("curriculum." + key, "is not a recognized configuration key");
            }
        }
        AlphaSchedule sched;
        sched.alpha_target = cfg.alpha;
        if (cur.contains("alpha_start")) sched.alpha_start = cur.at("alpha_start").get<double>();
        if (cur.contains("anneal_batches")) {
            sched.anneal_batches = cur.at("anneal_batches").get<int>();
        }
        cfg.curriculum = sched;
    }
    if (doc.contains("seeds")) {
        if (!doc.at("seeds").is_array()) bad_key("seeds", "must be an array of integers");
        cfg.seeds.clear();
        for (const auto& s : doc.at("seeds")) {
            if (!s.is_number_integer()) bad_key("seeds", "must contain only integers");
            cfg.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (doc.contains("output_dir")) {
        cfg.output_dir = doc.at("output_dir").get<std::string>();
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ContractViolation("config: cannot open file " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace cvarmix
