#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include <featq/io/checkpoint.hpp>

namespace featq {

namespace cfgdetail {

/// Section reader that rejects unknown keys loudly.
class Section {
public:
    Section(const nlohmann::json& j, std::string name)
        : j_(j), name_(std::move(name)) {
        if (!j_.is_object())
            throw InputError("config section '" + name_ + "' must be an object");
    }

    ~Section() = default;

    template <typename T>
    T get(const std::string& key, T fallback) {
        consumed_.insert(key);
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    template <typename T>
    T require(const std::string& key) {
        consumed_.insert(key);
        if (!j_.contains(key))
            throw InputError("config key '" + name_ + "." + key + "' is required");
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    bool has(const std::string& key) {
        consumed_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const nlohmann::json& raw(const std::string& key) {
        consumed_.insert(key);
        return j_.at(key);
    }

    /// Call after all reads: any key never asked about is a config error.
    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!consumed_.count(k))
                throw InputError("unknown config key '" + name_ + "." + k + "'");
    }

private:
    const nlohmann::json& j_;
    std::string name_;
    std::set<std::string> consumed_;
};

} // namespace cfgdetail

struct DataConfig {
    std::string source;       // "idx" | "delimited" | "synth"
    std::string images;       // idx
    std::string image_labels; // idx
    std::string table;        // delimited
    std::string costs;        // delimited (optional)
    std::string label_column = "label";
    char delimiter = ',';
    std::string generator; // synth
    int synth_n = 4000;
    double separation = 1.0;
    std::uint64_t synth_seed = 1;
    std::uint64_t split_seed = 13;
    int limit = 0; // optional cap on loaded instances (0 = all)
};

struct ModelSpecConfig {
    std::vector<int> p_hidden{64, 32};
    std::vector<int> q_own{64, 16};
    bool sharing = true;
    double dropout = 0.5;
    std::string precision = "f64"; // "f32" | "f64"
};

struct EvalConfig {
    std::uint64_t seed = 2;
    int t_test = 100;
    CertaintyMode certainty_mode = CertaintyMode::McDropout;
    double budget = std::numeric_limits<double>::infinity();
    BudgetMode budget_mode = BudgetMode::Overshoot;
    std::vector<double> budget_fractions;
    int samples = 0; // cap on evaluation instances (0 = whole split)
    int order_matrix_samples = 0;
    int calibration_bins = 20;
    std::string split = "test"; // "train" | "validation" | "test"
};

/// Everything a run needs: data, architecture, training, evaluation,
/// output. The echoed form reproduces the run bit for bit.
struct RunConfig {
    DataConfig data;
    ModelSpecConfig model;
    TrainerConfig train;
    long episodes = 1000;
    int repetitions = 3;
    long checkpoint_every = 500;
    int trace_points = 20;
    int trace_samples = 200;
    EvalConfig eval;
    std::string output_dir = "run";
};

inline BudgetMode budget_mode_from_string(const std::string& s) {
    if (s == "overshoot") return BudgetMode::Overshoot;
    if (s == "strict") return BudgetMode::Strict;
    throw InputError("budget mode must be 'overshoot' or 'strict', got '" + s + "'");
}

inline CertaintyMode certainty_mode_from_string(const std::string& s) {
    if (s == "mc") return CertaintyMode::McDropout;
    if (s == "softmax") return CertaintyMode::Softmax;
    throw InputError("certainty mode must be 'mc' or 'softmax', got '" + s + "'");
}

inline RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "certainty") return RewardMode::Certainty;
    if (s == "baseline") return RewardMode::CostPenalty;
    throw InputError("reward mode must be 'certainty' or 'baseline', got '" + s + "'");
}

inline RunConfig run_config_from_json(const nlohmann::json& root) {
    if (!root.is_object()) throw InputError("config root must be an object");
    for (const auto& [k, v] : root.items())
        if (k != "data" && k != "model" && k != "train" && k != "eval" &&
            k != "output")
            throw InputError("unknown config section '" + k + "'");

    RunConfig rc;
    static const nlohmann::json empty = nlohmann::json::object();

    {
        cfgdetail::Section s(root.contains("data") ? root.at("data") : empty, "data");
        rc.data.source = s.get<std::string>("source", "synth");
        rc.data.images = s.get<std::string>("images", "");
        rc.data.image_labels = s.get<std::string>("image_labels", "");
        rc.data.table = s.get<std::string>("table", "");
        rc.data.costs = s.get<std::string>("costs", "");
        rc.data.label_column = s.get<std::string>("label_column", "label");
        const std::string delim = s.get<std::string>("delimiter", ",");
        if (delim.size() != 1)
            throw InputError("config key 'data.delimiter' must be one character");
        rc.data.delimiter = delim[0];
        rc.data.generator = s.get<std::string>("generator", "one-informative");
        rc.data.synth_n = s.get<int>("n", 4000);
        rc.data.separation = s.get<double>("separation", 1.0);
        rc.data.synth_seed = s.get<std::uint64_t>("seed", 1);
        rc.data.split_seed = s.get<std::uint64_t>("split_seed", 13);
        rc.data.limit = s.get<int>("limit", 0);
        s.finish();
    }
    {
        cfgdetail::Section s(root.contains("model") ? root.at("model") : empty,
                             "model");
        rc.model.p_hidden = s.get<std::vector<int>>("p_hidden", {64, 32});
        rc.model.q_own = s.get<std::vector<int>>("q_own", {64, 16});
        rc.model.sharing = s.get<bool>("sharing", true);
        rc.model.dropout = s.get<double>("dropout", 0.5);
        rc.model.precision = s.get<std::string>("precision", "f64");
        if (rc.model.precision != "f32" && rc.model.precision != "f64")
            throw InputError("config key 'model.precision' must be f32 or f64");
        s.finish();
    }
    {
        cfgdetail::Section s(root.contains("train") ? root.at("train") : empty,
                             "train");
        rc.episodes = s.get<long>("episodes", 1000);
        rc.repetitions = s.get<int>("repetitions", 3);
        rc.checkpoint_every = s.get<long>("checkpoint_every", 500);
        rc.trace_points = s.get<int>("trace_points", 20);
        rc.trace_samples = s.get<int>("trace_samples", 200);
        auto& t = rc.train;
        if (s.has("budget")) t.budget = s.get<double>("budget", 0);
        t.budget_mode =
            budget_mode_from_string(s.get<std::string>("budget_mode", "overshoot"));
        t.gamma = s.get<double>("gamma", 0.95);
        t.t_train = s.get<int>("t_train", 1000);
        t.t_test = s.get<int>("t_test", 100);
        t.minibatch = s.get<int>("minibatch", 64);
        t.tau = s.get<double>("tau", 1e-3);
        t.reward_mode =
            reward_mode_from_string(s.get<std::string>("reward", "certainty"));
        t.certainty_mode =
            certainty_mode_from_string(s.get<std::string>("certainty", "mc"));
        t.label_probability = s.get<double>("label_probability", 1.0);
        t.exploration_decay = s.get<double>("exploration_decay", 0.999);
        t.exploration_floor = s.get<double>("exploration_floor", 0.1);
        t.r_correct = s.get<double>("r_correct", 1.0);
        t.p_learning_rate = s.get<double>("p_learning_rate", 1e-3);
        t.q_learning_rate = s.get<double>("q_learning_rate", 1e-3);
        t.replay_capacity_factor = s.get<std::size_t>("replay_factor", 1000);
        t.seed = s.get<std::uint64_t>("seed", 1);
        if (s.has("stop")) {
            cfgdetail::Section ss(s.raw("stop"), "train.stop");
            const std::string kind = ss.get<std::string>("kind", "none");
            const double threshold = ss.get<double>("threshold", 0.9);
            if (kind == "none")
                t.stop = StopPolicy::none();
            else if (kind == "certainty")
                t.stop = StopPolicy::certainty(threshold);
            else
                throw InputError("train.stop.kind must be 'none' or 'certainty'");
            ss.finish();
        }
        s.finish();
    }
    {
        cfgdetail::Section s(root.contains("eval") ? root.at("eval") : empty,
                             "eval");
        auto& e = rc.eval;
        e.seed = s.get<std::uint64_t>("seed", 2);
        e.t_test = s.get<int>("t_test", rc.train.t_test);
        e.certainty_mode =
            certainty_mode_from_string(s.get<std::string>("certainty", "mc"));
        if (s.has("budget")) e.budget = s.get<double>("budget", 0);
        e.budget_mode =
            budget_mode_from_string(s.get<std::string>("budget_mode", "overshoot"));
        e.budget_fractions = s.get<std::vector<double>>("budget_fractions", {});
        e.samples = s.get<int>("samples", 0);
        e.order_matrix_samples = s.get<int>("order_matrix", 0);
        e.calibration_bins = s.get<int>("calibration_bins", 20);
        e.split = s.get<std::string>("split", "test");
        if (e.split != "train" && e.split != "validation" && e.split != "test")
            throw InputError("eval.split must be train, validation, or test");
        s.finish();
    }
    {
        cfgdetail::Section s(root.contains("output") ? root.at("output") : empty,
                             "output");
        rc.output_dir = s.get<std::string>("dir", "run");
        s.finish();
    }
    return rc;
}

inline nlohmann::json run_config_to_json(const RunConfig& rc) {
    nlohmann::json j;
    j["data"] = {{"source", rc.data.source},
                 {"images", rc.data.images},
                 {"image_labels", rc.data.image_labels},
                 {"table", rc.data.table},
                 {"costs", rc.data.costs},
                 {"label_column", rc.data.label_column},
                 {"delimiter", std::string(1, rc.data.delimiter)},
                 {"generator", rc.data.generator},
                 {"n", rc.data.synth_n},
                 {"separation", rc.data.separation},
                 {"seed", rc.data.synth_seed},
                 {"split_seed", rc.data.split_seed},
                 {"limit", rc.data.limit}};
    j["model"] = {{"p_hidden", rc.model.p_hidden},
                  {"q_own", rc.model.q_own},
                  {"sharing", rc.model.sharing},
                  {"dropout", rc.model.dropout},
                  {"precision", rc.model.precision}};
    j["train"] = ckpt::trainer_config_to_json(rc.train);
    j["train"]["episodes"] = rc.episodes;
    j["train"]["repetitions"] = rc.repetitions;
    j["train"]["checkpoint_every"] = rc.checkpoint_every;
    j["train"]["trace_points"] = rc.trace_points;
    j["train"]["trace_samples"] = rc.trace_samples;
    j["eval"] = {
        {"seed", rc.eval.seed},
        {"t_test", rc.eval.t_test},
        {"certainty",
         rc.eval.certainty_mode == CertaintyMode::McDropout ? "mc" : "softmax"},
        {"budget", std::isfinite(rc.eval.budget) ? nlohmann::json(rc.eval.budget)
                                                 : nlohmann::json()},
        {"budget_mode",
         rc.eval.budget_mode == BudgetMode::Overshoot ? "overshoot" : "strict"},
        {"budget_fractions", rc.eval.budget_fractions},
        {"samples", rc.eval.samples},
        {"order_matrix", rc.eval.order_matrix_samples},
        {"calibration_bins", rc.eval.calibration_bins},
        {"split", rc.eval.split}};
    j["output"] = {{"dir", rc.output_dir}};
    return j;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config parse failed: " + std::string(e.what()));
    }
    return run_config_from_json(j);
}

} // namespace featq
