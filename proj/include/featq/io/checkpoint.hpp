#pragma once

#include <filesystem>
#include <fstream>
#include <type_traits>

#include <json.hpp>

#include <featq/io/artifacts.hpp>
#include <featq/rl/trainer.hpp>

namespace featq {

inline constexpr const char* kCheckpointTag = "featq-ckpt";
inline constexpr int kCheckpointVersion = 1;

template <typename S>
constexpr const char* scalar_name() {
    if constexpr (std::is_same_v<S, float>)
        return "f32";
    else
        return "f64";
}

namespace ckpt {

using nlohmann::json;

template <typename S>
json layer_to_json(const LinearLayer<S>& l) {
    // column-major flattening; exact via double
    std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    return json{{"rows", l.weights.rows()},
                {"cols", l.weights.cols()},
                {"w", std::move(w)},
                {"b", std::move(b)}};
}

template <typename S>
void layer_from_json(const json& j, LinearLayer<S>& l) {
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("w").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
        throw FormatError("checkpoint layer size mismatch");
    l.weights.resize(rows, cols);
    for (Eigen::Index i = 0; i < l.weights.size(); ++i)
        l.weights.data()[i] = static_cast<S>(w[static_cast<std::size_t>(i)]);
    l.bias.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        l.bias(i) = static_cast<S>(b[static_cast<std::size_t>(i)]);
}

template <typename S>
json layers_to_json(const std::vector<LinearLayer<S>>& layers) {
    json arr = json::array();
    for (const auto& l : layers) arr.push_back(layer_to_json(l));
    return arr;
}

template <typename S>
void layers_from_json(const json& arr, std::vector<LinearLayer<S>>& layers) {
    if (!arr.is_array() || arr.size() != layers.size())
        throw FormatError("checkpoint layer count mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i)
        layer_from_json(arr[i], layers[i]);
}

template <typename S>
json gradients_to_json(const Gradients<S>& g) {
    return layers_to_json(g.layers);
}

template <typename S>
void gradients_from_json(const json& j, Gradients<S>& g) {
    layers_from_json(j, g.layers);
}

template <typename S>
json adam_to_json(const AdamState<S>& a) {
    return json{{"step", a.step_count()},
                {"m", gradients_to_json(a.first_moment())},
                {"v", gradients_to_json(a.second_moment())}};
}

template <typename S>
void adam_from_json(const json& j, AdamState<S>& a) {
    a.set_step_count(j.at("step").get<long>());
    gradients_from_json(j.at("m"), a.first_moment());
    gradients_from_json(j.at("v"), a.second_moment());
}

inline json cost_schedule_to_json(const CostSchedule& s) {
    return json{{"groups", s.groups()}, {"costs", s.costs()}};
}

inline CostSchedule cost_schedule_from_json(const json& j) {
    return CostSchedule(j.at("groups").get<std::vector<std::vector<int>>>(),
                        j.at("costs").get<std::vector<double>>());
}

inline json normalizer_to_json(const Normalizer& n) {
    std::vector<double> mu(n.mean().data(), n.mean().data() + n.mean().size());
    std::vector<double> sg(n.sigma().data(), n.sigma().data() + n.sigma().size());
    return json{{"mean", std::move(mu)}, {"sigma", std::move(sg)}};
}

inline Normalizer normalizer_from_json(const json& j) {
    const auto mu = j.at("mean").get<std::vector<double>>();
    const auto sg = j.at("sigma").get<std::vector<double>>();
    Eigen::VectorXd m(static_cast<Eigen::Index>(mu.size()));
    Eigen::VectorXd s(static_cast<Eigen::Index>(sg.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) m(static_cast<Eigen::Index>(i)) = mu[i];
    for (std::size_t i = 0; i < sg.size(); ++i) s(static_cast<Eigen::Index>(i)) = sg[i];
    return Normalizer(std::move(m), std::move(s));
}

inline json stop_to_json(const StopPolicy& sp) {
    return json{{"kind", sp.kind == StopPolicy::Kind::None ? "none" : "certainty"},
                {"threshold", sp.threshold}};
}

inline StopPolicy stop_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "none") return StopPolicy::none();
    if (kind == "certainty")
        return StopPolicy::certainty(j.at("threshold").get<double>());
    throw FormatError("unknown stop policy kind: " + kind);
}

inline json trainer_config_to_json(const TrainerConfig& c) {
    json j;
    j["budget"] = std::isfinite(c.budget) ? json(c.budget) : json();
    j["budget_mode"] =
        c.budget_mode == BudgetMode::Overshoot ? "overshoot" : "strict";
    j["gamma"] = c.gamma;
    j["t_train"] = c.t_train;
    j["t_test"] = c.t_test;
    j["minibatch"] = c.minibatch;
    j["tau"] = c.tau;
    j["reward"] = c.reward_mode == RewardMode::Certainty ? "certainty" : "baseline";
    j["certainty"] =
        c.certainty_mode == CertaintyMode::McDropout ? "mc" : "softmax";
    j["label_probability"] = c.label_probability;
    j["exploration_decay"] = c.exploration_decay;
    j["exploration_floor"] = c.exploration_floor;
    j["r_correct"] = c.r_correct;
    j["stop"] = stop_to_json(c.stop);
    j["p_learning_rate"] = c.p_learning_rate;
    j["q_learning_rate"] = c.q_learning_rate;
    j["replay_factor"] = c.replay_capacity_factor;
    j["seed"] = c.seed;
    return j;
}

inline TrainerConfig trainer_config_from_json(const json& j) {
    TrainerConfig c;
    c.budget = j.at("budget").is_null()
                   ? std::numeric_limits<double>::infinity()
                   : j.at("budget").get<double>();
    c.budget_mode = j.at("budget_mode").get<std::string>() == "strict"
                        ? BudgetMode::Strict
                        : BudgetMode::Overshoot;
    c.gamma = j.at("gamma").get<double>();
    c.t_train = j.at("t_train").get<int>();
    c.t_test = j.at("t_test").get<int>();
    c.minibatch = j.at("minibatch").get<int>();
    c.tau = j.at("tau").get<double>();
    c.reward_mode = j.at("reward").get<std::string>() == "baseline"
                        ? RewardMode::CostPenalty
                        : RewardMode::Certainty;
    c.certainty_mode = j.at("certainty").get<std::string>() == "softmax"
                           ? CertaintyMode::Softmax
                           : CertaintyMode::McDropout;
    c.label_probability = j.at("label_probability").get<double>();
    c.exploration_decay = j.at("exploration_decay").get<double>();
    c.exploration_floor = j.at("exploration_floor").get<double>();
    c.r_correct = j.at("r_correct").get<double>();
    c.stop = stop_from_json(j.at("stop"));
    c.p_learning_rate = j.at("p_learning_rate").get<double>();
    c.q_learning_rate = j.at("q_learning_rate").get<double>();
    c.replay_capacity_factor = j.at("replay_factor").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

template <typename S>
json architecture_to_json(const PQArchitecture<S>& a) {
    return json{{"input_dim", a.input_dim},   {"n_classes", a.n_classes},
                {"n_actions", a.n_actions},   {"p_hidden", a.p_hidden},
                {"q_own", a.q_own},           {"sharing", a.sharing},
                {"p_dropout", static_cast<double>(a.p_dropout)}};
}

template <typename S>
PQArchitecture<S> architecture_from_json(const json& j) {
    PQArchitecture<S> a;
    a.input_dim = j.at("input_dim").get<int>();
    a.n_classes = j.at("n_classes").get<int>();
    a.n_actions = j.at("n_actions").get<int>();
    a.p_hidden = j.at("p_hidden").get<std::vector<int>>();
    a.q_own = j.at("q_own").get<std::vector<int>>();
    a.sharing = j.at("sharing").get<bool>();
    a.p_dropout = static_cast<S>(j.at("p_dropout").get<double>());
    return a;
}

} // namespace ckpt

/// Full trainer state as a JSON document (the in-memory form of the
/// checkpoint; the on-disk form is its MessagePack encoding).
template <typename S>
nlohmann::json trainer_to_json(Trainer<S>& trainer,
                               const nlohmann::json& config_echo,
                               const std::vector<std::string>& feature_names,
                               int n_classes) {
    Trainer<S>& t = trainer;
    nlohmann::json j;
    j["format"] = kCheckpointTag;
    j["version"] = kCheckpointVersion;
    j["scalar"] = scalar_name<S>();
    j["architecture"] = ckpt::architecture_to_json(trainer.model().architecture());
    j["p"] = ckpt::layers_to_json(trainer.model().p().layers());
    j["q"] = ckpt::layers_to_json(trainer.model().q_layers());
    j["target_q"] = ckpt::layers_to_json(trainer.model().target_q_layers());
    j["adam_p"] = ckpt::adam_to_json(t.p_optimizer());
    j["adam_q"] = ckpt::adam_to_json(t.q_optimizer());
    j["trainer_config"] = ckpt::trainer_config_to_json(trainer.config());
    j["schedule"] = ckpt::cost_schedule_to_json(trainer.schedule());
    j["normalizer"] = ckpt::normalizer_to_json(trainer.normalizer());
    j["episodes"] = trainer.episodes();
    j["experiences"] = trainer.experiences();
    j["updates"] = trainer.updates();
    j["skipped_p"] = trainer.skipped_p_updates();
    j["skipped_q"] = trainer.skipped_q_updates();
    j["rng"] = nlohmann::json{{"explore", t.exploration_rng().state()},
                              {"dropout", t.dropout_rng().state()},
                              {"certainty", t.certainty_rng().state()},
                              {"label", t.label_rng().state()},
                              {"replay", t.replay_rng().state()}};
    j["feature_names"] = feature_names;
    j["n_classes"] = n_classes;
    j["config_echo"] = config_echo;
    return j;
}

/// Rebuild a trainer from a checkpoint document. The replay buffer starts
/// empty (its contents are deliberately not persisted); everything else,
/// including RNG streams and optimizer moments, resumes exactly.
template <typename S>
Trainer<S> trainer_from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != kCheckpointTag)
        throw FormatError("not a checkpoint produced by this tool");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version");
    if (j.at("scalar").get<std::string>() != scalar_name<S>())
        throw FormatError("checkpoint scalar type is " +
                          j.at("scalar").get<std::string>() + ", expected " +
                          scalar_name<S>());
    auto arch = ckpt::architecture_from_json<S>(j.at("architecture"));
    PQModel<S> model(arch);
    ckpt::layers_from_json(j.at("p"), model.p().layers());
    ckpt::layers_from_json(j.at("q"), model.q_layers());
    ckpt::layers_from_json(j.at("target_q"), model.target_q_layers());

    Trainer<S> trainer(std::move(model),
                       ckpt::cost_schedule_from_json(j.at("schedule")),
                       ckpt::normalizer_from_json(j.at("normalizer")),
                       ckpt::trainer_config_from_json(j.at("trainer_config")));
    ckpt::adam_from_json(j.at("adam_p"), trainer.p_optimizer());
    ckpt::adam_from_json(j.at("adam_q"), trainer.q_optimizer());
    trainer.restore_counters(j.at("episodes").get<long>(),
                             j.at("experiences").get<long>(),
                             j.at("updates").get<long>());
    const auto& r = j.at("rng");
    trainer.exploration_rng() = Rng::restore(r.at("explore").get<std::string>());
    trainer.dropout_rng() = Rng::restore(r.at("dropout").get<std::string>());
    trainer.certainty_rng() = Rng::restore(r.at("certainty").get<std::string>());
    trainer.label_rng() = Rng::restore(r.at("label").get<std::string>());
    trainer.replay_rng() = Rng::restore(r.at("replay").get<std::string>());
    return trainer;
}

inline void save_checkpoint(const std::filesystem::path& path,
                            const nlohmann::json& doc) {
    const std::vector<std::uint8_t> bytes = nlohmann::json::to_msgpack(doc);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

inline nlohmann::json load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        nlohmann::json j = nlohmann::json::from_msgpack(bytes);
        if (!j.is_object() || !j.contains("format") ||
            j["format"] != kCheckpointTag)
            throw FormatError("not a checkpoint produced by this tool");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("checkpoint decode failed: " + std::string(e.what()),
                          static_cast<std::size_t>(e.byte));
    }
}

/// Metadata view for `inspect`: everything except the parameter payloads.
inline nlohmann::json checkpoint_summary(const nlohmann::json& full) {
    nlohmann::json j = full;
    for (const char* k : {"p", "q", "target_q", "adam_p", "adam_q"})
        if (j.contains(k)) j[k] = "(omitted)";
    if (j.contains("normalizer")) j["normalizer"] = "(omitted)";
    if (j.contains("schedule")) j["schedule"] = "(omitted)";
    return j;
}

} // namespace featq
