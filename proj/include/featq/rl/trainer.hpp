#pragma once

#include <featq/data/normalizer.hpp>
#include <featq/model/pq_model.hpp>
#include <featq/rl/exploration.hpp>
#include <featq/rl/masked_sample.hpp>
#include <featq/rl/replay.hpp>
#include <featq/rl/reward.hpp>

namespace featq {

enum class RewardMode { Certainty, CostPenalty };
enum class BudgetMode { Overshoot, Strict };

/// Episode termination beyond budget exhaustion and running out of groups.
struct StopPolicy {
    enum class Kind { None, CertaintyThreshold };
    Kind kind = Kind::None;
    double threshold = 0.9;

    static StopPolicy none() { return {}; }
    static StopPolicy certainty(double threshold) {
        if (!(threshold > 0.0) || threshold > 1.0)
            throw InputError("certainty stop threshold must lie in (0, 1]");
        return {Kind::CertaintyThreshold, threshold};
    }
};

struct TrainerConfig {
    double budget = std::numeric_limits<double>::infinity();
    BudgetMode budget_mode = BudgetMode::Overshoot;
    double gamma = 0.95;
    int t_train = 1000; // stochastic passes per training-time certainty
    int t_test = 100;   // stochastic passes per final prediction
    int minibatch = 64;
    double tau = 1e-3;
    RewardMode reward_mode = RewardMode::Certainty;
    CertaintyMode certainty_mode = CertaintyMode::McDropout;
    double label_probability = 1.0;
    double exploration_decay = 0.999;
    double exploration_floor = 0.1;
    double r_correct = 1.0;
    StopPolicy stop;
    double p_learning_rate = 1e-3;
    double q_learning_rate = 1e-3;
    std::size_t replay_capacity_factor = 1000; // capacity = factor * n_features
    std::uint64_t seed = 0;

    void validate() const {
        if (!(budget >= 0)) throw InputError("budget must be >= 0");
        if (gamma < 0 || gamma > 1) throw InputError("gamma must lie in [0, 1]");
        if (t_train < 1 || t_test < 1)
            throw InputError("certainty sample counts must be >= 1");
        if (minibatch < 1) throw InputError("minibatch must be >= 1");
        if (tau < 0 || tau > 1) throw InputError("tau must lie in [0, 1]");
        if (label_probability < 0 || label_probability > 1)
            throw InputError("label probability must lie in [0, 1]");
        if (replay_capacity_factor == 0)
            throw InputError("replay capacity factor must be positive");
    }
};

struct EpisodeOutcome {
    long episode = 0; // 1-based index of this episode
    double cost = 0;
    int steps = 0;
    int prediction = -1;
    int label = -1; // -1 when unavailable
    bool labeled = false;
    bool correct = false;
    double final_max_certainty = 0;
    std::vector<AcquisitionEvent> order;
    int updates_run = 0;
};

struct TrainStepReport {
    bool ran = false;
    double p_loss = 0;
    double q_loss = 0;
    bool p_skipped = false;
    bool q_skipped = false;
};

/// Bellman regression target for one experience: r alone at terminal
/// transitions or when no group remains unowned afterwards, otherwise
/// r + gamma * max over still-unowned groups of the target values.
inline double q_target(const Eigen::Ref<const Eigen::VectorXd>& target_values,
                       double reward, bool terminal,
                       const std::vector<std::uint8_t>& owned_after_mask,
                       double gamma) {
    if (target_values.size() != static_cast<Eigen::Index>(owned_after_mask.size()))
        throw ShapeError("q_target: one value and owned flag per group");
    if (terminal) return reward;
    bool any = false;
    double best = 0;
    for (Eigen::Index g = 0; g < target_values.size(); ++g) {
        if (owned_after_mask[g]) continue;
        if (!any || target_values(g) > best) {
            best = target_values(g);
            any = true;
        }
    }
    return any ? reward + gamma * best : reward;
}

/// Joint online trainer for the predictor and action-value networks.
///
/// Episodes follow the acquisition loop: decay exploration, hand out free
/// groups, then repeatedly pick a group epsilon-greedily, pay its cost, and
/// record the transition with its certainty-change (or cost-penalty) reward
/// in a temporary buffer. When the episode's label is available the buffer
/// is pushed into replay, otherwise discarded. Every
/// floor(1 + n_features/100) gathered experiences (a global counter checked
/// inside the loop), one joint update runs: P minimizes cross-entropy with
/// dropout on all replayed before-views, Q regresses its Bellman targets
/// from the target network, and the target softly tracks Q.
///
/// Randomness is split into named substreams derived from the seed
/// (exploration, dropout, certainty, labels, replay sampling), so a
/// perturbation in one concern never shifts another stream.
template <typename S>
class Trainer {
public:
    Trainer(PQModel<S> model, CostSchedule schedule, Normalizer normalizer,
            TrainerConfig cfg)
        : model_(std::move(model)), sched_(std::move(schedule)),
          norm_(std::move(normalizer)), cfg_(cfg),
          replay_(cfg.replay_capacity_factor *
                  static_cast<std::size_t>(sched_.n_features())),
          explore_(cfg.exploration_decay, cfg.exploration_floor),
          rng_explore_(Rng(cfg.seed).derive(0xE1)),
          rng_dropout_(Rng(cfg.seed).derive(0xD2)),
          rng_cert_(Rng(cfg.seed).derive(0xC3)),
          rng_label_(Rng(cfg.seed).derive(0xA4)),
          rng_replay_(Rng(cfg.seed).derive(0xB5)) {
        cfg_.validate();
        const auto& arch = model_.architecture();
        if (arch.input_dim != sched_.n_features())
            throw ShapeError("model input dim does not match feature count");
        if (arch.n_actions != sched_.n_groups())
            throw ShapeError("model action count does not match group count");
        if (norm_.dim() != sched_.n_features())
            throw ShapeError("normalizer does not match feature count");
        if (sched_.n_features() > 65535)
            throw InputError("more than 65535 features not supported");
        AdamConfig<S> pa, qa;
        pa.learning_rate = static_cast<S>(cfg_.p_learning_rate);
        qa.learning_rate = static_cast<S>(cfg_.q_learning_rate);
        p_adam_ = AdamState<S>(model_.p(), pa);
        q_adam_ = AdamState<S>(model_.q_layers(), qa);
    }

    const PQModel<S>& model() const { return model_; }
    PQModel<S>& model() { return model_; }
    const CostSchedule& schedule() const { return sched_; }
    const Normalizer& normalizer() const { return norm_; }
    const TrainerConfig& config() const { return cfg_; }
    const ReplayMemory<S>& replay() const { return replay_; }
    const ExplorationSchedule& exploration() const { return explore_; }
    long episodes() const { return episodes_; }
    long experiences() const { return experiences_; }
    long updates() const { return updates_; }
    long skipped_p_updates() const { return skipped_p_; }
    long skipped_q_updates() const { return skipped_q_; }

    /// floor(1 + n_features / 100) gathered experiences per joint update.
    long update_cadence() const { return 1 + sched_.n_features() / 100; }

    AdamState<S>& p_optimizer() { return p_adam_; }
    AdamState<S>& q_optimizer() { return q_adam_; }
    Rng& exploration_rng() { return rng_explore_; }
    Rng& dropout_rng() { return rng_dropout_; }
    Rng& certainty_rng() { return rng_cert_; }
    Rng& label_rng() { return rng_label_; }
    Rng& replay_rng() { return rng_replay_; }
    void restore_counters(long episodes, long experiences, long updates) {
        episodes_ = episodes;
        experiences_ = experiences;
        updates_ = updates;
        explore_.restore(episodes);
    }

    EpisodeOutcome run_episode(const Eigen::Ref<const Eigen::VectorXd>& instance,
                               int label) {
        if (instance.size() != sched_.n_features())
            throw ShapeError("instance length does not match feature count");
        explore_.advance();

        EpisodeOutcome out;
        out.episode = episodes_ + 1;

        MaskedSample s(sched_.n_features());
        std::vector<std::uint8_t> owned(sched_.n_groups(), 0);
        int n_owned = 0;
        for (int g : sched_.free_groups()) {
            acquire(s, g, sched_, instance, -1);
            owned[g] = 1;
            ++n_owned;
        }

        const bool need_cert =
            cfg_.reward_mode == RewardMode::Certainty ||
            cfg_.stop.kind == StopPolicy::Kind::CertaintyThreshold;
        std::optional<CertaintyEstimate> cert_before;
        std::vector<Experience<S>> temp;
        double spent = 0;
        int t = 0;
        VectorX<S> x;

        while (true) {
            if (cfg_.budget_mode == BudgetMode::Overshoot && !(spent < cfg_.budget))
                break;
            if (n_owned == sched_.n_groups()) break;

            norm_.assemble(s, x);
            const Eigen::VectorXd qv =
                model_.q_values_vec(x).template cast<double>();
            const auto choice =
                select_action(qv, owned, sched_, explore_.probability(),
                              cfg_.budget - spent,
                              cfg_.budget_mode == BudgetMode::Strict, rng_explore_);
            if (!choice) break;
            const int j = choice->group;

            if (need_cert && !cert_before) cert_before = certainty(x, cfg_.t_train);

            Experience<S> e;
            snapshot_before(s, e);
            e.action = j;
            acquire(s, j, sched_, instance, t);
            owned[j] = 1;
            ++n_owned;
            const double cost_j = sched_.cost(j);
            spent += cost_j;
            for (int f : sched_.members(j))
                e.acquired_val.push_back(static_cast<S>(instance(f)));

            CertaintyEstimate cert_after;
            if (need_cert) {
                norm_.assemble(s, x);
                cert_after = certainty(x, cfg_.t_train);
            }
            if (cfg_.reward_mode == RewardMode::Certainty)
                e.reward = static_cast<S>(
                    acquisition_reward(*cert_before, cert_after, cost_j));
            else
                e.reward = static_cast<S>(
                    baseline_reward(false, cost_j, RewardStep::Acquisition));
            temp.push_back(std::move(e));
            ++t;
            ++experiences_;

            bool term = !(spent < cfg_.budget);
            if (cfg_.stop.kind == StopPolicy::Kind::CertaintyThreshold &&
                max_certainty(cert_after) >= cfg_.stop.threshold)
                term = true;
            if (n_owned == sched_.n_groups()) term = true;
            if (need_cert) cert_before = std::move(cert_after);

            if (experiences_ % update_cadence() == 0 && !replay_.empty()) {
                train_step();
                ++out.updates_run;
            }
            if (term) break;
        }

        norm_.assemble(s, x);
        const CertaintyEstimate fin = certainty(x, cfg_.t_test);
        out.prediction = predicted_class(fin);
        out.final_max_certainty = max_certainty(fin);
        out.cost = spent;
        out.steps = t;
        out.order = s.order();

        out.labeled = label >= 0 && rng_label_.uniform01() < cfg_.label_probability;
        if (out.labeled) {
            out.label = label;
            out.correct = out.prediction == label;
            if (!temp.empty()) {
                temp.back().terminal = true;
                if (cfg_.reward_mode == RewardMode::CostPenalty && out.correct)
                    temp.back().reward += static_cast<S>(cfg_.r_correct);
                for (auto& exp : temp) {
                    exp.label = label;
                    replay_.push(std::move(exp));
                }
            }
        }
        ++episodes_;
        return out;
    }

    /// One joint update on a uniformly sampled minibatch. A non-finite loss
    /// or gradient on either network skips that network's step (counted)
    /// without corrupting state; the target update still runs.
    TrainStepReport train_step() {
        TrainStepReport rep;
        const std::size_t k =
            std::min<std::size_t>(cfg_.minibatch, replay_.size());
        if (k == 0) return rep;
        rep.ran = true;

        const auto idx = replay_.sample_indices(k, rng_replay_);
        const int d = sched_.n_features();
        MatrixX<S> Xb(d, static_cast<Eigen::Index>(k));
        MatrixX<S> Xa(d, static_cast<Eigen::Index>(k));
        std::vector<int> labels(k), coords(k);
        Eigen::VectorXd rewards(static_cast<Eigen::Index>(k));
        std::vector<std::uint8_t> terminal(k);
        std::vector<std::vector<std::uint8_t>> owned_after_masks(k);
        VectorX<S> col;
        for (std::size_t i = 0; i < k; ++i) {
            const Experience<S>& e = replay_.at(idx[i]);
            norm_.assemble_before(e, col);
            Xb.col(static_cast<Eigen::Index>(i)) = col;
            norm_.assemble_after(e, sched_, col);
            Xa.col(static_cast<Eigen::Index>(i)) = col;
            labels[i] = e.label;
            coords[i] = e.action;
            rewards(static_cast<Eigen::Index>(i)) = static_cast<double>(e.reward);
            terminal[i] = e.terminal ? 1 : 0;
            auto& mask = owned_after_masks[i];
            mask.assign(sched_.n_groups(), 0);
            for (int g = 0; g < sched_.n_groups(); ++g)
                if (owned_after(e, sched_, g)) mask[g] = 1;
        }

        // predictor: cross-entropy with dropout on all before-views
        const DropoutMask<S> pmask =
            model_.p().sample_mask(static_cast<Eigen::Index>(k), rng_dropout_);
        auto pres =
            cross_entropy_loss_and_gradients(model_.p(), Xb, &pmask, labels);
        rep.p_loss = pres.loss;
        if (std::isfinite(pres.loss)) {
            try {
                p_adam_.step(model_.p(), pres.grads);
            } catch (const NumericError&) {
                rep.p_skipped = true;
            }
        } else {
            rep.p_skipped = true;
        }
        if (rep.p_skipped) ++skipped_p_;

        // action values: Bellman targets from the slow target network
        const MatrixX<S> tq = model_.q_values(Xa, /*use_target=*/true);
        VectorX<S> y(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const Eigen::VectorXd col_d =
                tq.col(static_cast<Eigen::Index>(i)).template cast<double>();
            y(static_cast<Eigen::Index>(i)) = static_cast<S>(
                q_target(col_d, rewards(static_cast<Eigen::Index>(i)),
                         terminal[i] != 0, owned_after_masks[i], cfg_.gamma));
        }
        auto qres = model_.q_loss_and_gradients(Xb, coords, y);
        rep.q_loss = qres.loss;
        if (std::isfinite(qres.loss)) {
            try {
                q_adam_.step(model_.q_layers(), qres.grads);
            } catch (const NumericError&) {
                rep.q_skipped = true;
            }
        } else {
            rep.q_skipped = true;
        }
        if (rep.q_skipped) ++skipped_q_;

        model_.soft_update(static_cast<S>(cfg_.tau));
        ++updates_;
        return rep;
    }

private:
    CertaintyEstimate certainty(const VectorX<S>& x, int T) {
        return estimate_certainty(model_.p(), x, cfg_.certainty_mode, T, rng_cert_);
    }

    void snapshot_before(const MaskedSample& s, Experience<S>& e) const {
        for (int f = 0; f < s.n_features(); ++f)
            if (s.has(f)) {
                e.before_idx.push_back(static_cast<std::uint16_t>(f));
                e.before_val.push_back(static_cast<S>(s.value(f)));
            }
    }

    PQModel<S> model_;
    CostSchedule sched_;
    Normalizer norm_;
    TrainerConfig cfg_;
    ReplayMemory<S> replay_;
    ExplorationSchedule explore_;
    Rng rng_explore_, rng_dropout_, rng_cert_, rng_label_, rng_replay_;
    AdamState<S> p_adam_, q_adam_;
    long episodes_ = 0;
    long experiences_ = 0;
    long updates_ = 0;
    long skipped_p_ = 0;
    long skipped_q_ = 0;
};

} // namespace featq
