#pragma once

#include <featq/core/rng.hpp>
#include <featq/uncertainty/certainty.hpp>

namespace featq {

/// Certainty-change reward for acquiring a feature group: the Euclidean
/// norm of the change in the class-probability estimate, per unit cost.
/// Cost must be strictly positive (free groups never generate rewards).
inline double acquisition_reward(const CertaintyEstimate& before,
                                 const CertaintyEstimate& after, double cost) {
    if (!(cost > 0.0) || !std::isfinite(cost))
        throw InputError("acquisition reward needs a positive finite cost");
    if (before.probabilities.size() != after.probabilities.size())
        throw ShapeError("certainty estimates disagree on class count");
    if (before.probabilities.size() == 0)
        throw ShapeError("empty certainty estimate");
    return (after.probabilities - before.probabilities).norm() / cost;
}

enum class RewardStep { Acquisition, Terminal };

/// Flat cost-penalty reward used by the plain RL ablation: -cost per
/// acquisition, plus r_correct at the terminal step if the final prediction
/// was correct.
inline double baseline_reward(bool correct, double cost, RewardStep kind,
                              double r_correct = 1.0) {
    double r = -cost;
    if (kind == RewardStep::Terminal && correct) r += r_correct;
    return r;
}

/// Epsilon-greedy action selection over unowned groups. q_values holds one
/// value per group. With probability pr_random a uniformly random valid
/// group is chosen (two draws: branch then choice); otherwise the valid
/// group with the highest value, ties resolving to the lowest index (one
/// draw). In strict mode groups costing more than remaining_budget are not
/// valid. Returns nothing, consuming no draws, when no group is valid.
struct ActionChoice {
    int group = -1;
    bool explored = false;
};

inline std::optional<ActionChoice> select_action(
    const Eigen::Ref<const Eigen::VectorXd>& q_values,
    const std::vector<std::uint8_t>& owned, const CostSchedule& sched,
    double pr_random, double remaining_budget, bool strict, Rng& rng) {
    if (q_values.size() != sched.n_groups() ||
        static_cast<int>(owned.size()) != sched.n_groups())
        throw ShapeError("select_action: one value and owned flag per group");
    std::vector<int> valid;
    valid.reserve(owned.size());
    for (int g = 0; g < sched.n_groups(); ++g) {
        if (owned[g]) continue;
        if (strict && sched.cost(g) > remaining_budget) continue;
        valid.push_back(g);
    }
    if (valid.empty()) return std::nullopt;
    if (rng.uniform01() < pr_random) {
        const int pick = valid[static_cast<std::size_t>(rng.below(valid.size()))];
        return ActionChoice{pick, true};
    }
    int best = valid.front();
    for (int g : valid)
        if (q_values(g) > q_values(best)) best = g;
    return ActionChoice{best, false};
}

} // namespace featq
