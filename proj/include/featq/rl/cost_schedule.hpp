#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <featq/core/error.hpp>

namespace featq {

/// Partition of the feature set into acquisition groups (actions), each with
/// a nonnegative cost charged once when the group is acquired. Singleton
/// groups model independently priced features; larger groups model bundles
/// (e.g. one lab panel returning several measurements). Zero-cost groups are
/// free and handed out before an episode starts.
class CostSchedule {
public:
    CostSchedule() = default;

    CostSchedule(std::vector<std::vector<int>> groups, std::vector<double> costs)
        : groups_(std::move(groups)), costs_(std::move(costs)) {
        if (groups_.size() != costs_.size())
            throw ShapeError("one cost per feature group expected");
        if (groups_.empty()) throw ShapeError("cost schedule needs at least one group");
        int n = 0;
        for (const auto& g : groups_) {
            if (g.empty()) throw ShapeError("empty feature group");
            n += static_cast<int>(g.size());
        }
        feature_group_.assign(n, -1);
        for (std::size_t gi = 0; gi < groups_.size(); ++gi)
            for (int f : groups_[gi]) {
                if (f < 0 || f >= n)
                    throw InputError("feature index " + std::to_string(f) +
                                     " outside [0, " + std::to_string(n) + ")");
                if (feature_group_[f] != -1)
                    throw InputError("feature " + std::to_string(f) +
                                     " appears in more than one group");
                feature_group_[f] = static_cast<int>(gi);
            }
        for (int f = 0; f < n; ++f)
            if (feature_group_[f] == -1)
                throw InputError("feature " + std::to_string(f) +
                                 " not covered by any group");
        for (double c : costs_)
            if (!(c >= 0) || !std::isfinite(c))
                throw InputError("group costs must be finite and >= 0");
    }

    /// Singleton groups, one per feature, all with the same cost.
    static CostSchedule uniform(int n_features, double cost = 1.0) {
        std::vector<std::vector<int>> groups(n_features);
        for (int f = 0; f < n_features; ++f) groups[f] = {f};
        return CostSchedule(std::move(groups),
                            std::vector<double>(n_features, cost));
    }

    int n_features() const { return static_cast<int>(feature_group_.size()); }
    int n_groups() const { return static_cast<int>(groups_.size()); }
    const std::vector<int>& members(int g) const { return groups_.at(g); }
    double cost(int g) const { return costs_.at(g); }
    int group_of(int feature) const { return feature_group_.at(feature); }
    const std::vector<double>& costs() const { return costs_; }
    const std::vector<std::vector<int>>& groups() const { return groups_; }

    /// Sum of all group costs: the price of acquiring everything.
    double total_cost() const {
        return std::accumulate(costs_.begin(), costs_.end(), 0.0);
    }

    std::vector<int> free_groups() const {
        std::vector<int> out;
        for (int g = 0; g < n_groups(); ++g)
            if (costs_[g] == 0.0) out.push_back(g);
        return out;
    }

    double max_cost() const {
        double m = 0;
        for (double c : costs_) m = std::max(m, c);
        return m;
    }

private:
    std::vector<std::vector<int>> groups_;
    std::vector<double> costs_;
    std::vector<int> feature_group_;
};

/// Total cost of moving from feature mask k0 to k_t: the sum of group costs
/// over groups fully owned under k_t but not under k0, each charged once.
/// Masks must be group-atomic (a group's members appear together) and k_t
/// must contain k0; anything else is rejected.
inline double acquisition_cost(const std::vector<std::uint8_t>& k_t,
                               const std::vector<std::uint8_t>& k_0,
                               const CostSchedule& sched) {
    const int n = sched.n_features();
    if (static_cast<int>(k_t.size()) != n || static_cast<int>(k_0.size()) != n)
        throw ShapeError("acquisition_cost: mask length must equal feature count");
    for (int f = 0; f < n; ++f)
        if (k_0[f] && !k_t[f])
            throw InputError("acquisition_cost: mask regression at feature " +
                             std::to_string(f));
    double total = 0;
    for (int g = 0; g < sched.n_groups(); ++g) {
        int before = 0, after = 0;
        for (int f : sched.members(g)) {
            before += k_0[f] ? 1 : 0;
            after += k_t[f] ? 1 : 0;
        }
        const int size = static_cast<int>(sched.members(g).size());
        if ((before != 0 && before != size) || (after != 0 && after != size))
            throw InputError("acquisition_cost: group " + std::to_string(g) +
                             " is partially set; acquisition is group-atomic");
        if (after == size && before == 0) total += sched.cost(g);
    }
    return total;
}

} // namespace featq
