#pragma once

#include <limits>
#include <optional>

#include <Eigen/Dense>

#include <featq/rl/cost_schedule.hpp>

namespace featq {

/// One acquisition made during an episode: which group, at which step.
/// step -1 marks free groups handed out before the episode began.
struct AcquisitionEvent {
    int group = -1;
    int step = -1;
};

/// A partially observed instance: values with NaN sentinels where the
/// feature has not been acquired, the availability mask, the acquisition
/// order, and optionally the label. Mask bits only ever turn on.
class MaskedSample {
public:
    explicit MaskedSample(int n_features)
        : values_(Eigen::VectorXd::Constant(
              n_features, std::numeric_limits<double>::quiet_NaN())),
          mask_(n_features, 0) {
        if (n_features <= 0) throw ShapeError("sample needs at least one feature");
    }

    int n_features() const { return static_cast<int>(mask_.size()); }
    bool has(int f) const { return mask_.at(f) != 0; }
    double value(int f) const { return values_(f); }
    const Eigen::VectorXd& values() const { return values_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    const std::vector<AcquisitionEvent>& order() const { return order_; }

    int observed_count() const {
        int c = 0;
        for (auto b : mask_) c += b ? 1 : 0;
        return c;
    }

    std::optional<int> label() const { return label_; }
    void set_label(int y) {
        if (y < 0) throw InputError("label must be >= 0");
        label_ = y;
    }

    void set_feature(int f, double v) {
        values_(f) = v;
        mask_.at(f) = 1;
    }

    void record(const AcquisitionEvent& ev) { order_.push_back(ev); }

private:
    Eigen::VectorXd values_;
    std::vector<std::uint8_t> mask_;
    std::vector<AcquisitionEvent> order_;
    std::optional<int> label_;
};

/// Whether every member of group g has been acquired.
inline bool group_owned(const MaskedSample& s, const CostSchedule& sched, int g) {
    for (int f : sched.members(g))
        if (!s.has(f)) return false;
    return true;
}

/// Feature query: copy the group's true values from the oracle into the
/// sample, set the mask bits, and record the acquisition. Acquiring a group
/// that is even partially owned is an invalid action. A NaN in the oracle
/// (missing at the source) is copied as-is; the mask bit still turns on and
/// the cost is still owed.
inline void acquire(MaskedSample& s, int group, const CostSchedule& sched,
                    const Eigen::Ref<const Eigen::VectorXd>& oracle, int step) {
    if (group < 0 || group >= sched.n_groups())
        throw InvalidActionError("group index " + std::to_string(group) +
                                 " outside [0, " +
                                 std::to_string(sched.n_groups()) + ")");
    if (oracle.size() != s.n_features())
        throw ShapeError("oracle length must equal feature count");
    for (int f : sched.members(group))
        if (s.has(f))
            throw InvalidActionError("group " + std::to_string(group) +
                                     " already (partially) acquired");
    for (int f : sched.members(group)) s.set_feature(f, oracle(f));
    s.record({group, step});
}

} // namespace featq
