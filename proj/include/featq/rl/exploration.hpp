#pragma once

#include <cmath>

#include <featq/core/error.hpp>

namespace featq {

/// Exploration probability schedule: after i episode starts the random-action
/// probability is exactly max(floor, decay^i), computed via pow each time so
/// no multiplicative rounding drift accumulates. Starts at 1 before the
/// first episode.
class ExplorationSchedule {
public:
    ExplorationSchedule(double decay, double floor = 0.1)
        : decay_(decay), floor_(floor) {
        if (!(decay > 0.0) || decay > 1.0)
            throw InputError("exploration decay must lie in (0, 1]");
        if (floor < 0.0 || floor > 1.0)
            throw InputError("exploration floor must lie in [0, 1]");
    }

    /// Call once at the start of each episode, before action selection.
    void advance() {
        ++episodes_;
        probability_ = std::max(floor_, std::pow(decay_, static_cast<double>(episodes_)));
    }

    double probability() const { return probability_; }
    long episodes() const { return episodes_; }
    double decay() const { return decay_; }
    double floor() const { return floor_; }

    /// Restore from a checkpointed episode count.
    void restore(long episodes) {
        if (episodes < 0) throw InputError("episode count must be >= 0");
        episodes_ = episodes;
        probability_ = episodes == 0
                           ? 1.0
                           : std::max(floor_, std::pow(decay_, static_cast<double>(episodes_)));
    }

private:
    double decay_;
    double floor_;
    double probability_ = 1.0;
    long episodes_ = 0;
};

} // namespace featq
