#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include <featq/core/rng.hpp>
#include <featq/rl/cost_schedule.hpp>

namespace featq {

/// One acquisition transition, stored sparsely: the before-view as sorted
/// (feature, raw value) pairs and the acquired group's raw values in the
/// schedule's member order. The after-view is before + acquired. Values may
/// be NaN (missing at the source). The label arrives when the episode's
/// label does; terminal marks the episode's last transition.
template <typename S>
struct Experience {
    std::vector<std::uint16_t> before_idx;
    std::vector<S> before_val;
    std::vector<S> acquired_val;
    std::int32_t action = -1;
    S reward = S(0);
    std::int32_t label = -1;
    bool terminal = false;
};

/// Whether group g is fully owned in the experience's after-view.
template <typename S>
bool owned_after(const Experience<S>& e, const CostSchedule& sched, int g) {
    if (g == e.action) return true;
    for (int f : sched.members(g)) {
        const auto it = std::lower_bound(e.before_idx.begin(), e.before_idx.end(),
                                         static_cast<std::uint16_t>(f));
        if (it == e.before_idx.end() || *it != static_cast<std::uint16_t>(f))
            return false;
    }
    return true;
}

/// Fixed-capacity FIFO of experiences. When full, pushing evicts the oldest
/// entry. Logical index 0 is always the oldest resident entry.
template <typename S>
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw InputError("replay capacity must be positive");
        buf_.reserve(std::min<std::size_t>(capacity, 4096));
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    void push(Experience<S>&& e) {
        if (size_ < capacity_) {
            if (buf_.size() < capacity_ && buf_.size() == size_)
                buf_.push_back(std::move(e));
            else
                buf_[(head_ + size_) % capacity_] = std::move(e);
            ++size_;
        } else {
            buf_[head_] = std::move(e);
            head_ = (head_ + 1) % capacity_;
        }
    }

    /// i = 0 is the oldest entry, i = size()-1 the newest.
    const Experience<S>& at(std::size_t i) const {
        if (i >= size_) throw InputError("replay index out of range");
        return buf_[(head_ + i) % capacity_];
    }

    /// k distinct logical indices drawn uniformly (Floyd's algorithm; draw
    /// order documented by the loop below). Requires k <= size().
    std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const {
        if (k > size_)
            throw InputError("cannot sample " + std::to_string(k) + " of " +
                             std::to_string(size_) + " experiences");
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t j = size_ - k; j < size_; ++j) {
            const std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
            if (std::find(out.begin(), out.end(), t) != out.end())
                out.push_back(j);
            else
                out.push_back(t);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::vector<Experience<S>> buf_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

} // namespace featq
