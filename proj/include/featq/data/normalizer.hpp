#pragma once

#include <featq/data/dataset.hpp>
#include <featq/nn/network.hpp>
#include <featq/rl/masked_sample.hpp>
#include <featq/rl/replay.hpp>

namespace featq {

/// Per-feature standardization fitted on observed (non-NaN) training cells.
/// Features standardize to mean 0, population std 1; a feature with no
/// observed cells keeps mean 0, and a constant feature's std clamps to 1 so
/// the transform stays invertible. Unobserved or missing entries enter the
/// networks as exactly 0 (the post-normalization mean); the raw data keeps
/// its NaN sentinels.
class Normalizer {
public:
    Normalizer() = default;

    Normalizer(Eigen::VectorXd mean, Eigen::VectorXd sigma)
        : mean_(std::move(mean)), sigma_(std::move(sigma)) {
        if (mean_.size() != sigma_.size())
            throw ShapeError("normalizer: mean/sigma length mismatch");
        for (Eigen::Index j = 0; j < sigma_.size(); ++j)
            if (!(sigma_(j) > 0) || !std::isfinite(sigma_(j)))
                throw InputError("normalizer: sigma must be positive and finite");
    }

    static Normalizer fit(const Dataset& ds) {
        const int d = ds.dim();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd sigma = Eigen::VectorXd::Ones(d);
        for (int j = 0; j < d; ++j) {
            double sum = 0, sum2 = 0;
            long cnt = 0;
            for (int i = 0; i < ds.n(); ++i) {
                const double v = ds.values(i, j);
                if (std::isnan(v)) continue;
                sum += v;
                sum2 += v * v;
                ++cnt;
            }
            if (cnt == 0) continue; // all missing: identity transform
            const double mu = sum / static_cast<double>(cnt);
            const double var =
                std::max(0.0, sum2 / static_cast<double>(cnt) - mu * mu);
            mean(j) = mu;
            const double sd = std::sqrt(var);
            sigma(j) = sd > 0 ? sd : 1.0; // constant feature: clamp
        }
        return Normalizer(std::move(mean), std::move(sigma));
    }

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& sigma() const { return sigma_; }

    double normalize_one(int j, double v) const {
        return (v - mean_(j)) / sigma_(j);
    }
    double denormalize_one(int j, double z) const {
        return z * sigma_(j) + mean_(j);
    }

    /// Network input for a partially observed sample: standardized where
    /// observed and finite, exactly 0 elsewhere.
    template <typename S>
    void assemble(const MaskedSample& s, VectorX<S>& out) const {
        if (s.n_features() != dim())
            throw ShapeError("normalizer does not match sample width");
        out = VectorX<S>::Zero(dim());
        for (int f = 0; f < dim(); ++f) {
            if (!s.has(f)) continue;
            const double v = s.value(f);
            if (std::isnan(v)) continue;
            out(f) = static_cast<S>(normalize_one(f, v));
        }
    }

    /// Same, from a sparse (index, raw value) view.
    template <typename S>
    void assemble_sparse(const std::vector<std::uint16_t>& idx,
                         const std::vector<S>& val, VectorX<S>& out) const {
        if (idx.size() != val.size())
            throw ShapeError("sparse view: index/value length mismatch");
        out = VectorX<S>::Zero(dim());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double v = static_cast<double>(val[k]);
            if (std::isnan(v)) continue;
            out(idx[k]) = static_cast<S>(normalize_one(idx[k], v));
        }
    }

    /// Experience views: before, and after = before + acquired group.
    template <typename S>
    void assemble_before(const Experience<S>& e, VectorX<S>& out) const {
        assemble_sparse(e.before_idx, e.before_val, out);
    }

    template <typename S>
    void assemble_after(const Experience<S>& e, const CostSchedule& sched,
                        VectorX<S>& out) const {
        assemble_sparse(e.before_idx, e.before_val, out);
        const auto& members = sched.members(e.action);
        if (members.size() != e.acquired_val.size())
            throw ShapeError("experience acquired values do not match group size");
        for (std::size_t k = 0; k < members.size(); ++k) {
            const double v = static_cast<double>(e.acquired_val[k]);
            if (std::isnan(v)) continue;
            out(members[k]) = static_cast<S>(normalize_one(members[k], v));
        }
    }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd sigma_;
};

} // namespace featq
