#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include <featq/core/rng.hpp>
#include <featq/rl/cost_schedule.hpp>

namespace featq {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labeled tabular data: one row per instance, NaN for cells missing at the
/// source, class labels in [0, n_classes), feature names, and the cost
/// schedule the features are sold under.
struct Dataset {
    RowMatrixXd values;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    CostSchedule costs;
    int n_classes = 0;

    int n() const { return static_cast<int>(values.rows()); }
    int dim() const { return static_cast<int>(values.cols()); }

    /// Contiguous view of instance i (row-major storage).
    Eigen::Map<const Eigen::VectorXd> instance(int i) const {
        return Eigen::Map<const Eigen::VectorXd>(values.row(i).data(), dim());
    }

    void validate() const {
        if (static_cast<int>(labels.size()) != n())
            throw ShapeError("dataset: one label per row expected");
        if (!feature_names.empty() &&
            static_cast<int>(feature_names.size()) != dim())
            throw ShapeError("dataset: one feature name per column expected");
        if (n() > 0 && costs.n_features() != dim())
            throw ShapeError("dataset: cost schedule covers " +
                             std::to_string(costs.n_features()) +
                             " features, data has " + std::to_string(dim()));
        for (int y : labels)
            if (y < 0 || y >= n_classes)
                throw InputError("label " + std::to_string(y) +
                                 " outside [0, " + std::to_string(n_classes) + ")");
    }

    Dataset subset(const std::vector<int>& rows) const {
        Dataset out;
        out.values.resize(static_cast<Eigen::Index>(rows.size()), dim());
        out.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const int r = rows[i];
            if (r < 0 || r >= n()) throw InputError("subset row out of range");
            out.values.row(static_cast<Eigen::Index>(i)) = values.row(r);
            out.labels.push_back(labels[r]);
        }
        out.feature_names = feature_names;
        out.costs = costs;
        out.n_classes = n_classes;
        return out;
    }
};

/// Deterministic Fisher-Yates shuffle of 0..n-1 (descending swap order,
/// j = rng.below(i+1)).
inline std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

struct SplitIndices {
    std::vector<int> train, validation, test;
};

/// 70/15/15 split: shuffle 0..n-1 with the seed, then carve
/// floor(0.15 n) validation and test rows off the end; the rest train.
inline SplitIndices split_indices(int n, std::uint64_t seed) {
    if (n < 0) throw InputError("negative dataset size");
    Rng rng(seed);
    std::vector<int> idx = shuffled_indices(n, rng);
    const int n_val = static_cast<int>(0.15 * n);
    const int n_test = static_cast<int>(0.15 * n);
    const int n_train = n - n_val - n_test;
    SplitIndices s;
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    s.test.assign(idx.begin() + n_train + n_val, idx.end());
    return s;
}

struct SplitDatasets {
    Dataset train, validation, test;
};

inline SplitDatasets split(const Dataset& ds, std::uint64_t seed) {
    const SplitIndices idx = split_indices(ds.n(), seed);
    return {ds.subset(idx.train), ds.subset(idx.validation), ds.subset(idx.test)};
}

/// Presentation order of one training epoch: a pure function of
/// (stream seed, epoch index), independent of anything drawn before.
inline std::vector<int> epoch_order(int n, std::uint64_t stream_seed, long epoch) {
    Rng base(stream_seed);
    Rng r = base.derive(0x5745454Bull + static_cast<std::uint64_t>(epoch));
    return shuffled_indices(n, r);
}

} // namespace featq
