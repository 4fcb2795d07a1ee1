#pragma once

#include <array>
#include <fstream>

#include <featq/data/dataset.hpp>
#include <featq/io/artifacts.hpp>

namespace featq {
namespace synth {

/// Noisy-channel instance used by the value-iteration oracle: d=4 binary
/// features, x_j = (2y-1) flipped with probability eta_j, priced so the
/// cleaner the channel the more it costs. Small enough that every
/// (mask, observed-values) state can be enumerated exactly.
inline constexpr std::array<double, 4> kTinyDpEtas{0.35, 0.25, 0.15, 0.05};
inline constexpr std::array<double, 4> kTinyDpCosts{1.0, 2.0, 3.0, 4.0};

/// Draw order per instance: one label draw, then the feature draws in
/// index order.
inline Dataset tiny_dp(int n, std::uint64_t seed) {
    if (n < 0) throw InputError("negative sample count");
    Rng rng(seed);
    Dataset ds;
    const int d = 4;
    ds.values.resize(n, d);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        ds.labels[i] = y;
        for (int j = 0; j < d; ++j) {
            const double sign = rng.bernoulli(kTinyDpEtas[j]) ? -1.0 : 1.0;
            ds.values(i, j) = sign * (2.0 * y - 1.0);
        }
    }
    ds.n_classes = 2;
    ds.feature_names = {"ch0", "ch1", "ch2", "ch3"};
    ds.costs = CostSchedule({{0}, {1}, {2}, {3}},
                            {kTinyDpCosts[0], kTinyDpCosts[1], kTinyDpCosts[2],
                             kTinyDpCosts[3]});
    ds.validate();
    return ds;
}

/// Binary task where feature 0 (cost 1) carries the whole label signal,
/// x_0 = (2y-1) + 0.1 N(0,1), and features 1..7 (cost 5) are pure noise.
inline Dataset one_informative(int n, std::uint64_t seed) {
    if (n < 0) throw InputError("negative sample count");
    Rng rng(seed);
    Dataset ds;
    const int d = 8;
    ds.values.resize(n, d);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        ds.labels[i] = y;
        ds.values(i, 0) = (2.0 * y - 1.0) + 0.1 * rng.normal();
        for (int j = 1; j < d; ++j) ds.values(i, j) = rng.normal();
    }
    ds.n_classes = 2;
    ds.feature_names.reserve(d);
    for (int j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    std::vector<std::vector<int>> groups(d);
    std::vector<double> costs(d, 5.0);
    for (int j = 0; j < d; ++j) groups[j] = {j};
    costs[0] = 1.0;
    ds.costs = CostSchedule(std::move(groups), std::move(costs));
    ds.validate();
    return ds;
}

/// Two spherical Gaussians at +-(separation/sqrt(d)) * 1, unit variance,
/// d=4: the Bayes accuracy is Phi(separation) in closed form, which makes
/// the task a calibration oracle.
inline Dataset two_gaussian(int n, double separation, std::uint64_t seed) {
    if (n < 0) throw InputError("negative sample count");
    if (!(separation > 0) || !std::isfinite(separation))
        throw InputError("separation must be positive and finite");
    Rng rng(seed);
    Dataset ds;
    const int d = 4;
    const double shift = separation / std::sqrt(static_cast<double>(d));
    ds.values.resize(n, d);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        ds.labels[i] = y;
        for (int j = 0; j < d; ++j)
            ds.values(i, j) = (2.0 * y - 1.0) * shift + rng.normal();
    }
    ds.n_classes = 2;
    ds.feature_names = {"g0", "g1", "g2", "g3"};
    ds.costs = CostSchedule::uniform(d, 1.0);
    ds.validate();
    return ds;
}

/// Bayes accuracy of the two-Gaussian task: Phi(separation).
inline double two_gaussian_bayes_accuracy(double separation) {
    return 0.5 * std::erfc(-separation / std::sqrt(2.0));
}

/// Write a dataset as a delimited table plus a costs file, both readable by
/// load_delimited.
inline void write_csv(const Dataset& ds, const std::string& data_path,
                      const std::string& costs_path) {
    {
        auto out = open_out(data_path);
        for (const auto& name : ds.feature_names) out << name << ',';
        out << "label\n";
        for (int i = 0; i < ds.n(); ++i) {
            for (int j = 0; j < ds.dim(); ++j) {
                const double v = ds.values(i, j);
                if (std::isnan(v))
                    out << ',';
                else
                    out << format_double(v) << ',';
            }
            out << ds.labels[i] << '\n';
        }
    }
    {
        auto out = open_out(costs_path);
        out << "feature,cost,bundle\n";
        for (int g = 0; g < ds.costs.n_groups(); ++g) {
            const bool bundled = ds.costs.members(g).size() > 1;
            for (int f : ds.costs.members(g)) {
                out << ds.feature_names[f] << ','
                    << format_double(ds.costs.cost(g)) << ',';
                if (bundled) out << 'b' << g;
                out << '\n';
            }
        }
    }
}

} // namespace synth
} // namespace featq
