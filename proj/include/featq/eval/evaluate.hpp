#pragma once

#include <algorithm>
#include <map>

#include <featq/data/dataset.hpp>
#include <featq/data/normalizer.hpp>
#include <featq/model/pq_model.hpp>
#include <featq/rl/reward.hpp>
#include <featq/rl/trainer.hpp>

namespace featq {

/// Evaluation-time episode settings: greedy policy, no learning, no labels.
struct EvalParams {
    double budget = std::numeric_limits<double>::infinity();
    BudgetMode budget_mode = BudgetMode::Overshoot;
    CertaintyMode certainty_mode = CertaintyMode::McDropout;
    int t_test = 100;
    StopPolicy stop;
    std::uint64_t seed = 0;
};

/// Greedy episode transcript: the prediction before any paid acquisition,
/// then (cumulative cost, prediction) after each acquisition.
struct EvalEpisodeRecord {
    int initial_prediction = -1;
    std::vector<double> cum_costs;
    std::vector<int> predictions;
    std::vector<AcquisitionEvent> order;
    double final_cost = 0;
    int final_prediction = -1;
    double final_max_certainty = 0;
};

/// Per-sample RNG for evaluation: a pure function of (seed, sample id), so
/// evaluating any subset or prefix of samples reproduces exactly the same
/// episodes as the full run.
inline Rng eval_sample_rng(std::uint64_t seed, long sample_id) {
    return Rng(seed).derive(0x45564100ull + static_cast<std::uint64_t>(sample_id));
}

/// Run one greedy acquisition episode (highest action value among valid
/// groups, ties to the lowest index) and record the prediction after every
/// step. Free groups are handed out first and do not appear as steps.
template <typename S>
EvalEpisodeRecord greedy_episode(const PQModel<S>& model, const Normalizer& norm,
                                 const CostSchedule& sched,
                                 const Eigen::Ref<const Eigen::VectorXd>& instance,
                                 const EvalParams& params, Rng rng) {
    if (instance.size() != sched.n_features())
        throw ShapeError("instance length does not match feature count");
    EvalEpisodeRecord rec;
    MaskedSample s(sched.n_features());
    std::vector<std::uint8_t> owned(sched.n_groups(), 0);
    int n_owned = 0;
    for (int g : sched.free_groups()) {
        acquire(s, g, sched, instance, -1);
        owned[g] = 1;
        ++n_owned;
    }

    VectorX<S> x;
    norm.assemble(s, x);
    CertaintyEstimate cert =
        estimate_certainty(model.p(), x, params.certainty_mode, params.t_test, rng);
    rec.initial_prediction = predicted_class(cert);

    double spent = 0;
    int t = 0;
    while (true) {
        if (params.budget_mode == BudgetMode::Overshoot && !(spent < params.budget))
            break;
        if (n_owned == sched.n_groups()) break;
        if (params.stop.kind == StopPolicy::Kind::CertaintyThreshold &&
            max_certainty(cert) >= params.stop.threshold)
            break;

        const Eigen::VectorXd qv = model.q_values_vec(x).template cast<double>();
        int best = -1;
        for (int g = 0; g < sched.n_groups(); ++g) {
            if (owned[g]) continue;
            if (params.budget_mode == BudgetMode::Strict &&
                sched.cost(g) > params.budget - spent)
                continue;
            if (best == -1 || qv(g) > qv(best)) best = g;
        }
        if (best == -1) break;

        acquire(s, best, sched, instance, t);
        owned[best] = 1;
        ++n_owned;
        spent += sched.cost(best);
        ++t;

        norm.assemble(s, x);
        cert = estimate_certainty(model.p(), x, params.certainty_mode,
                                  params.t_test, rng);
        rec.cum_costs.push_back(spent);
        rec.predictions.push_back(predicted_class(cert));
    }

    rec.order = s.order();
    rec.final_cost = spent;
    rec.final_prediction =
        rec.predictions.empty() ? rec.initial_prediction : rec.predictions.back();
    rec.final_max_certainty = max_certainty(cert);
    return rec;
}

struct CurvePoint {
    double cost = 0;
    double accuracy = 0;
};

/// Accuracy as a function of allowed spend, aggregated over greedy episodes:
/// a sample's prediction at spend c is its prediction after the last
/// acquisition costing no more than c. Points sit at cost 0 and at every
/// distinct cumulative cost reached by any sample, strictly increasing.
struct AccuracyCostCurve {
    std::vector<CurvePoint> points;

    double accuracy_at(double cost) const {
        if (points.empty()) throw ShapeError("empty curve");
        double acc = points.front().accuracy;
        for (const auto& p : points) {
            if (p.cost > cost) break;
            acc = p.accuracy;
        }
        return acc;
    }

    double final_accuracy() const {
        if (points.empty()) throw ShapeError("empty curve");
        return points.back().accuracy;
    }
};

inline AccuracyCostCurve curve_from_records(
    const std::vector<EvalEpisodeRecord>& records, const std::vector<int>& labels) {
    if (records.size() != labels.size())
        throw ShapeError("one label per evaluation record expected");
    if (records.empty()) throw InputError("cannot build a curve from no records");
    std::vector<double> breaks{0.0};
    for (const auto& r : records)
        for (double c : r.cum_costs) breaks.push_back(c);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    const double n = static_cast<double>(records.size());
    AccuracyCostCurve curve;
    curve.points.reserve(breaks.size());
    std::vector<std::size_t> pos(records.size(), 0);
    std::vector<int> current(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        current[i] = records[i].initial_prediction;
    for (double b : breaks) {
        long correct = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            while (pos[i] < r.cum_costs.size() && r.cum_costs[pos[i]] <= b) {
                current[i] = r.predictions[pos[i]];
                ++pos[i];
            }
            if (current[i] == labels[i]) ++correct;
        }
        curve.points.push_back({b, static_cast<double>(correct) / n});
    }
    return curve;
}

/// Greedy-evaluate every instance of a dataset and aggregate the curve.
template <typename S>
AccuracyCostCurve accuracy_cost_curve(
    const PQModel<S>& model, const Normalizer& norm, const CostSchedule& sched,
    const Dataset& data, const EvalParams& params,
    std::vector<EvalEpisodeRecord>* records_out = nullptr) {
    if (data.n() == 0) throw InputError("cannot evaluate on an empty dataset");
    std::vector<EvalEpisodeRecord> records;
    records.reserve(data.n());
    for (int i = 0; i < data.n(); ++i)
        records.push_back(greedy_episode(model, norm, sched, data.instance(i),
                                         params, eval_sample_rng(params.seed, i)));
    AccuracyCostCurve curve = curve_from_records(records, data.labels);
    if (records_out) *records_out = std::move(records);
    return curve;
}

/// Area under the accuracy-cost curve over [0, cost_limit], trapezoidal on
/// the piecewise-linear interpolation, held flat past the last point, and
/// normalized by cost_limit so a perfect classifier at zero cost scores 1.
inline double auacc(const AccuracyCostCurve& curve, double cost_limit) {
    if (!(cost_limit > 0) || !std::isfinite(cost_limit))
        throw InputError("auacc needs a positive finite cost range");
    if (curve.points.empty()) throw ShapeError("auacc of empty curve");
    if (curve.points.front().cost != 0.0)
        throw InputError("curve must start at cost 0");
    double area = 0;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        if (b.cost <= a.cost) throw InputError("curve costs must strictly increase");
        if (a.cost >= cost_limit) break;
        const double hi = std::min(b.cost, cost_limit);
        const double acc_hi =
            a.accuracy + (b.accuracy - a.accuracy) * (hi - a.cost) /
                             (b.cost - a.cost);
        area += 0.5 * (a.accuracy + acc_hi) * (hi - a.cost);
    }
    const double last_cost = curve.points.back().cost;
    if (last_cost < cost_limit)
        area += curve.points.back().accuracy * (cost_limit - last_cost);
    return area / cost_limit;
}

/// Reliability table: samples are (max class probability, correctness)
/// pairs, binned into n_bins equal-width confidence bins over [0, 1].
struct CalibrationBin {
    double lo = 0, hi = 0;
    long count = 0;
    double mean_certainty = 0;
    double accuracy = 0;
};

struct CalibrationTable {
    std::vector<CalibrationBin> bins;
    double ece = 0; // expected calibration error, count-weighted
};

inline CalibrationTable calibration_table(
    const std::vector<std::pair<double, bool>>& samples, int n_bins) {
    if (n_bins < 1) throw InputError("calibration needs at least one bin");
    if (samples.empty()) throw InputError("calibration needs at least one sample");
    CalibrationTable tab;
    tab.bins.resize(n_bins);
    for (int b = 0; b < n_bins; ++b) {
        tab.bins[b].lo = static_cast<double>(b) / n_bins;
        tab.bins[b].hi = static_cast<double>(b + 1) / n_bins;
    }
    std::vector<double> cert_sum(n_bins, 0);
    std::vector<long> correct(n_bins, 0);
    for (const auto& [c, ok] : samples) {
        if (!(c >= 0.0) || c > 1.0 + 1e-12)
            throw InputError("certainty outside [0, 1]");
        int b = std::min(n_bins - 1, static_cast<int>(c * n_bins));
        ++tab.bins[b].count;
        cert_sum[b] += c;
        if (ok) ++correct[b];
    }
    const double total = static_cast<double>(samples.size());
    for (int b = 0; b < n_bins; ++b) {
        if (tab.bins[b].count == 0) continue;
        tab.bins[b].mean_certainty = cert_sum[b] / tab.bins[b].count;
        tab.bins[b].accuracy =
            static_cast<double>(correct[b]) / tab.bins[b].count;
        tab.ece += (tab.bins[b].count / total) *
                   std::abs(tab.bins[b].accuracy - tab.bins[b].mean_certainty);
    }
    return tab;
}

/// (max certainty, correct) over full feature vectors, for calibration of
/// the predictor itself. Per-sample RNG derivation as in evaluation.
template <typename S>
std::vector<std::pair<double, bool>> certainty_correct_pairs(
    const PQModel<S>& model, const Normalizer& norm, const Dataset& data,
    CertaintyMode mode, int T, std::uint64_t seed) {
    std::vector<std::pair<double, bool>> out;
    out.reserve(data.n());
    VectorX<S> x;
    for (int i = 0; i < data.n(); ++i) {
        MaskedSample s(data.dim());
        for (int f = 0; f < data.dim(); ++f) s.set_feature(f, data.values(i, f));
        norm.assemble(s, x);
        Rng rng = eval_sample_rng(seed, i);
        const CertaintyEstimate est =
            estimate_certainty(model.p(), x, mode, T, rng);
        out.emplace_back(max_certainty(est),
                         predicted_class(est) == data.labels[i]);
    }
    return out;
}

/// Acquisition ranking per instance: entry (i, f) is the 0-based index of
/// the acquisition event that delivered feature f in episode i (bundle
/// members share their event's rank, free groups come first), or -1 if the
/// feature was never acquired.
inline Eigen::MatrixXi acquisition_order_matrix(
    const std::vector<EvalEpisodeRecord>& records, const CostSchedule& sched) {
    Eigen::MatrixXi m = Eigen::MatrixXi::Constant(
        static_cast<Eigen::Index>(records.size()), sched.n_features(), -1);
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t k = 0; k < records[i].order.size(); ++k)
            for (int f : sched.members(records[i].order[k].group))
                m(static_cast<Eigen::Index>(i), f) = static_cast<int>(k);
    return m;
}

struct TracePoint {
    long episode = 0;
    double val_accuracy = 0;
    double val_auacc = 0;
};

/// Convergence probe: greedy-evaluate a validation set and report the final
/// accuracy plus the area under the curve over [0, auacc_limit].
template <typename S>
TracePoint trace_point(const PQModel<S>& model, const Normalizer& norm,
                       const CostSchedule& sched, const Dataset& val,
                       const EvalParams& params, long episode,
                       double auacc_limit) {
    const AccuracyCostCurve curve =
        accuracy_cost_curve(model, norm, sched, val, params);
    TracePoint tp;
    tp.episode = episode;
    tp.val_accuracy = curve.final_accuracy();
    tp.val_auacc = auacc(curve, auacc_limit);
    return tp;
}

} // namespace featq
