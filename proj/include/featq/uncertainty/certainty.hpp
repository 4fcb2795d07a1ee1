#pragma once

#include <featq/nn/loss.hpp>

namespace featq {

enum class CertaintyMode { McDropout, Softmax };

/// Class-probability estimate for one input. Probabilities are always kept
/// in double precision regardless of the network scalar, because downstream
/// rewards are differences of these values.
struct CertaintyEstimate {
    Eigen::VectorXd probabilities;
    int sample_count = 0; // stochastic passes averaged (1 for softmax mode)
    CertaintyMode mode = CertaintyMode::Softmax;
};

/// Argmax class of an estimate; ties resolve to the lowest index.
inline int predicted_class(const CertaintyEstimate& est) {
    if (est.probabilities.size() == 0)
        throw ShapeError("predicted_class of empty estimate");
    Eigen::Index best = 0;
    est.probabilities.maxCoeff(&best);
    return static_cast<int>(best);
}

inline double max_certainty(const CertaintyEstimate& est) {
    if (est.probabilities.size() == 0)
        throw ShapeError("max_certainty of empty estimate");
    return est.probabilities.maxCoeff();
}

/// Monte-Carlo dropout estimate: the mean softmax over T stochastic forward
/// passes with independently drawn dropout masks. Masks are drawn pass-major
/// (all of pass t before pass t+1), so an estimate over T = a + b passes
/// splits into two consecutive estimates over a and b passes sharing the
/// stream. Always consumes exactly T passes worth of mask draws.
///
/// When the network has no active dropout the passes are identical; a single
/// deterministic forward then reproduces the softmax estimate bit-exactly
/// (the mask draws are still consumed to keep stream positions fixed).
template <typename S>
CertaintyEstimate mc_predict(const DenseNetwork<S>& net,
                             const ConstRefV<S>& input, int T,
                             Rng& rng) {
    if (T < 1) throw InputError("mc_predict: sample count must be >= 1");
    DropoutMask<S> mask = net.sample_mask(T, rng);

    CertaintyEstimate est;
    est.mode = CertaintyMode::McDropout;
    est.sample_count = T;

    if (!net.has_dropout()) {
        VectorX<S> probs = softmax<S>(net.forward_vec(input));
        est.probabilities = probs.template cast<double>();
        return est;
    }

    typename DenseNetwork<S>::Trace tr;
    net.forward_shared_input(input, T, &mask, tr);
    MatrixX<S> probs = softmax_columns<S>(tr.output());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(net.output_dim());
    for (int t = 0; t < T; ++t) // fixed summation order
        acc += probs.col(t).template cast<double>();
    est.probabilities = acc / static_cast<double>(T);
    return est;
}

/// Single deterministic softmax estimate (the cheap, overconfident variant).
template <typename S>
CertaintyEstimate softmax_certainty(const DenseNetwork<S>& net,
                                    const ConstRefV<S>& input) {
    CertaintyEstimate est;
    est.mode = CertaintyMode::Softmax;
    est.sample_count = 1;
    VectorX<S> probs = softmax<S>(net.forward_vec(input));
    est.probabilities = probs.template cast<double>();
    return est;
}

/// Dispatch on mode; MC consumes rng, softmax does not.
template <typename S>
CertaintyEstimate estimate_certainty(const DenseNetwork<S>& net,
                                     const ConstRefV<S>& input,
                                     CertaintyMode mode, int T, Rng& rng) {
    if (mode == CertaintyMode::McDropout) return mc_predict(net, input, T, rng);
    return softmax_certainty(net, input);
}

} // namespace featq
