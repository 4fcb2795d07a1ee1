#pragma once

#include <cmath>

#include <featq/nn/loss.hpp>

namespace featq {

template <typename S>
struct AdamConfig {
    S learning_rate = S(1e-3);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S epsilon = S(1e-8);
};

/// Adam optimizer with bias correction. Holds first/second moment estimates
/// shaped like the parameter list plus the step counter.
///
///   m <- b1 m + (1-b1) g        v <- b2 v + (1-b2) g^2
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
///
/// A step with non-finite gradients throws NumericError before touching
/// any state, so the parameters and moments stay valid.
template <typename S>
class AdamState {
public:
    AdamState() = default;

    AdamState(const std::vector<LinearLayer<S>>& params, AdamConfig<S> cfg)
        : cfg_(cfg) {
        m_.layers.resize(params.size());
        v_.layers.resize(params.size());
        for (std::size_t l = 0; l < params.size(); ++l) {
            m_.layers[l].weights =
                MatrixX<S>::Zero(params[l].weights.rows(), params[l].weights.cols());
            m_.layers[l].bias = VectorX<S>::Zero(params[l].bias.rows());
            v_.layers[l] = m_.layers[l];
        }
    }

    AdamState(const DenseNetwork<S>& net, AdamConfig<S> cfg)
        : AdamState(net.layers(), cfg) {}

    const AdamConfig<S>& config() const { return cfg_; }
    long step_count() const { return t_; }
    Gradients<S>& first_moment() { return m_; }
    Gradients<S>& second_moment() { return v_; }
    const Gradients<S>& first_moment() const { return m_; }
    const Gradients<S>& second_moment() const { return v_; }
    void set_step_count(long t) { t_ = t; }

    void step(std::vector<LinearLayer<S>>& params, const Gradients<S>& g) {
        if (params.size() != m_.layers.size() || g.layers.size() != m_.layers.size())
            throw ShapeError("adam state does not match parameter list");
        if (!g.all_finite())
            throw NumericError("adam: non-finite gradient, update rejected");
        ++t_;
        const S c1 = S(1) - std::pow(cfg_.beta1, static_cast<S>(t_));
        const S c2 = S(1) - std::pow(cfg_.beta2, static_cast<S>(t_));
        for (std::size_t l = 0; l < m_.layers.size(); ++l) {
            update_block(params[l].weights, m_.layers[l].weights,
                         v_.layers[l].weights, g.layers[l].weights, c1, c2);
            update_block(params[l].bias, m_.layers[l].bias, v_.layers[l].bias,
                         g.layers[l].bias, c1, c2);
        }
    }

    void step(DenseNetwork<S>& net, const Gradients<S>& g) { step(net.layers(), g); }

private:
    template <typename Block>
    void update_block(Block& p, Block& m, Block& v, const Block& g, S c1, S c2) {
        m = cfg_.beta1 * m + (S(1) - cfg_.beta1) * g;
        v.array() = cfg_.beta2 * v.array() + (S(1) - cfg_.beta2) * g.array().square();
        p.array() -= cfg_.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg_.epsilon);
    }

    AdamConfig<S> cfg_;
    long t_ = 0;
    Gradients<S> m_;
    Gradients<S> v_;
};

} // namespace featq
