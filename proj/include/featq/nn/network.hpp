#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include <featq/core/error.hpp>
#include <featq/core/rng.hpp>

namespace featq {

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Ref parameters of free function templates sit in a non-deduced position so
// plain matrices bind without the caller spelling the scalar.
template <typename S>
using ConstRefM = std::type_identity_t<Eigen::Ref<const MatrixX<S>>>;
template <typename S>
using ConstRefV = std::type_identity_t<Eigen::Ref<const VectorX<S>>>;

/// Semantic tag for the linear output head.
enum class OutputKind { Logits, Values };

template <typename S>
struct LinearLayer {
    MatrixX<S> weights; // out x in
    VectorX<S> bias;    // out

    Eigen::Index fan_in() const { return weights.cols(); }
    Eigen::Index fan_out() const { return weights.rows(); }
};

/// Per-hidden-layer dropout masks for a batch of stochastic passes.
/// bits[l] is (layer width x batch) with entries in {0, 1}; keep[l] is the
/// keep probability used to draw and to rescale (inverted dropout).
template <typename S>
struct DropoutMask {
    std::vector<MatrixX<S>> bits;
    std::vector<S> keep;

    bool empty() const { return bits.empty(); }
    Eigen::Index batch() const { return bits.empty() ? 0 : bits.front().cols(); }
};

// Non-deduced like the Ref aliases, so callers may pass a literal nullptr.
template <typename S>
using MaskPtr = std::type_identity_t<const DropoutMask<S>*>;

/// Fully connected ReLU network with a linear head.
///
/// dims = {input, hidden..., output}. Dropout applies to hidden activations
/// only, never to the input or the head. Weight storage is column-major
/// (Eigen default); samples are carried as matrix columns so a forward pass
/// over a batch is one GEMM per layer.
template <typename S>
class DenseNetwork {
public:
    struct Trace {
        std::vector<MatrixX<S>> pre;  // one per layer; pre.back() is the output
        std::vector<MatrixX<S>> post; // one per hidden layer (after ReLU+dropout)
        const MatrixX<S>& output() const { return pre.back(); }
    };

    DenseNetwork() = default;

    DenseNetwork(std::vector<int> dims, OutputKind kind, std::vector<S> dropout)
        : dims_(std::move(dims)), kind_(kind), dropout_(std::move(dropout)) {
        if (dims_.size() < 2)
            throw ShapeError("network needs at least input and output dims");
        for (int d : dims_)
            if (d <= 0) throw ShapeError("network dims must be positive");
        if (dropout_.empty()) dropout_.assign(hidden_count(), S(0));
        if (static_cast<int>(dropout_.size()) != hidden_count())
            throw ShapeError("one dropout probability per hidden layer expected");
        for (S p : dropout_)
            if (p < S(0) || p >= S(1))
                throw InputError("dropout probability must lie in [0, 1)");
        layers_.resize(layer_count());
        for (int l = 0; l < layer_count(); ++l) {
            layers_[l].weights = MatrixX<S>::Zero(dims_[l + 1], dims_[l]);
            layers_[l].bias = VectorX<S>::Zero(dims_[l + 1]);
        }
    }

    DenseNetwork(const std::vector<int>& dims, OutputKind kind, S dropout_all)
        : DenseNetwork(dims, kind,
                       std::vector<S>(dims.size() >= 2 ? dims.size() - 2 : 0,
                                      dropout_all)) {}

    /// Glorot-uniform initialization: weights ~ U(-b, b) with
    /// b = sqrt(6 / (fan_in + fan_out)), biases zero. Draw order is layer by
    /// layer, column-major within each weight matrix.
    static DenseNetwork initialized(std::vector<int> dims, OutputKind kind,
                                    std::vector<S> dropout, Rng& rng) {
        DenseNetwork net(std::move(dims), kind, std::move(dropout));
        for (auto& layer : net.layers_) {
            const double bound =
                std::sqrt(6.0 / static_cast<double>(layer.fan_in() + layer.fan_out()));
            S* p = layer.weights.data();
            for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
                p[i] = static_cast<S>((2.0 * rng.uniform01() - 1.0) * bound);
        }
        return net;
    }

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
    int hidden_count() const { return layer_count() - 1; }
    const std::vector<int>& dims() const { return dims_; }
    OutputKind output_kind() const { return kind_; }
    const std::vector<S>& dropout() const { return dropout_; }
    bool has_dropout() const {
        for (S p : dropout_)
            if (p > S(0)) return true;
        return false;
    }

    std::vector<LinearLayer<S>>& layers() { return layers_; }
    const std::vector<LinearLayer<S>>& layers() const { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Draw dropout masks for `batch` stochastic passes. Draw order is
    /// pass-major: pass 0's layers before pass 1's, units in layer order
    /// within a pass. A layer with probability 0 yields all-ones bits but
    /// still consumes one draw per unit, keeping stream positions fixed.
    DropoutMask<S> sample_mask(Eigen::Index batch, Rng& rng) const {
        DropoutMask<S> mask;
        mask.keep.resize(hidden_count());
        mask.bits.resize(hidden_count());
        for (int l = 0; l < hidden_count(); ++l) {
            mask.keep[l] = S(1) - dropout_[l];
            mask.bits[l].resize(dims_[l + 1], batch);
        }
        for (Eigen::Index t = 0; t < batch; ++t)
            for (int l = 0; l < hidden_count(); ++l) {
                const double keep = static_cast<double>(mask.keep[l]);
                for (Eigen::Index u = 0; u < mask.bits[l].rows(); ++u)
                    mask.bits[l](u, t) = rng.bernoulli(keep) ? S(1) : S(0);
            }
        return mask;
    }

    /// Batched forward pass. input is (input_dim x batch). mask may be null
    /// for a deterministic pass; otherwise its batch must match.
    void forward(const Eigen::Ref<const MatrixX<S>>& input,
                 const DropoutMask<S>* mask, Trace& tr) const {
        if (input.rows() != input_dim())
            throw ShapeError("forward: input has " + std::to_string(input.rows()) +
                             " rows, network expects " + std::to_string(input_dim()));
        if (mask && !mask->empty() && mask->batch() != input.cols())
            throw ShapeError("forward: dropout mask batch mismatch");
        tr.pre.resize(layer_count());
        tr.post.resize(hidden_count());
        const MatrixX<S>* a = nullptr;
        for (int l = 0; l < layer_count(); ++l) {
            const auto& L = layers_[l];
            if (l == 0)
                tr.pre[l].noalias() = L.weights * input;
            else
                tr.pre[l].noalias() = L.weights * (*a);
            tr.pre[l].colwise() += L.bias;
            if (l < hidden_count()) {
                apply_activation(l, mask, tr);
                a = &tr.post[l];
            }
        }
    }

    /// Forward of `batch` stochastic passes over one shared input vector.
    /// Mathematically identical to forward() on x replicated batch times,
    /// but the first layer's affine map is computed once. This is the hot
    /// path of Monte-Carlo certainty estimation.
    void forward_shared_input(const Eigen::Ref<const VectorX<S>>& x,
                              Eigen::Index batch, const DropoutMask<S>* mask,
                              Trace& tr) const {
        if (x.rows() != input_dim())
            throw ShapeError("forward_shared_input: bad input length");
        if (batch <= 0) throw InputError("forward_shared_input: batch must be positive");
        if (mask && !mask->empty() && mask->batch() != batch)
            throw ShapeError("forward_shared_input: dropout mask batch mismatch");
        tr.pre.resize(layer_count());
        tr.post.resize(hidden_count());
        VectorX<S> first = layers_[0].weights * x + layers_[0].bias;
        tr.pre[0] = first.replicate(1, batch);
        if (hidden_count() == 0) return;
        apply_activation(0, mask, tr);
        const MatrixX<S>* a = &tr.post[0];
        for (int l = 1; l < layer_count(); ++l) {
            const auto& L = layers_[l];
            tr.pre[l].noalias() = L.weights * (*a);
            tr.pre[l].colwise() += L.bias;
            if (l < hidden_count()) {
                apply_activation(l, mask, tr);
                a = &tr.post[l];
            }
        }
    }

    /// Convenience single-vector forward; returns the output vector.
    VectorX<S> forward_vec(const Eigen::Ref<const VectorX<S>>& x,
                           const DropoutMask<S>* mask = nullptr) const {
        Trace tr;
        forward(x, mask, tr);
        return tr.output().col(0);
    }

private:
    void apply_activation(int l, const DropoutMask<S>* mask, Trace& tr) const {
        tr.post[l] = tr.pre[l].cwiseMax(S(0));
        if (mask && !mask->empty()) {
            const S inv_keep = S(1) / mask->keep[l];
            tr.post[l].array() *= mask->bits[l].array() * inv_keep;
        }
    }

    std::vector<int> dims_;
    OutputKind kind_ = OutputKind::Logits;
    std::vector<S> dropout_;
    std::vector<LinearLayer<S>> layers_;
};

} // namespace featq
