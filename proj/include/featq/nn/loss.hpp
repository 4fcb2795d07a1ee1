#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <featq/nn/network.hpp>

namespace featq {

/// Parameter-shaped gradient container for a DenseNetwork.
template <typename S>
struct Gradients {
    std::vector<LinearLayer<S>> layers;

    static Gradients zeros_like(const DenseNetwork<S>& net) {
        Gradients g;
        g.layers.resize(net.layer_count());
        for (int l = 0; l < net.layer_count(); ++l) {
            g.layers[l].weights =
                MatrixX<S>::Zero(net.layers()[l].weights.rows(),
                                 net.layers()[l].weights.cols());
            g.layers[l].bias = VectorX<S>::Zero(net.layers()[l].bias.rows());
        }
        return g;
    }

    bool all_finite() const {
        for (const auto& l : layers)
            if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
        return true;
    }
};

/// Numerically stable softmax of one column vector.
template <typename S>
VectorX<S> softmax(const ConstRefV<S>& logits) {
    if (logits.size() == 0) throw ShapeError("softmax of empty vector");
    VectorX<S> z = (logits.array() - logits.maxCoeff()).exp();
    return z / z.sum();
}

/// Column-wise stable softmax.
template <typename S>
MatrixX<S> softmax_columns(const ConstRefM<S>& logits) {
    if (logits.rows() == 0 || logits.cols() == 0)
        throw ShapeError("softmax of empty matrix");
    MatrixX<S> z =
        (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
    Eigen::Array<S, 1, Eigen::Dynamic> sums = z.colwise().sum();
    z.array().rowwise() /= sums;
    return z;
}

template <typename S>
struct LossResult {
    double loss = 0;
    Gradients<S> grads;
};

namespace detail {

/// Shared reverse pass: given a forward trace and dL/d(output), accumulate
/// parameter gradients. The dropout mask used in the forward pass must be
/// passed again so the same scaling enters the backward pass.
template <typename S>
void backward(const DenseNetwork<S>& net, const ConstRefM<S>& input,
              const typename DenseNetwork<S>::Trace& tr, const DropoutMask<S>* mask,
              MatrixX<S> d_out, Gradients<S>& g, MatrixX<S>* d_input = nullptr) {
    const int L = net.layer_count();
    g.layers.resize(L);
    for (int l = L - 1; l >= 0; --l) {
        const auto& lay = net.layers()[l];
        Eigen::Ref<const MatrixX<S>> a_prev =
            (l == 0) ? input : Eigen::Ref<const MatrixX<S>>(tr.post[l - 1]);
        g.layers[l].weights.noalias() = d_out * a_prev.transpose();
        g.layers[l].bias = d_out.rowwise().sum();
        if (l > 0) {
            MatrixX<S> da = lay.weights.transpose() * d_out;
            // ReLU gate, then the same inverted-dropout scaling as forward
            da.array() *= (tr.pre[l - 1].array() > S(0)).template cast<S>();
            if (mask && !mask->empty()) {
                const S inv_keep = S(1) / mask->keep[l - 1];
                da.array() *= mask->bits[l - 1].array() * inv_keep;
            }
            d_out = std::move(da);
        } else if (d_input) {
            d_input->noalias() = lay.weights.transpose() * d_out;
        }
    }
}

} // namespace detail

/// Cross-entropy loss and gradients for a batch. labels[i] is the class of
/// column i. Loss is the mean negative log-likelihood over the batch.
template <typename S>
LossResult<S> cross_entropy_loss_and_gradients(const DenseNetwork<S>& net,
                                               const ConstRefM<S>& input,
                                               MaskPtr<S> mask,
                                               const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != input.cols())
        throw ShapeError("cross entropy: one label per input column expected");
    const int n_classes = net.output_dim();
    for (int y : labels)
        if (y < 0 || y >= n_classes)
            throw InputError("class index " + std::to_string(y) +
                             " outside [0, " + std::to_string(n_classes) + ")");
    typename DenseNetwork<S>::Trace tr;
    net.forward(input, mask, tr);
    const auto& out = tr.output();
    const Eigen::Index B = input.cols();

    MatrixX<S> probs = softmax_columns<S>(out);
    double loss = 0;
    for (Eigen::Index i = 0; i < B; ++i) {
        // stable -log p_y via log-sum-exp
        const S m = out.col(i).maxCoeff();
        const double lse =
            static_cast<double>(m) +
            std::log(static_cast<double>((out.col(i).array() - m).exp().sum()));
        loss += lse - static_cast<double>(out(labels[i], i));
    }
    loss /= static_cast<double>(B);

    MatrixX<S> d_out = probs;
    for (Eigen::Index i = 0; i < B; ++i) d_out(labels[i], i) -= S(1);
    d_out /= static_cast<S>(B);

    LossResult<S> res;
    res.loss = loss;
    detail::backward(net, input, tr, mask, std::move(d_out), res.grads);
    return res;
}

/// Mean squared error over selected output coordinates of a single input.
/// With no selector every coordinate participates. Loss is the mean of
/// squared residuals over the selected set.
template <typename S>
LossResult<S> mse_loss_and_gradients(const DenseNetwork<S>& net,
                                     const ConstRefV<S>& input,
                                     MaskPtr<S> mask,
                                     const ConstRefV<S>& target,
                                     const std::vector<int>& selected = {}) {
    typename DenseNetwork<S>::Trace tr;
    net.forward(input, mask, tr);
    const auto& out = tr.output();

    std::vector<int> coords = selected;
    if (coords.empty()) {
        coords.resize(net.output_dim());
        for (int i = 0; i < net.output_dim(); ++i) coords[i] = i;
    }
    for (int c : coords)
        if (c < 0 || c >= net.output_dim())
            throw InputError("selected output coordinate out of range");
    if (selected.empty() && target.size() != net.output_dim())
        throw ShapeError("mse: target length must equal output dim");
    if (!selected.empty() &&
        target.size() != static_cast<Eigen::Index>(coords.size()))
        throw ShapeError("mse: one target per selected coordinate expected");

    const double inv_n = 1.0 / static_cast<double>(coords.size());
    double loss = 0;
    MatrixX<S> d_out = MatrixX<S>::Zero(net.output_dim(), 1);
    for (std::size_t k = 0; k < coords.size(); ++k) {
        const S t = target(static_cast<Eigen::Index>(k));
        const S diff = out(coords[k], 0) - t;
        loss += static_cast<double>(diff) * static_cast<double>(diff) * inv_n;
        d_out(coords[k], 0) += S(2) * diff * static_cast<S>(inv_n);
    }

    LossResult<S> res;
    res.loss = loss;
    detail::backward(net, input, tr, mask, std::move(d_out), res.grads);
    return res;
}

/// Batched MSE where each column i contributes only its coordinate coords[i]
/// against scalar target targets[i]; loss is the batch mean of squared
/// residuals. This is the action-value regression shape.
template <typename S>
LossResult<S> mse_selected_loss_and_gradients_batch(
    const DenseNetwork<S>& net, const ConstRefM<S>& input,
    MaskPtr<S> mask, const std::vector<int>& coords,
    const VectorX<S>& targets) {
    const Eigen::Index B = input.cols();
    if (static_cast<Eigen::Index>(coords.size()) != B ||
        targets.size() != B)
        throw ShapeError("batched mse: coords/targets must match batch size");
    for (int c : coords)
        if (c < 0 || c >= net.output_dim())
            throw InputError("selected output coordinate out of range");
    typename DenseNetwork<S>::Trace tr;
    net.forward(input, mask, tr);
    const auto& out = tr.output();

    double loss = 0;
    MatrixX<S> d_out = MatrixX<S>::Zero(net.output_dim(), B);
    const S invB = S(1) / static_cast<S>(B);
    for (Eigen::Index i = 0; i < B; ++i) {
        const S diff = out(coords[i], i) - targets(i);
        loss += static_cast<double>(diff) * static_cast<double>(diff);
        d_out(coords[i], i) = S(2) * diff * invB;
    }
    loss /= static_cast<double>(B);

    LossResult<S> res;
    res.loss = loss;
    detail::backward(net, input, tr, mask, std::move(d_out), res.grads);
    return res;
}

} // namespace featq
