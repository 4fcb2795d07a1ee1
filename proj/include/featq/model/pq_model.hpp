#pragma once

#include <featq/nn/adam.hpp>
#include <featq/uncertainty/certainty.hpp>

namespace featq {

/// Joint architecture of the predictor network P and action-value network Q.
/// P and Q have the same number of hidden layers. With sharing enabled, the
/// output of Q's hidden layer l is the concatenation [P_l ; own_l] of P's
/// layer-l activations (computed without dropout, treated as constants) and
/// Q's own units, so Q's layer input widths are p_hidden[l-1] + q_own[l-1]
/// for l >= 1 and the raw input width for layer 0. The value head reads
/// [P_last ; own_last]. Without sharing, Q is a plain dense network.
template <typename S>
struct PQArchitecture {
    int input_dim = 0;
    int n_classes = 0;
    int n_actions = 0;
    std::vector<int> p_hidden;
    std::vector<int> q_own;
    bool sharing = true;
    S p_dropout = S(0.5);

    void validate() const {
        if (input_dim <= 0 || n_classes <= 0 || n_actions <= 0)
            throw ShapeError("architecture dims must be positive");
        if (p_hidden.empty() || p_hidden.size() != q_own.size())
            throw ShapeError(
                "P and Q need the same, nonzero number of hidden layers");
        for (int w : p_hidden)
            if (w <= 0) throw ShapeError("P hidden widths must be positive");
        for (int w : q_own)
            if (w <= 0) throw ShapeError("Q hidden widths must be positive");
        if (p_dropout < S(0) || p_dropout >= S(1))
            throw InputError("dropout probability must lie in [0, 1)");
    }

    int depth() const { return static_cast<int>(p_hidden.size()); }

    /// Input width of Q layer l (0-based; l == depth() is the head).
    int q_input_dim(int l) const {
        if (l == 0) return input_dim;
        if (sharing) return p_hidden[l - 1] + q_own[l - 1];
        return q_own[l - 1];
    }
};

/// Hidden-layer widths for a no-sharing Q matching the per-layer parameter
/// counts of the sharing architecture. Layer 0 sees the same input either
/// way, so m_0 = q_own[0]; deeper layers solve m_l * m_{l-1} =
/// own_l * (p_{l-1} + own_{l-1}) greedily. The head is left as-is (its
/// count cannot also be matched exactly).
inline std::vector<int> matched_widths_without_sharing(
    int input_dim, const std::vector<int>& p_hidden,
    const std::vector<int>& q_own) {
    (void)input_dim;
    std::vector<int> m(q_own.size());
    if (q_own.empty()) return m;
    m[0] = q_own[0];
    for (std::size_t l = 1; l < q_own.size(); ++l) {
        const double target =
            static_cast<double>(q_own[l]) * (p_hidden[l - 1] + q_own[l - 1]);
        m[l] = std::max(1, static_cast<int>(std::lround(target / m[l - 1])));
    }
    return m;
}

/// Predictor network P, action-value network Q and its slow-moving target
/// copy, wired per PQArchitecture. P carries dropout on every hidden layer;
/// Q carries none. Gradients of the Q loss never reach P: the backward pass
/// discards the shared rows when splitting each layer's input gradient.
template <typename S>
class PQModel {
public:
    struct QTrace {
        typename DenseNetwork<S>::Trace p;  // maskless P pass
        std::vector<MatrixX<S>> input;      // concat input per Q layer (l >= 1)
        std::vector<MatrixX<S>> pre;        // per Q layer incl head
        std::vector<MatrixX<S>> post;       // per Q hidden layer
        const MatrixX<S>& values() const { return pre.back(); }
    };

    PQModel() = default;

    /// Zero-parameter model of the given shape (used when loading saved
    /// parameters).
    explicit PQModel(PQArchitecture<S> arch) : arch_(std::move(arch)) {
        arch_.validate();
        std::vector<int> p_dims;
        p_dims.push_back(arch_.input_dim);
        p_dims.insert(p_dims.end(), arch_.p_hidden.begin(), arch_.p_hidden.end());
        p_dims.push_back(arch_.n_classes);
        p_ = DenseNetwork<S>(p_dims, OutputKind::Logits,
                             std::vector<S>(arch_.p_hidden.size(), arch_.p_dropout));
        const int L = arch_.depth();
        q_.resize(L + 1);
        for (int l = 0; l <= L; ++l) {
            const int in = arch_.q_input_dim(l);
            const int out = (l == L) ? arch_.n_actions : arch_.q_own[l];
            q_[l].weights = MatrixX<S>::Zero(out, in);
            q_[l].bias = VectorX<S>::Zero(out);
        }
        target_q_ = q_;
    }

    /// Initializes P then Q (Glorot uniform, in that draw order); the target
    /// network starts as an exact copy of Q.
    PQModel(PQArchitecture<S> arch, Rng& rng) : arch_(std::move(arch)) {
        arch_.validate();
        std::vector<int> p_dims;
        p_dims.push_back(arch_.input_dim);
        p_dims.insert(p_dims.end(), arch_.p_hidden.begin(), arch_.p_hidden.end());
        p_dims.push_back(arch_.n_classes);
        p_ = DenseNetwork<S>::initialized(
            p_dims, OutputKind::Logits,
            std::vector<S>(arch_.p_hidden.size(), arch_.p_dropout), rng);

        const int L = arch_.depth();
        q_.resize(L + 1);
        for (int l = 0; l <= L; ++l) {
            const int in = arch_.q_input_dim(l);
            const int out = (l == L) ? arch_.n_actions : arch_.q_own[l];
            const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
            q_[l].weights.resize(out, in);
            S* w = q_[l].weights.data();
            for (Eigen::Index i = 0; i < q_[l].weights.size(); ++i)
                w[i] = static_cast<S>((2.0 * rng.uniform01() - 1.0) * bound);
            q_[l].bias = VectorX<S>::Zero(out);
        }
        target_q_ = q_;
    }

    const PQArchitecture<S>& architecture() const { return arch_; }
    DenseNetwork<S>& p() { return p_; }
    const DenseNetwork<S>& p() const { return p_; }
    std::vector<LinearLayer<S>>& q_layers() { return q_; }
    const std::vector<LinearLayer<S>>& q_layers() const { return q_; }
    std::vector<LinearLayer<S>>& target_q_layers() { return target_q_; }
    const std::vector<LinearLayer<S>>& target_q_layers() const { return target_q_; }

    /// Action values for a batch of (imputed, normalized) input columns.
    MatrixX<S> q_values(const Eigen::Ref<const MatrixX<S>>& input,
                        bool use_target, QTrace* trace = nullptr) const {
        QTrace local;
        QTrace& tr = trace ? *trace : local;
        q_forward(input, use_target ? target_q_ : q_, tr);
        return tr.values();
    }

    VectorX<S> q_values_vec(const Eigen::Ref<const VectorX<S>>& x,
                            bool use_target = false) const {
        return q_values(x, use_target).col(0);
    }

    /// Action-value regression loss: column i contributes coordinate
    /// coords[i] against targets[i]; loss is the batch mean squared
    /// residual. Returns Q gradients; if p_grads is non-null it is filled
    /// with the (structurally zero) gradient of this loss w.r.t. P.
    LossResult<S> q_loss_and_gradients(const Eigen::Ref<const MatrixX<S>>& input,
                                       const std::vector<int>& coords,
                                       const VectorX<S>& targets,
                                       Gradients<S>* p_grads = nullptr) const {
        const Eigen::Index B = input.cols();
        if (static_cast<Eigen::Index>(coords.size()) != B || targets.size() != B)
            throw ShapeError("q loss: coords/targets must match batch size");
        for (int c : coords)
            if (c < 0 || c >= arch_.n_actions)
                throw InputError("action coordinate out of range");

        QTrace tr;
        q_forward(input, q_, tr);
        const auto& out = tr.values();

        double loss = 0;
        MatrixX<S> d_out = MatrixX<S>::Zero(arch_.n_actions, B);
        const S invB = S(1) / static_cast<S>(B);
        for (Eigen::Index i = 0; i < B; ++i) {
            const S diff = out(coords[i], i) - targets(i);
            loss += static_cast<double>(diff) * static_cast<double>(diff);
            d_out(coords[i], i) = S(2) * diff * invB;
        }
        loss /= static_cast<double>(B);

        LossResult<S> res;
        res.loss = loss;
        q_backward(input, tr, std::move(d_out), res.grads);
        if (p_grads) *p_grads = Gradients<S>::zeros_like(p_);
        return res;
    }

    /// theta_target <- (1 - tau) theta_target + tau theta_online, every
    /// parameter of every layer. tau = 1 copies exactly, tau = 0 is a no-op.
    void soft_update(S tau) {
        if (tau < S(0) || tau > S(1))
            throw InputError("soft update rate must lie in [0, 1]");
        for (std::size_t l = 0; l < q_.size(); ++l) {
            target_q_[l].weights =
                (S(1) - tau) * target_q_[l].weights + tau * q_[l].weights;
            target_q_[l].bias =
                (S(1) - tau) * target_q_[l].bias + tau * q_[l].bias;
        }
    }

private:
    void q_forward(const Eigen::Ref<const MatrixX<S>>& input,
                   const std::vector<LinearLayer<S>>& layers, QTrace& tr) const {
        if (input.rows() != arch_.input_dim)
            throw ShapeError("q forward: input has " + std::to_string(input.rows()) +
                             " rows, expected " + std::to_string(arch_.input_dim));
        const int L = arch_.depth();
        p_.forward(input, nullptr, tr.p);
        tr.input.resize(L + 1);
        tr.pre.resize(L + 1);
        tr.post.resize(L);
        for (int l = 0; l <= L; ++l) {
            if (l > 0) {
                if (arch_.sharing) {
                    tr.input[l].resize(arch_.q_input_dim(l), input.cols());
                    tr.input[l].topRows(arch_.p_hidden[l - 1]) = tr.p.post[l - 1];
                    tr.input[l].bottomRows(arch_.q_own[l - 1]) = tr.post[l - 1];
                } else {
                    tr.input[l] = tr.post[l - 1];
                }
            }
            const Eigen::Ref<const MatrixX<S>> in =
                (l == 0) ? input : Eigen::Ref<const MatrixX<S>>(tr.input[l]);
            tr.pre[l].noalias() = layers[l].weights * in;
            tr.pre[l].colwise() += layers[l].bias;
            if (l < L) tr.post[l] = tr.pre[l].cwiseMax(S(0));
        }
    }

    void q_backward(const Eigen::Ref<const MatrixX<S>>& input, const QTrace& tr,
                    MatrixX<S> d_out, Gradients<S>& g) const {
        const int L = arch_.depth();
        g.layers.resize(L + 1);
        for (int l = L; l >= 0; --l) {
            const Eigen::Ref<const MatrixX<S>> in =
                (l == 0) ? input : Eigen::Ref<const MatrixX<S>>(tr.input[l]);
            g.layers[l].weights.noalias() = d_out * in.transpose();
            g.layers[l].bias = d_out.rowwise().sum();
            if (l > 0) {
                MatrixX<S> da = q_[l].weights.transpose() * d_out;
                // with sharing, the top rows belong to P's activations and
                // are dropped: P is a constant input to Q
                MatrixX<S> d_own = arch_.sharing
                                       ? MatrixX<S>(da.bottomRows(arch_.q_own[l - 1]))
                                       : std::move(da);
                d_own.array() *=
                    (tr.pre[l - 1].array() > S(0)).template cast<S>();
                d_out = std::move(d_own);
            }
        }
    }

    PQArchitecture<S> arch_;
    DenseNetwork<S> p_;
    std::vector<LinearLayer<S>> q_;
    std::vector<LinearLayer<S>> target_q_;
};

} // namespace featq
