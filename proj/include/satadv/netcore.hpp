#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "satadv/tensor.hpp"

namespace satadv {

// ---------------------------------------------------------------- linear map

Vector linear_forward(const Matrix& w, const Vector& b, const Vector& x);

struct LinearGrad {
    Matrix d_w;
    Vector d_b;
    Vector d_x;
};

LinearGrad linear_backward(const Matrix& w, const Vector& x, const Vector& d_y);

// ----------------------------------------------------------------- LSTM cell

/// Gate blocks are stacked row-wise in the order input, forget, candidate,
/// output; each block has `hidden` rows.
struct LstmParams {
    Matrix w_x;  // 4u x input
    Matrix w_h;  // 4u x u
    Vector b;    // 4u

    static LstmParams zeros(Index input, Index hidden);

    Index input() const { return w_x.cols(); }
    Index hidden() const { return w_h.cols(); }

    template <class F>
    void visit(F&& f) {
        f("w_x", w_x);
        f("w_h", w_h);
        f("b", b);
    }
    template <class F>
    void visit(F&& f) const {
        f("w_x", w_x);
        f("w_h", w_h);
        f("b", b);
    }
};

struct LstmCellCache {
    Vector x, h_prev, c_prev;
    Vector i, f, g, o;  // activated gates
    Vector c, tanh_c;
};

struct LstmStep {
    Vector h;
    Vector c;
    LstmCellCache cache;
};

/// One LSTM step. `step` only labels the NumericError raised when an
/// intermediate value is not finite.
LstmStep lstm_cell_forward(const LstmParams& p, const Vector& x,
                           const Vector& h_prev, const Vector& c_prev,
                           std::size_t step = 0);

struct LstmCellGrad {
    LstmParams d_params;
    Vector d_x;
    Vector d_h_prev;
    Vector d_c_prev;
};

LstmCellGrad lstm_cell_backward(const LstmParams& p, const LstmCellCache& cache,
                                const Vector& d_h, const Vector& d_c);

// -------------------------------------------------------- bidirectional LSTM

struct BiLstmParams {
    LstmParams fwd;
    LstmParams bwd;

    template <class F>
    void visit(F&& f) {
        fwd.visit([&](std::string_view n, auto& t) { f(prefixed("fwd.", n), t); });
        bwd.visit([&](std::string_view n, auto& t) { f(prefixed("bwd.", n), t); });
    }
    template <class F>
    void visit(F&& f) const {
        fwd.visit([&](std::string_view n, const auto& t) { f(prefixed("fwd.", n), t); });
        bwd.visit([&](std::string_view n, const auto& t) { f(prefixed("bwd.", n), t); });
    }

    static std::string prefixed(std::string_view prefix, std::string_view name) {
        return std::string(prefix) + std::string(name);
    }
};

/// Per-direction activations, indexed by sequence position.
struct LstmTrace {
    Matrix gates;   // n x 4u, activated i|f|g|o
    Matrix c;       // n x u
    Matrix tanh_c;  // n x u
    Matrix h;       // n x u
};

struct BiLstmCache {
    Matrix x;  // input rows as given (may include PAD rows)
    Index length = 0;
    LstmTrace fwd;
    LstmTrace bwd;
};

struct BiLstmOutput {
    Matrix h;  // length x 2u, row t = [h_fwd(t) | h_bwd(t)]
    BiLstmCache cache;
};

/// Runs both directions over rows [0, true_len) of `x`; later rows are PAD and
/// are ignored.
BiLstmOutput bilstm_forward(const BiLstmParams& p, const Matrix& x, Index true_len);

struct BiLstmGrad {
    BiLstmParams d_params;
    Matrix d_x;  // same shape as the cached input; PAD rows are zero
};

BiLstmGrad bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                           const Matrix& d_h);

// ---------------------------------------------------- structured self-attention

/// Single-hop attention: a = softmax(w2 . tanh(W1 H^T)), m = H^T a.
struct AttentionParams {
    Matrix w1;  // d_a x 2u
    Vector w2;  // d_a

    static AttentionParams zeros(Index features, Index internal);

    template <class F>
    void visit(F&& f) {
        f("w1", w1);
        f("w2", w2);
    }
    template <class F>
    void visit(F&& f) const {
        f("w1", w1);
        f("w2", w2);
    }
};

struct AttentionCache {
    Matrix h;     // n x 2u
    Matrix s;     // d_a x valid, tanh activations
    Vector a;     // n
    Index valid = 0;
};

struct AttentionOutput {
    Vector m;
    Vector a;
    AttentionCache cache;
};

/// Rows at or beyond `valid_len` are masked (score -inf, weight 0). A negative
/// `valid_len` means all rows are valid.
AttentionOutput self_attention_forward(const AttentionParams& p, const Matrix& h,
                                       Index valid_len = -1);

struct AttentionGrad {
    AttentionParams d_params;
    Matrix d_h;
};

AttentionGrad self_attention_backward(const AttentionParams& p,
                                      const AttentionCache& cache, const Vector& d_m);

// ------------------------------------------------------ softmax cross-entropy

struct SoftmaxXent {
    double loss = 0.0;
    Vector p;
};

SoftmaxXent softmax_xent_forward(const Vector& logits, Index y);
Vector softmax_xent_backward(const Vector& p, Index y);

// --------------------------------------------------------- gradient reversal

/// Identity on the forward pass; the backward pass returns -lambda * g.
class GradientReversal {
public:
    explicit GradientReversal(double lambda);

    double lambda() const { return lambda_; }

    template <class T>
    const T& forward(const T& x) const {
        return x;
    }
    Vector backward(const Vector& g) const;

private:
    double lambda_;
};

Vector grad_reverse(const Vector& g, double lambda);

// ---------------------------------------------------------------------- Adam

struct AdamConfig {
    double lr = 1e-4;
    double decay = 1e-6;  // inverse-time decay: lr_t = lr / (1 + decay * t)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::uint64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(AdamConfig c = {}) : config(c) {}
};

/// One Adam update over matched arrays. Entries whose gradient is exactly zero
/// are skipped (moments and value untouched), so a zero gradient never moves a
/// parameter. Moment buffers are allocated on the first call. A non-finite
/// gradient raises NumericError before anything is modified.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

template <class P>
void adam_step(P& params, const P& grads, AdamState& state) {
    const auto ps = spans_of(params);
    const auto gs = spans_of(grads);
    adam_step(std::span<const std::span<double>>(ps),
              std::span<const std::span<const double>>(gs), state);
}

}  // namespace satadv
