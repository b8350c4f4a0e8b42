#include "satadv/netcore.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace satadv {

namespace {

Vector sigmoid(const Vector& z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

struct Gates {
    Vector i, f, g, o;
};

Gates activate(const Vector& z, Index u) {
    return Gates{sigmoid(z.segment(0, u)), sigmoid(z.segment(u, u)),
                 z.segment(2 * u, u).array().tanh().matrix(),
                 sigmoid(z.segment(3 * u, u))};
}

// Gate pre-activation gradient for one step. `dc` is the total gradient
// reaching the cell state (from the next step and through h).
Vector gate_grad(const Vector& i, const Vector& f, const Vector& g, const Vector& o,
                 const Vector& tanh_c, const Vector& c_prev, const Vector& d_h,
                 const Vector& dc) {
    const Index u = i.size();
    Vector dz(4 * u);
    const auto d_o = d_h.array() * tanh_c.array();
    dz.segment(0, u) = (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
    dz.segment(u, u) = (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    dz.segment(2 * u, u) = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();
    dz.segment(3 * u, u) = (d_o * o.array() * (1.0 - o.array())).matrix();
    return dz;
}

void require_params(const LstmParams& p) {
    const Index u = p.w_h.cols();
    require_shape(p.w_h, 4 * u, u, "LSTM w_h");
    require_shape(p.w_x, 4 * u, p.w_x.cols(), "LSTM w_x");
    require_shape(p.b, 4 * u, 1, "LSTM b");
}

LstmTrace run_direction(const LstmParams& p, const Matrix& x, Index n, bool reverse) {
    const Index u = p.hidden();
    Matrix zx = x.topRows(n) * p.w_x.transpose();
    zx.rowwise() += p.b.transpose();
    LstmTrace tr{Matrix(n, 4 * u), Matrix(n, u), Matrix(n, u), Matrix(n, u)};
    Vector h = Vector::Zero(u);
    Vector c = Vector::Zero(u);
    for (Index k = 0; k < n; ++k) {
        const Index t = reverse ? n - 1 - k : k;
        const Vector z = zx.row(t).transpose() + p.w_h * h;
        const Gates gt = activate(z, u);
        c = gt.f.cwiseProduct(c) + gt.i.cwiseProduct(gt.g);
        const Vector tanh_c = c.array().tanh().matrix();
        h = gt.o.cwiseProduct(tanh_c);
        if (!z.allFinite() || !c.allFinite()) {
            throw NumericError("numeric overflow at step " + std::to_string(k));
        }
        tr.gates.row(t) << gt.i.transpose(), gt.f.transpose(), gt.g.transpose(),
            gt.o.transpose();
        tr.c.row(t) = c.transpose();
        tr.tanh_c.row(t) = tanh_c.transpose();
        tr.h.row(t) = h.transpose();
    }
    return tr;
}

void backprop_direction(const LstmParams& p, const LstmTrace& tr, const Matrix& x,
                        Index n, bool reverse, const Matrix& d_h_dir,
                        LstmParams& d_p, Matrix& d_x) {
    const Index u = p.hidden();
    Matrix dz(n, 4 * u);
    Matrix h_prev = Matrix::Zero(n, u);
    Vector dh_next = Vector::Zero(u);
    Vector dc_next = Vector::Zero(u);
    const Vector zero = Vector::Zero(u);
    for (Index k = n - 1; k >= 0; --k) {
        const Index t = reverse ? n - 1 - k : k;
        const Index tp = reverse ? t + 1 : t - 1;
        const Vector c_prev = k > 0 ? Vector(tr.c.row(tp).transpose()) : zero;
        if (k > 0) {
            h_prev.row(t) = tr.h.row(tp);
        }
        const Vector i = tr.gates.row(t).segment(0, u).transpose();
        const Vector f = tr.gates.row(t).segment(u, u).transpose();
        const Vector g = tr.gates.row(t).segment(2 * u, u).transpose();
        const Vector o = tr.gates.row(t).segment(3 * u, u).transpose();
        const Vector tanh_c = tr.tanh_c.row(t).transpose();
        const Vector d_h = d_h_dir.row(t).transpose() + dh_next;
        const Vector dc = dc_next + (d_h.array() * o.array() *
                                     (1.0 - tanh_c.array().square())).matrix();
        const Vector dzt = gate_grad(i, f, g, o, tanh_c, c_prev, d_h, dc);
        dz.row(t) = dzt.transpose();
        dh_next = p.w_h.transpose() * dzt;
        dc_next = dc.cwiseProduct(f);
    }
    d_p.w_x.noalias() += dz.transpose() * x.topRows(n);
    d_p.w_h.noalias() += dz.transpose() * h_prev;
    d_p.b += dz.colwise().sum().transpose();
    d_x.topRows(n).noalias() += dz * p.w_x;
}

}  // namespace

// ---------------------------------------------------------------- linear map

Vector linear_forward(const Matrix& w, const Vector& b, const Vector& x) {
    if (w.cols() != x.size() || w.rows() != b.size()) {
        throw ShapeError("linear_forward: W is " + shape_of(w) + ", x is " +
                         shape_of(x) + ", b is " + shape_of(b));
    }
    return w * x + b;
}

LinearGrad linear_backward(const Matrix& w, const Vector& x, const Vector& d_y) {
    if (w.cols() != x.size() || w.rows() != d_y.size()) {
        throw ShapeError("linear_backward: W is " + shape_of(w) + ", x is " +
                         shape_of(x) + ", g is " + shape_of(d_y));
    }
    return LinearGrad{d_y * x.transpose(), d_y, w.transpose() * d_y};
}

// ----------------------------------------------------------------- LSTM cell

LstmParams LstmParams::zeros(Index input, Index hidden) {
    return LstmParams{Matrix::Zero(4 * hidden, input), Matrix::Zero(4 * hidden, hidden),
                      Vector::Zero(4 * hidden)};
}

LstmStep lstm_cell_forward(const LstmParams& p, const Vector& x, const Vector& h_prev,
                           const Vector& c_prev, std::size_t step) {
    require_params(p);
    const Index u = p.hidden();
    require_shape(x, p.input(), 1, "lstm_cell_forward x");
    require_shape(h_prev, u, 1, "lstm_cell_forward h_prev");
    require_shape(c_prev, u, 1, "lstm_cell_forward c_prev");
    const Vector z = p.w_x * x + p.w_h * h_prev + p.b;
    Gates gt = activate(z, u);
    Vector c = gt.f.cwiseProduct(c_prev) + gt.i.cwiseProduct(gt.g);
    Vector tanh_c = c.array().tanh().matrix();
    Vector h = gt.o.cwiseProduct(tanh_c);
    if (!z.allFinite() || !c.allFinite()) {
        throw NumericError("numeric overflow at step " + std::to_string(step));
    }
    LstmCellCache cache{x, h_prev, c_prev, gt.i, gt.f, gt.g, gt.o, c, tanh_c};
    return LstmStep{std::move(h), std::move(c), std::move(cache)};
}

LstmCellGrad lstm_cell_backward(const LstmParams& p, const LstmCellCache& cache,
                                const Vector& d_h, const Vector& d_c) {
    const Index u = p.hidden();
    require_shape(d_h, u, 1, "lstm_cell_backward d_h");
    require_shape(d_c, u, 1, "lstm_cell_backward d_c");
    const Vector dc = d_c + (d_h.array() * cache.o.array() *
                             (1.0 - cache.tanh_c.array().square())).matrix();
    const Vector dz = gate_grad(cache.i, cache.f, cache.g, cache.o, cache.tanh_c,
                                cache.c_prev, d_h, dc);
    LstmCellGrad grad;
    grad.d_params.w_x = dz * cache.x.transpose();
    grad.d_params.w_h = dz * cache.h_prev.transpose();
    grad.d_params.b = dz;
    grad.d_x = p.w_x.transpose() * dz;
    grad.d_h_prev = p.w_h.transpose() * dz;
    grad.d_c_prev = dc.cwiseProduct(cache.f);
    return grad;
}

// -------------------------------------------------------- bidirectional LSTM

BiLstmOutput bilstm_forward(const BiLstmParams& p, const Matrix& x, Index true_len) {
    require_params(p.fwd);
    require_params(p.bwd);
    if (true_len < 1) {
        throw std::invalid_argument("bilstm_forward: true_len must be >= 1");
    }
    if (true_len > x.rows()) {
        throw ShapeError("bilstm_forward: true_len " + std::to_string(true_len) +
                         " exceeds " + std::to_string(x.rows()) + " input rows");
    }
    if (x.cols() != p.fwd.input() || x.cols() != p.bwd.input()) {
        throw ShapeError("bilstm_forward: input is " + shape_of(x) + ", w_x is " +
                         shape_of(p.fwd.w_x));
    }
    BiLstmOutput out;
    out.cache.x = x;
    out.cache.length = true_len;
    out.cache.fwd = run_direction(p.fwd, x, true_len, false);
    out.cache.bwd = run_direction(p.bwd, x, true_len, true);
    const Index u = p.fwd.hidden();
    out.h.resize(true_len, u + p.bwd.hidden());
    out.h.leftCols(u) = out.cache.fwd.h;
    out.h.rightCols(p.bwd.hidden()) = out.cache.bwd.h;
    return out;
}

BiLstmGrad bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                           const Matrix& d_h) {
    const Index n = cache.length;
    const Index uf = p.fwd.hidden();
    const Index ub = p.bwd.hidden();
    require_shape(d_h, n, uf + ub, "bilstm_backward d_h");
    BiLstmGrad grad{BiLstmParams{LstmParams::zeros(p.fwd.input(), uf),
                                 LstmParams::zeros(p.bwd.input(), ub)},
                    Matrix::Zero(cache.x.rows(), cache.x.cols())};
    backprop_direction(p.fwd, cache.fwd, cache.x, n, false, d_h.leftCols(uf),
                       grad.d_params.fwd, grad.d_x);
    backprop_direction(p.bwd, cache.bwd, cache.x, n, true, d_h.rightCols(ub),
                       grad.d_params.bwd, grad.d_x);
    return grad;
}

// ---------------------------------------------------- structured self-attention

AttentionParams AttentionParams::zeros(Index features, Index internal) {
    return AttentionParams{Matrix::Zero(internal, features), Vector::Zero(internal)};
}

AttentionOutput self_attention_forward(const AttentionParams& p, const Matrix& h,
                                       Index valid_len) {
    const Index n = h.rows();
    const Index valid = valid_len < 0 ? n : valid_len;
    if (valid < 1 || valid > n) {
        throw ShapeError("self_attention_forward: " + std::to_string(valid) +
                         " valid rows of " + std::to_string(n));
    }
    if (p.w1.cols() != h.cols() || p.w2.size() != p.w1.rows()) {
        throw ShapeError("self_attention_forward: W_s1 is " + shape_of(p.w1) +
                         ", w_s2 is " + shape_of(p.w2) + ", H is " + shape_of(h));
    }
    AttentionOutput out;
    const auto hv = h.topRows(valid);
    out.cache.s = (p.w1 * hv.transpose()).array().tanh().matrix();
    const Vector scores = out.cache.s.transpose() * p.w2;
    const double top = scores.maxCoeff();
    const Vector e = (scores.array() - top).exp().matrix();
    out.a = Vector::Zero(n);
    out.a.head(valid) = e / e.sum();
    out.m = hv.transpose() * out.a.head(valid);
    out.cache.h = h;
    out.cache.a = out.a;
    out.cache.valid = valid;
    return out;
}

AttentionGrad self_attention_backward(const AttentionParams& p,
                                      const AttentionCache& cache, const Vector& d_m) {
    const Index valid = cache.valid;
    require_shape(d_m, cache.h.cols(), 1, "self_attention_backward d_m");
    const auto hv = cache.h.topRows(valid);
    const Vector av = cache.a.head(valid);
    AttentionGrad grad{AttentionParams::zeros(p.w1.cols(), p.w1.rows()),
                       Matrix::Zero(cache.h.rows(), cache.h.cols())};
    grad.d_h.topRows(valid) = av * d_m.transpose();
    const Vector da = hv * d_m;
    const Vector ds = av.cwiseProduct((da.array() - av.dot(da)).matrix());
    grad.d_params.w2 = cache.s * ds;
    const Matrix du =
        ((p.w2 * ds.transpose()).array() * (1.0 - cache.s.array().square())).matrix();
    grad.d_params.w1 = du * hv;
    grad.d_h.topRows(valid).noalias() += du.transpose() * p.w1;
    return grad;
}

// ------------------------------------------------------ softmax cross-entropy

SoftmaxXent softmax_xent_forward(const Vector& logits, Index y) {
    const Index k = logits.size();
    if (k < 2) {
        throw ShapeError("softmax_xent_forward: need at least 2 classes, got " +
                         std::to_string(k));
    }
    if (y < 0 || y >= k) {
        throw std::out_of_range("softmax_xent_forward: class " + std::to_string(y) +
                                " outside [0, " + std::to_string(k) + ")");
    }
    const double top = logits.maxCoeff();
    const Vector e = (logits.array() - top).exp().matrix();
    const double z = e.sum();
    SoftmaxXent out;
    out.p = e / z;
    // -log p[y] = logsumexp(logits) - logits[y]
    out.loss = (top + std::log(z)) - logits[y];
    return out;
}

Vector softmax_xent_backward(const Vector& p, Index y) {
    if (y < 0 || y >= p.size()) {
        throw std::out_of_range("softmax_xent_backward: class out of range");
    }
    Vector d = p;
    d[y] -= 1.0;
    return d;
}

// --------------------------------------------------------- gradient reversal

GradientReversal::GradientReversal(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("gradient reversal: lambda must be >= 0");
    }
}

Vector GradientReversal::backward(const Vector& g) const {
    return -lambda_ * g;
}

Vector grad_reverse(const Vector& g, double lambda) {
    return GradientReversal(lambda).backward(g);
}

// ---------------------------------------------------------------------- Adam

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) +
                         " parameter arrays but " + std::to_string(grads.size()) +
                         " gradient arrays");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size()) {
            throw ShapeError("adam_step: array " + std::to_string(k) + " has " +
                             std::to_string(params[k].size()) + " values but " +
                             std::to_string(grads[k].size()) + " gradients");
        }
        for (double g : grads[k]) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in array " +
                                   std::to_string(k));
            }
        }
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    } else if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: state does not match parameters");
    }
    const AdamConfig& c = state.config;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double lr = c.lr / (1.0 + c.decay * t);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != params[k].size()) {
            throw ShapeError("adam_step: state does not match parameters");
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = grads[k][i];
            if (g == 0.0) {
                continue;
            }
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            params[k][i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

}  // namespace satadv
