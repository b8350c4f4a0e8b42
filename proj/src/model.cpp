#include "satadv/model.hpp"

#include <string>

#include "satadv/rng.hpp"

namespace satadv {

namespace {

constexpr double kInitRange = 0.08;

template <class P>
void fill_uniform(P& params, Rng& rng) {
    params.visit([&](std::string_view name, auto& t) {
        // Biases (named "b") start at zero.
        if (name == "b" || name.ends_with(".b")) {
            t.setZero();
            return;
        }
        for (Index i = 0; i < t.size(); ++i) {
            t.data()[i] = rng.uniform(-kInitRange, kInitRange);
        }
    });
}

void check_document(const EncodedDocument& doc, const EmbeddingMatrix& e) {
    if (doc.length < 1) {
        throw std::invalid_argument("document '" + doc.id + "' has no tokens");
    }
    if (doc.length > doc.indices.size()) {
        throw std::invalid_argument("document '" + doc.id + "' is shorter than its length");
    }
    for (std::size_t t = 0; t < doc.length; ++t) {
        if (doc.indices[t] >= static_cast<std::size_t>(e.rows())) {
            throw std::out_of_range("document '" + doc.id + "' index " +
                                    std::to_string(doc.indices[t]) +
                                    " outside embedding table");
        }
    }
}

}  // namespace

FeatureExtractorParams FeatureExtractorParams::zeros(const ModelDims& dims) {
    return FeatureExtractorParams{
        BiLstmParams{LstmParams::zeros(dims.embed, dims.hidden),
                     LstmParams::zeros(dims.embed, dims.hidden)},
        AttentionParams::zeros(dims.features(), dims.attention)};
}

HeadParams HeadParams::zeros(Index classes, Index features) {
    return HeadParams{Matrix::Zero(classes, features), Vector::Zero(classes)};
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
    if (dims.publications < 2) {
        throw std::invalid_argument("model needs at least 2 publication classes");
    }
    return ModelParams{FeatureExtractorParams::zeros(dims),
                       HeadParams::zeros(2, dims.features()),
                       HeadParams::zeros(dims.publications, dims.features())};
}

ModelDims ModelParams::dims() const {
    return ModelDims{extractor.lstm.fwd.input(), extractor.lstm.fwd.hidden(),
                     extractor.attention.w1.rows(), publication.w.rows()};
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(dims);
    Rng extractor_rng = Rng::stream(seed, "init/extractor");
    Rng satire_rng = Rng::stream(seed, "init/satire");
    Rng publication_rng = Rng::stream(seed, "init/publication");
    fill_uniform(p.extractor, extractor_rng);
    fill_uniform(p.satire, satire_rng);
    fill_uniform(p.publication, publication_rng);
    return p;
}

Features extract_features(const FeatureExtractorParams& p, const EncodedDocument& doc,
                          const EmbeddingMatrix& e) {
    check_document(doc, e);
    if (e.dim() != p.lstm.fwd.input()) {
        throw ShapeError("extract_features: embeddings have dimension " +
                         std::to_string(e.dim()) + ", LSTM expects " +
                         std::to_string(p.lstm.fwd.input()));
    }
    const auto n = static_cast<Index>(doc.length);
    Features out;
    out.cache.tokens.assign(doc.indices.begin(),
                            doc.indices.begin() + static_cast<std::ptrdiff_t>(doc.length));
    Matrix x(n, e.dim());
    for (Index t = 0; t < n; ++t) {
        x.row(t) = e.input.row(static_cast<Index>(out.cache.tokens[static_cast<std::size_t>(t)]));
    }
    BiLstmOutput lstm = bilstm_forward(p.lstm, x, n);
    AttentionOutput att = self_attention_forward(p.attention, lstm.h);
    out.m = std::move(att.m);
    out.a = std::move(att.a);
    out.cache.lstm = std::move(lstm.cache);
    out.cache.attention = std::move(att.cache);
    return out;
}

FeatureGrad features_backward(const FeatureExtractorParams& p, const FeatureCache& cache,
                              const Vector& d_m) {
    AttentionGrad att = self_attention_backward(p.attention, cache.attention, d_m);
    BiLstmGrad lstm = bilstm_backward(p.lstm, cache.lstm, att.d_h);
    return FeatureGrad{FeatureExtractorParams{std::move(lstm.d_params), std::move(att.d_params)},
                       std::move(lstm.d_x)};
}

Vector head_probabilities(const HeadParams& head, const Vector& m) {
    const Vector logits = linear_forward(head.w, head.b, m);
    const double top = logits.maxCoeff();
    const Vector e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

HeadResult head_loss(const HeadParams& head, const Vector& m, Index y) {
    const Vector logits = linear_forward(head.w, head.b, m);
    SoftmaxXent xent = softmax_xent_forward(logits, y);
    const Vector d_logits = softmax_xent_backward(xent.p, y);
    LinearGrad lin = linear_backward(head.w, m, d_logits);
    return HeadResult{xent.loss, std::move(xent.p),
                      HeadParams{std::move(lin.d_w), std::move(lin.d_b)}, std::move(lin.d_x)};
}

namespace {

LossGrad branch_loss(const FeatureExtractorParams& extractor, const HeadParams& head,
                     const EncodedDocument& doc, const EmbeddingMatrix& e, Index y) {
    Features f = extract_features(extractor, doc, e);
    HeadResult h = head_loss(head, f.m, y);
    FeatureGrad fg = features_backward(extractor, f.cache, h.d_m);
    return LossGrad{h.loss, std::move(h.p), std::move(h.d_head), std::move(fg)};
}

}  // namespace

LossGrad satire_loss(const FeatureExtractorParams& extractor, const HeadParams& satire,
                     const EncodedDocument& doc, const EmbeddingMatrix& e) {
    if (satire.w.rows() != 2) {
        throw ShapeError("satire head must have 2 outputs, has " +
                         std::to_string(satire.w.rows()));
    }
    return branch_loss(extractor, satire, doc, e, static_cast<Index>(doc.satire));
}

LossGrad publication_loss(const FeatureExtractorParams& extractor,
                          const HeadParams& publication, const EncodedDocument& doc,
                          const EmbeddingMatrix& e) {
    return branch_loss(extractor, publication, doc, e, static_cast<Index>(doc.publication));
}

FeatureExtractorParams adversarial_feature_grad(const FeatureExtractorParams& satire_grad,
                                                const FeatureExtractorParams& publication_grad,
                                                double lambda) {
    const GradientReversal reversal(lambda);
    FeatureExtractorParams out = satire_grad;
    auto outs = spans_of(out);
    const auto pubs = spans_of(publication_grad);
    if (outs.size() != pubs.size()) {
        throw ShapeError("adversarial_feature_grad: parameter sets differ");
    }
    for (std::size_t k = 0; k < outs.size(); ++k) {
        if (outs[k].size() != pubs[k].size()) {
            throw ShapeError("adversarial_feature_grad: array " + std::to_string(k) +
                             " sizes differ");
        }
        const Vector reversed = reversal.backward(
            Eigen::Map<const Vector>(pubs[k].data(), static_cast<Index>(pubs[k].size())));
        for (std::size_t i = 0; i < outs[k].size(); ++i) {
            outs[k][i] += reversed[static_cast<Index>(i)];
        }
    }
    return out;
}

ForwardRecord forward(const ModelParams& params, const EncodedDocument& doc,
                      const EmbeddingMatrix& e) {
    Features f = extract_features(params.extractor, doc, e);
    ForwardRecord r;
    const SoftmaxXent s =
        softmax_xent_forward(linear_forward(params.satire.w, params.satire.b, f.m),
                             static_cast<Index>(doc.satire));
    const SoftmaxXent p =
        softmax_xent_forward(linear_forward(params.publication.w, params.publication.b, f.m),
                             static_cast<Index>(doc.publication));
    r.m = std::move(f.m);
    r.a = std::move(f.a);
    r.p_s = s.p;
    r.p_p = p.p;
    r.j_s = s.loss;
    r.j_p = p.loss;
    return r;
}

}  // namespace satadv
