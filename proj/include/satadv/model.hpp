#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "satadv/corpus.hpp"
#include "satadv/embeddings.hpp"
#include "satadv/netcore.hpp"

namespace satadv {

struct ModelDims {
    Index embed = 300;
    Index hidden = 300;     // per direction; document vector has 2 * hidden
    Index attention = 600;  // internal size of the self-attention layer
    Index publications = 15;

    Index features() const { return 2 * hidden; }
};

/// Shared feature extractor: biLSTM followed by single-hop self-attention.
/// The embedding table is held separately (see EmbeddingMatrix).
struct FeatureExtractorParams {
    BiLstmParams lstm;
    AttentionParams attention;

    static FeatureExtractorParams zeros(const ModelDims& dims);

    template <class F>
    void visit(F&& f) {
        lstm.visit([&](std::string_view n, auto& t) { f("lstm." + std::string(n), t); });
        attention.visit(
            [&](std::string_view n, auto& t) { f("attention." + std::string(n), t); });
    }
    template <class F>
    void visit(F&& f) const {
        lstm.visit([&](std::string_view n, const auto& t) { f("lstm." + std::string(n), t); });
        attention.visit(
            [&](std::string_view n, const auto& t) { f("attention." + std::string(n), t); });
    }
};

/// Single softmax layer over the document vector.
struct HeadParams {
    Matrix w;  // classes x features
    Vector b;  // classes

    static HeadParams zeros(Index classes, Index features);

    template <class F>
    void visit(F&& f) {
        f("w", w);
        f("b", b);
    }
    template <class F>
    void visit(F&& f) const {
        f("w", w);
        f("b", b);
    }
};

struct ModelParams {
    FeatureExtractorParams extractor;  // theta_f
    HeadParams satire;                 // theta_s, 2 classes
    HeadParams publication;            // theta_p, K classes

    static ModelParams zeros(const ModelDims& dims);

    ModelDims dims() const;

    template <class F>
    void visit(F&& f) {
        extractor.visit([&](std::string_view n, auto& t) { f("extractor." + std::string(n), t); });
        satire.visit([&](std::string_view n, auto& t) { f("satire." + std::string(n), t); });
        publication.visit(
            [&](std::string_view n, auto& t) { f("publication." + std::string(n), t); });
    }
    template <class F>
    void visit(F&& f) const {
        extractor.visit(
            [&](std::string_view n, const auto& t) { f("extractor." + std::string(n), t); });
        satire.visit([&](std::string_view n, const auto& t) { f("satire." + std::string(n), t); });
        publication.visit(
            [&](std::string_view n, const auto& t) { f("publication." + std::string(n), t); });
    }
};

/// Weights uniform(-0.08, 0.08), biases zero. Each parameter group draws from
/// its own stream so the groups can be re-created independently.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

struct FeatureCache {
    std::vector<std::size_t> tokens;  // the `length` non-PAD indices
    BiLstmCache lstm;
    AttentionCache attention;
};

struct Features {
    Vector m;  // attention-pooled document vector, 2u
    Vector a;  // one weight per non-PAD token
    FeatureCache cache;
};

Features extract_features(const FeatureExtractorParams& p, const EncodedDocument& doc,
                          const EmbeddingMatrix& e);

struct FeatureGrad {
    FeatureExtractorParams d_params;
    Matrix d_x;  // gradient w.r.t. the embedded tokens, length x embed
};

FeatureGrad features_backward(const FeatureExtractorParams& p, const FeatureCache& cache,
                              const Vector& d_m);

struct HeadResult {
    double loss = 0.0;
    Vector p;
    HeadParams d_head;
    Vector d_m;
};

/// Softmax head loss -log p[y] and its gradients, given a document vector.
HeadResult head_loss(const HeadParams& head, const Vector& m, Index y);

Vector head_probabilities(const HeadParams& head, const Vector& m);

struct LossGrad {
    double loss = 0.0;
    Vector p;
    HeadParams d_head;
    FeatureGrad d_extractor;
};

/// J_s for one document with gradients over theta_s and theta_f.
LossGrad satire_loss(const FeatureExtractorParams& extractor, const HeadParams& satire,
                     const EncodedDocument& doc, const EmbeddingMatrix& e);

/// J_p for one document with gradients over theta_p and theta_f.
LossGrad publication_loss(const FeatureExtractorParams& extractor,
                          const HeadParams& publication, const EncodedDocument& doc,
                          const EmbeddingMatrix& e);

/// dJ_s/dtheta_f - lambda * dJ_p/dtheta_f, with the second term passed through
/// the gradient-reversal rule.
FeatureExtractorParams adversarial_feature_grad(const FeatureExtractorParams& satire_grad,
                                                const FeatureExtractorParams& publication_grad,
                                                double lambda);

struct ForwardRecord {
    Vector m;
    Vector a;
    Vector p_s;
    Vector p_p;
    double j_s = 0.0;
    double j_p = 0.0;
};

ForwardRecord forward(const ModelParams& params, const EncodedDocument& doc,
                      const EmbeddingMatrix& e);

}  // namespace satadv
