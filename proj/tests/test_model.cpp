#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "satadv/model.hpp"

using namespace satadv;
using satadv::testing::check_params;

namespace {

constexpr double kTol = 1e-5;

ModelDims tiny_dims(Index publications = 4) {
    return ModelDims{4, 3, 5, publications};
}

template <class P>
void randomize(P& p, Rng& rng, double scale) {
    for (auto s : spans_of(p)) {
        for (double& x : s) {
            x = rng.uniform(-scale, scale);
        }
    }
}

ModelParams random_params(const ModelDims& dims, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(dims);
    Rng rng(seed);
    randomize(p, rng, 0.5);
    return p;
}

EncodedDocument doc_of(std::vector<std::size_t> tokens, std::size_t pub = 1,
                       std::size_t satire = 1) {
    EncodedDocument d;
    d.id = "d";
    d.length = tokens.size();
    d.indices = std::move(tokens);
    d.publication = pub;
    d.satire = satire;
    return d;
}

}  // namespace

TEST_CASE("init ranges, determinism and independent groups") {
    const ModelDims dims{6, 4, 5, 3};
    const ModelParams p = init_params(dims, 11);
    CHECK(p.dims().embed == 6);
    CHECK(p.dims().hidden == 4);
    CHECK(p.dims().attention == 5);
    CHECK(p.dims().publications == 3);
    p.visit([](std::string_view name, const auto& t) {
        const bool bias = name.ends_with(".b") || name == "b";
        for (Index i = 0; i < t.size(); ++i) {
            const double x = t.data()[i];
            if (bias) {
                CHECK(x == 0.0);
            } else {
                CHECK(std::abs(x) <= 0.08);
            }
        }
    });
    CHECK(bitwise_equal(p, init_params(dims, 11)));
    CHECK_FALSE(bitwise_equal(p, init_params(dims, 12)));

    ModelDims more = dims;
    more.publications = 7;
    const ModelParams q = init_params(more, 11);
    CHECK(bitwise_equal(p.extractor, q.extractor));
    CHECK(bitwise_equal(p.satire, q.satire));
    CHECK(q.publication.w.rows() == 7);
}

TEST_CASE("features: trivial cases and re-computation oracle") {
    const ModelDims dims = tiny_dims();
    const EmbeddingMatrix e = random_embeddings(10, dims.embed, 3);

    const FeatureExtractorParams zero = FeatureExtractorParams::zeros(dims);
    const Features z = extract_features(zero, doc_of({2, 3, 4}), e);
    CHECK(z.m.isZero(0.0));

    const ModelParams p = random_params(dims, 5);
    const Features one = extract_features(p.extractor, doc_of({7}), e);
    REQUIRE(one.a.size() == 1);
    CHECK(one.a[0] == 1.0);

    const EncodedDocument doc = doc_of({2, 3, 4, 5, 6, 7});
    const Features f = extract_features(p.extractor, doc, e);
    // Independent re-evaluation: look up, run each direction cell by cell,
    // score, softmax, pool.
    const Index n = 6;
    const Index u = dims.hidden;
    Matrix h(n, 2 * u);
    Vector hf = Vector::Zero(u), cf = Vector::Zero(u);
    for (Index t = 0; t < n; ++t) {
        const Vector x = e.input.row(static_cast<Index>(doc.indices[t])).transpose();
        const LstmStep s = lstm_cell_forward(p.extractor.lstm.fwd, x, hf, cf);
        hf = s.h;
        cf = s.c;
        h.row(t).head(u) = hf.transpose();
    }
    Vector hb = Vector::Zero(u), cb = Vector::Zero(u);
    for (Index t = n - 1; t >= 0; --t) {
        const Vector x = e.input.row(static_cast<Index>(doc.indices[t])).transpose();
        const LstmStep s = lstm_cell_forward(p.extractor.lstm.bwd, x, hb, cb);
        hb = s.h;
        cb = s.c;
        h.row(t).tail(u) = hb.transpose();
    }
    Vector score(n);
    for (Index t = 0; t < n; ++t) {
        const Vector hidden = (p.extractor.attention.w1 * h.row(t).transpose()).array().tanh();
        score[t] = p.extractor.attention.w2.dot(hidden);
    }
    const Vector w = (score.array() - score.maxCoeff()).exp();
    const Vector a = w / w.sum();
    Vector m = Vector::Zero(2 * u);
    for (Index t = 0; t < n; ++t) {
        m += a[t] * h.row(t).transpose();
    }
    CHECK((f.a - a).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((f.m - m).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("features are invariant to trailing PAD") {
    const ModelDims dims = tiny_dims();
    const EmbeddingMatrix e = random_embeddings(10, dims.embed, 4);
    Rng rng(21);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ModelParams p = random_params(dims, seed);
        std::vector<std::size_t> tokens;
        const std::size_t len = 1 + rng.below(8);
        for (std::size_t i = 0; i < len; ++i) {
            tokens.push_back(1 + rng.below(9));
        }
        EncodedDocument doc = doc_of(tokens);
        const Features base = extract_features(p.extractor, doc, e);
        doc.indices.resize(len + 1 + rng.below(10), Vocabulary::kPad);
        const Features padded = extract_features(p.extractor, doc, e);
        CHECK(padded.m == base.m);
        CHECK(padded.a == base.a);
    }
    EncodedDocument empty = doc_of({});
    CHECK_THROWS(extract_features(FeatureExtractorParams::zeros(dims), empty, e));
}

TEST_CASE("zero-parameter losses are uniform") {
    const EmbeddingMatrix e = random_embeddings(10, 4, 1);
    const EncodedDocument doc = doc_of({2, 3}, 0, 0);
    const ModelParams p15 = ModelParams::zeros(tiny_dims(15));
    CHECK(satire_loss(p15.extractor, p15.satire, doc, e).loss ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(publication_loss(p15.extractor, p15.publication, doc, e).loss ==
          doctest::Approx(2.70805).epsilon(1e-6));
    const ModelParams p2 = ModelParams::zeros(tiny_dims(2));
    CHECK(publication_loss(p2.extractor, p2.publication, doc, e).loss ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("confident correct head drives the loss to zero") {
    const ModelDims dims = tiny_dims();
    const EmbeddingMatrix e = random_embeddings(10, dims.embed, 1);
    ModelParams p = random_params(dims, 3);
    p.satire.w.setZero();
    p.satire.b << -40.0, 40.0;
    const LossGrad g = satire_loss(p.extractor, p.satire, doc_of({2, 3, 4}, 0, 1), e);
    CHECK(g.loss < 1e-30);
    CHECK(g.p[1] == doctest::Approx(1.0));
}

TEST_CASE("full-model gradients match finite differences") {
    const ModelDims dims = tiny_dims(3);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        ModelParams p = random_params(dims, seed);
        EmbeddingMatrix e = random_embeddings(8, dims.embed, seed);
        const EncodedDocument doc = doc_of({2, 3, 4, 5}, seed % 3, seed % 2);

        auto js = [&] { return satire_loss(p.extractor, p.satire, doc, e).loss; };
        const LossGrad gs = satire_loss(p.extractor, p.satire, doc, e);
        CHECK(check_params(p.extractor, gs.d_extractor.d_params, js) < kTol);
        CHECK(check_params(p.satire, gs.d_head, js) < kTol);

        auto jp = [&] { return publication_loss(p.extractor, p.publication, doc, e).loss; };
        const LossGrad gp = publication_loss(p.extractor, p.publication, doc, e);
        CHECK(check_params(p.extractor, gp.d_extractor.d_params, jp) < kTol);
        CHECK(check_params(p.publication, gp.d_head, jp) < kTol);

        // Embedding rows: tokens are distinct so row t of d_x is row doc[t].
        for (Index t = 0; t < 4; ++t) {
            const auto row = static_cast<Index>(doc.indices[static_cast<std::size_t>(t)]);
            for (Index j = 0; j < dims.embed; ++j) {
                double& x = e.input(row, j);
                const double saved = x;
                x = saved + satadv::testing::kStep;
                const double up = js();
                x = saved - satadv::testing::kStep;
                const double down = js();
                x = saved;
                const double fd = (up - down) / (2.0 * satadv::testing::kStep);
                CHECK(satadv::testing::rel_error(gs.d_extractor.d_x(t, j), fd) < kTol);
            }
        }
    }
}

TEST_CASE("forward record distributions") {
    const ModelDims dims = tiny_dims(5);
    Rng rng(8);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ModelParams p = ModelParams::zeros(dims);
        Rng prng(seed);
        randomize(p, prng, 3.0);
        const EmbeddingMatrix e = random_embeddings(12, dims.embed, seed, 2.0);
        std::vector<std::size_t> tokens;
        for (std::size_t i = 0; i < 1 + rng.below(10); ++i) {
            tokens.push_back(1 + rng.below(11));
        }
        const ForwardRecord r = forward(p, doc_of(tokens, 2, 0), e);
        CHECK(std::abs(r.p_s.sum() - 1.0) < 1e-12);
        CHECK(std::abs(r.p_p.sum() - 1.0) < 1e-12);
        CHECK((r.p_s.array() >= 0.0).all());
        CHECK((r.p_p.array() >= 0.0).all());
        CHECK(r.j_s == doctest::Approx(-std::log(r.p_s[0])));
        CHECK(r.j_p == doctest::Approx(-std::log(r.p_p[2])));
    }
}

TEST_CASE("adversarial feature gradient") {
    const ModelDims dims = tiny_dims();
    FeatureExtractorParams gs = FeatureExtractorParams::zeros(dims);
    FeatureExtractorParams gp = FeatureExtractorParams::zeros(dims);
    Rng rng(13);
    randomize(gs, rng, 1.0);
    randomize(gp, rng, 1.0);

    CHECK(bitwise_equal(adversarial_feature_grad(gs, gp, 0.0), gs));

    const auto zero = zeros_like(gs);
    const auto neg = adversarial_feature_grad(zero, gp, 1.0);
    const auto ns = spans_of(neg);
    const auto ps = spans_of(gp);
    for (std::size_t k = 0; k < ns.size(); ++k) {
        for (std::size_t i = 0; i < ns[k].size(); ++i) {
            CHECK(ns[k][i] == -ps[k][i]);
        }
    }

    const auto r = adversarial_feature_grad(gs, gp, 0.2);
    const auto rs = spans_of(r);
    const auto ss = spans_of(gs);
    for (std::size_t k = 0; k < rs.size(); ++k) {
        for (std::size_t i = 0; i < rs[k].size(); ++i) {
            CHECK(rs[k][i] == doctest::Approx(ss[k][i] - 0.2 * ps[k][i]).epsilon(1e-15));
        }
    }

    // Linear in lambda.
    const auto r1 = adversarial_feature_grad(gs, gp, 0.3);
    const auto r2 = adversarial_feature_grad(gs, gp, 0.5);
    const auto r0 = adversarial_feature_grad(gs, gp, 0.0);
    const auto r12 = adversarial_feature_grad(gs, gp, 0.8);
    const auto a1 = spans_of(r1), a2 = spans_of(r2), a0 = spans_of(r0), a12 = spans_of(r12);
    double worst = 0.0;
    for (std::size_t k = 0; k < a1.size(); ++k) {
        for (std::size_t i = 0; i < a1[k].size(); ++i) {
            const double lhs = a1[k][i] + a2[k][i] - a0[k][i];
            worst = std::max(worst, std::abs(lhs - a12[k][i]) /
                                        std::max(std::abs(a12[k][i]), 1e-300));
        }
    }
    CHECK(worst < 1e-12);
}
