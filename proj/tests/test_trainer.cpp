#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixture.hpp"
#include "satadv/synthgen.hpp"
#include "satadv/trainer.hpp"

using namespace satadv;

namespace {

struct SmallData {
    DataSplits data;
    EmbeddingMatrix embeddings;
};

SmallData small_data(std::uint64_t seed = 3) {
    SynthSpec spec;
    spec.publications = {{"alpha", false, "mkalpha"},
                         {"beta", false, "mkbeta"},
                         {"gamma", true, "mkgamma"}};
    spec.articles_per_publication = 30;
    spec.vocab_size = 40;
    spec.min_length = 6;
    spec.max_length = 12;
    spec.satire_cues = {"zap", "zing"};
    spec.seed = seed;
    const std::vector<Article> articles = generate(spec);
    const CorpusSplit s = split(articles, SplitSpec{0.8, 0.1, 0.1, seed});
    const Vocabulary vocab = build_vocabulary(s.train, 1);
    return SmallData{encode_splits(s, vocab, publication_classes(articles), 64),
                     random_embeddings(vocab.size(), 6, seed)};
}

TrainConfig small_config(TrainMode mode, double lambda = 0.0) {
    TrainConfig c;
    c.mode = mode;
    c.lambda = lambda;
    c.lr = 1e-2;
    c.batch_size = 8;
    c.max_epochs = 4;
    c.patience = 2;
    c.seed = 5;
    c.hidden = 4;
    c.attention = 4;
    return c;
}

ModelDims small_dims(const SmallData& d, const TrainConfig& c) {
    return ModelDims{d.embeddings.dim(), c.hidden, c.attention,
                     static_cast<Index>(d.data.publications.size())};
}

std::vector<const EncodedDocument*> first_docs(const DataSplits& d, std::size_t n,
                                               std::size_t offset = 0) {
    std::vector<const EncodedDocument*> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(&d.train[offset + i]);
    }
    return out;
}

template <class P>
double max_abs_diff(const P& a, const P& b) {
    const auto as = spans_of(a);
    const auto bs = spans_of(b);
    double worst = 0.0;
    for (std::size_t k = 0; k < as.size(); ++k) {
        for (std::size_t i = 0; i < as[k].size(); ++i) {
            worst = std::max(worst, std::abs(as[k][i] - bs[k][i]));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("config validation and tags") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch_size = 0;
    CHECK_THROWS(c.validate());
    c.batch_size = 1;
    c.patience = 0;
    CHECK_THROWS(c.validate());
    c.patience = 1;
    c.lambda = -0.1;
    CHECK_THROWS(c.validate());

    TrainConfig b;
    b.mode = TrainMode::baseline;
    CHECK(model_tag(b) == "no adv");
    TrainConfig a;
    a.lambda = 0.2;
    CHECK(model_tag(a) == "adv, λ=0.2");
    CHECK(parse_train_mode("baseline") == TrainMode::baseline);
    CHECK(parse_train_mode("adversarial") == TrainMode::adversarial);
    CHECK_THROWS(parse_train_mode("other"));
}

TEST_CASE("batch iterator covers every index once per epoch") {
    BatchIterator it(23, 5, 9);
    CHECK(it.batches_per_epoch() == 5);
    for (int epoch = 0; epoch < 3; ++epoch) {
        std::vector<std::size_t> seen;
        for (std::size_t b = 0; b < 5; ++b) {
            const auto batch = it.next();
            CHECK(batch.size() == (b < 4 ? 5u : 3u));
            seen.insert(seen.end(), batch.begin(), batch.end());
        }
        std::sort(seen.begin(), seen.end());
        for (std::size_t i = 0; i < 23; ++i) {
            CHECK(seen[i] == i);
        }
    }
    BatchIterator a(50, 7, 1), b(50, 7, 1);
    for (int i = 0; i < 20; ++i) {
        CHECK(a.next() == b.next());
    }
}

TEST_CASE("batch gradient does not depend on the thread count") {
    const SmallData d = small_data();
    const TrainConfig c = small_config(TrainMode::adversarial);
    const ModelParams p = init_params(small_dims(d, c), 1);
    const auto batch = first_docs(d.data, 11);
    for (StepKind k : {StepKind::satire, StepKind::publication}) {
        const BatchGrad one = batch_gradient(p, d.embeddings, batch, k, {true, true}, 1);
        const BatchGrad many = batch_gradient(p, d.embeddings, batch, k, {true, true}, 3);
        CHECK(one.mean_loss == many.mean_loss);
        CHECK(bitwise_equal(one.d_head, many.d_head));
        CHECK(bitwise_equal(one.d_extractor, many.d_extractor));
        CHECK(one.d_embedding == many.d_embedding);
        CHECK(one.d_embedding.row(0).isZero(0.0));
    }
}

TEST_CASE("one satire step equals a hand-made Adam update") {
    const SmallData d = small_data();
    const TrainConfig c = small_config(TrainMode::adversarial, 0.5);
    const ModelParams p0 = init_params(small_dims(d, c), 2);
    const auto batch = first_docs(d.data, 6);

    FeatureExtractorParams gf = zeros_like(p0.extractor);
    HeadParams gh = zeros_like(p0.satire);
    double loss = 0.0;
    for (const EncodedDocument* doc : batch) {
        const LossGrad g = satire_loss(p0.extractor, p0.satire, *doc, d.embeddings);
        loss += g.loss;
        axpy(1.0, g.d_extractor.d_params, gf);
        axpy(1.0, g.d_head, gh);
    }
    scale(1.0 / 6.0, gf);
    scale(1.0 / 6.0, gh);
    ModelParams expected = p0;
    AdamState ex(c.adam()), sat(c.adam());
    adam_step(expected.extractor, gf, ex);
    adam_step(expected.satire, gh, sat);

    TrainingSession s(p0, d.embeddings, c);
    CHECK(s.satire_step(batch) == doctest::Approx(loss / 6.0).epsilon(1e-14));
    CHECK(max_abs_diff(s.params.extractor, expected.extractor) < 1e-12);
    CHECK(max_abs_diff(s.params.satire, expected.satire) < 1e-12);
    CHECK(bitwise_equal(s.params.publication, p0.publication));
    CHECK(s.embeddings.input == d.embeddings.input);

    SUBCASE("then a publication step moves theta_f by the reversed gradient") {
        const ModelParams p1 = s.params;
        const auto pbatch = first_docs(d.data, 7, 10);
        FeatureExtractorParams pf = zeros_like(p1.extractor);
        HeadParams ph = zeros_like(p1.publication);
        for (const EncodedDocument* doc : pbatch) {
            const LossGrad g = publication_loss(p1.extractor, p1.publication, *doc, d.embeddings);
            axpy(1.0, g.d_extractor.d_params, pf);
            axpy(1.0, g.d_head, ph);
        }
        scale(1.0 / 7.0, pf);
        scale(1.0 / 7.0, ph);
        ModelParams want = p1;
        AdamState pub(c.adam());
        adam_step(want.publication, ph, pub);
        adam_step(want.extractor, adversarial_feature_grad(zeros_like(pf), pf, 0.5), ex);

        s.publication_step(pbatch, true);
        CHECK(max_abs_diff(s.params.publication, want.publication) < 1e-12);
        CHECK(max_abs_diff(s.params.extractor, want.extractor) < 1e-12);
        CHECK(bitwise_equal(s.params.satire, p1.satire));
        CHECK(s.extractor_state.t == 2);
        CHECK(s.satire_state.t == 1);
        CHECK(s.publication_state.t == 1);
    }
    SUBCASE("publication step without the adversary leaves theta_f alone") {
        const ModelParams p1 = s.params;
        s.publication_step(first_docs(d.data, 7, 10), false);
        CHECK(bitwise_equal(s.params.extractor, p1.extractor));
        CHECK(s.extractor_state.t == 1);
    }
}

TEST_CASE("fine-tuned embeddings move but PAD stays zero") {
    const SmallData d = small_data();
    TrainConfig c = small_config(TrainMode::adversarial, 0.3);
    c.finetune_embeddings = true;
    TrainingSession s(init_params(small_dims(d, c), 2), d.embeddings, c);
    for (int i = 0; i < 3; ++i) {
        s.satire_step(first_docs(d.data, 8, 8 * static_cast<std::size_t>(i)));
        s.publication_step(first_docs(d.data, 8, 30), true);
    }
    CHECK(s.embeddings.input != d.embeddings.input);
    CHECK(s.embeddings.input.row(0).isZero(0.0));
}

TEST_CASE("adversarial training alternates strictly") {
    const SmallData d = small_data();
    std::vector<StepEvent> events;
    std::vector<std::pair<std::size_t, StepKind>> steps;
    const TrainResult r = train_adversarial(d.data, d.embeddings,
                                            small_config(TrainMode::adversarial, 0.3),
                                            [&](const StepEvent& e) {
                                                steps.emplace_back(e.step, e.kind);
                                            });
    REQUIRE(steps.size() >= 2);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        CHECK(steps[i].first == i + 1);
        CHECK(steps[i].second == (i % 2 == 0 ? StepKind::satire : StepKind::publication));
    }
    // Any window of 2n consecutive steps holds n of each kind.
    for (std::size_t n = 1; 2 * n <= steps.size(); n += 3) {
        for (std::size_t start = 0; start + 2 * n <= steps.size(); start += 5) {
            const auto sat = std::count_if(steps.begin() + static_cast<long>(start),
                                           steps.begin() + static_cast<long>(start + 2 * n),
                                           [](const auto& s) { return s.second == StepKind::satire; });
            CHECK(static_cast<std::size_t>(sat) == n);
        }
    }
    CHECK(steps.size() == r.log.records.back().step);
}

TEST_CASE("lambda 0 follows the baseline's satire trajectory exactly") {
    const SmallData d = small_data();
    std::vector<ModelParams> adv, base;
    train_adversarial(d.data, d.embeddings, small_config(TrainMode::adversarial, 0.0),
                      [&](const StepEvent& e) {
                          if (e.kind == StepKind::satire) {
                              adv.push_back(e.params);
                          }
                      });
    train_baseline(d.data, d.embeddings, small_config(TrainMode::baseline),
                   [&](const StepEvent& e) {
                       if (e.kind == StepKind::satire) {
                           base.push_back(e.params);
                       }
                   });
    REQUIRE(!adv.empty());
    REQUIRE(adv.size() == base.size());
    for (std::size_t i = 0; i < adv.size(); ++i) {
        CHECK(bitwise_equal(adv[i].extractor, base[i].extractor));
        CHECK(bitwise_equal(adv[i].satire, base[i].satire));
    }
}

TEST_CASE("training is deterministic") {
    const SmallData d = small_data();
    for (TrainMode m : {TrainMode::adversarial, TrainMode::baseline}) {
        const TrainConfig c = small_config(m, 0.4);
        const TrainResult a = train(d.data, d.embeddings, c);
        const TrainResult b = train(d.data, d.embeddings, c);
        CHECK(a.log.to_jsonl() == b.log.to_jsonl());
        CHECK(bitwise_equal(a.params, b.params));
        TrainConfig other = c;
        other.seed = 6;
        CHECK(train(d.data, d.embeddings, other).log.to_jsonl() != a.log.to_jsonl());
    }
}

TEST_CASE("log invariants: increasing steps and early stopping") {
    const SmallData d = small_data();
    for (TrainMode m : {TrainMode::adversarial, TrainMode::baseline}) {
        TrainConfig c = small_config(m, 0.7);
        c.max_epochs = 12;
        const TrainResult r = train(d.data, d.embeddings, c);
        const auto& recs = r.log.records;
        for (std::size_t i = 1; i < recs.size(); ++i) {
            CHECK(recs[i].step > recs[i - 1].step);
        }
        const double best = recs[r.log.best].dev_satire.f1;
        std::size_t phase1 = 0;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            if (recs[i].phase != 1) {
                continue;
            }
            ++phase1;
            if (i > r.log.best) {
                CHECK(best >= recs[i].dev_satire.f1);
            }
            if (i < r.log.best) {
                CHECK(best > recs[i].dev_satire.f1);
            }
        }
        // Either the epoch budget ran out or patience did.
        CHECK((phase1 == c.max_epochs || phase1 - 1 - r.log.best == c.patience));
        // The returned parameters score what the log says.
        const MetricsReport dev = evaluate(r.params, r.embeddings, d.data.dev,
                                           d.data.publications);
        CHECK(dev.satire.f1 == best);
        const std::string jsonl = r.log.to_jsonl();
        CHECK(static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')) ==
              recs.size());
    }
}

TEST_CASE("baseline phase 2 keeps theta_f frozen") {
    const SmallData d = small_data();
    TrainConfig c = small_config(TrainMode::baseline);
    std::vector<FeatureExtractorParams> during;
    std::size_t last_phase1_step = 0;
    const TrainResult r = train_baseline(d.data, d.embeddings, c, [&](const StepEvent& e) {
        if (e.kind == StepKind::publication) {
            during.push_back(e.params.extractor);
        } else {
            last_phase1_step = e.step;
        }
    });
    REQUIRE(!during.empty());
    for (const auto& f : during) {
        CHECK(bitwise_equal(f, r.params.extractor));
    }
    REQUIRE(r.log.best_probe.has_value());
    const EvalRecord& probe = r.log.records[*r.log.best_probe];
    CHECK(probe.phase == 2);
    CHECK(probe.step > last_phase1_step);
    CHECK(r.log.records[r.log.best].phase == 1);
    for (const auto& rec : r.log.records) {
        if (rec.phase == 2) {
            CHECK(rec.dev_satire.f1 == r.log.records[r.log.best].dev_satire.f1);
            CHECK(rec.dev_publication.f1 <= probe.dev_publication.f1);
        }
    }
}

TEST_CASE("baseline phase 1 never reads publication labels") {
    const SmallData d = small_data();
    SmallData shuffled = d;
    Rng rng(1);
    std::vector<std::size_t> labels;
    for (const auto& doc : shuffled.data.train) {
        labels.push_back(doc.publication);
    }
    rng.shuffle(labels);
    std::reverse(labels.begin(), labels.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        shuffled.data.train[i].publication = (labels[i] + 1) % d.data.publications.size();
    }
    auto satire_trajectory = [](const SmallData& s) {
        std::vector<ModelParams> out;
        train_baseline(s.data, s.embeddings, small_config(TrainMode::baseline),
                       [&](const StepEvent& e) {
                           if (e.kind == StepKind::satire) {
                               out.push_back(e.params);
                           }
                       });
        return out;
    };
    const auto a = satire_trajectory(d);
    const auto b = satire_trajectory(shuffled);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(bitwise_equal(a[i].extractor, b[i].extractor));
        CHECK(bitwise_equal(a[i].satire, b[i].satire));
    }
}

TEST_CASE("mode mismatch is rejected") {
    const SmallData d = small_data();
    CHECK_THROWS(train_adversarial(d.data, d.embeddings, small_config(TrainMode::baseline)));
    CHECK_THROWS(train_baseline(d.data, d.embeddings, small_config(TrainMode::adversarial)));
}

TEST_CASE("divergence is reported with its step") {
    const SmallData d = small_data();
    SmallData bad = d;
    bad.embeddings.input(2, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        train(bad.data, bad.embeddings, small_config(TrainMode::adversarial, 0.2));
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.step() >= 1);
        CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
    }
}

TEST_CASE("lambda selection and collapse check") {
    auto row = [](double lambda, double f1, double share) {
        SweepRow r;
        r.lambda = lambda;
        r.best.dev_satire.f1 = f1;
        r.dev_publication_modal_share = share;
        return r;
    };
    const std::vector<SweepRow> rows{row(0.7, 0.80, 0.99), row(0.2, 0.90, 0.4),
                                     row(0.3, 0.90, 0.5), row(0.5, 0.75, 0.97)};
    CHECK(select_lambda(rows) == 1);
    const CollapseCheck cc = collapse_check(rows, 1);
    CHECK_FALSE(cc.vacuous);
    CHECK(cc.lambda == 0.5);
    CHECK(cc.satire_f1_drop == doctest::Approx(0.15));
    CHECK(cc.modal_share == 0.97);

    const std::vector<SweepRow> flat{row(0.2, 0.9, 0.3), row(0.7, 0.85, 0.4)};
    CHECK(collapse_check(flat, select_lambda(flat)).vacuous);
    CHECK_THROWS(select_lambda(std::vector<SweepRow>{}));

    SweepResult sweep;
    sweep.rows = flat;
    sweep.best = 0;
    sweep.collapse = collapse_check(flat, 0);
    const std::string report = render_sweep_report(sweep);
    CHECK(report.find("λ=0.2 *") != std::string::npos);
    CHECK(report.find("vacuously") != std::string::npos);
    sweep.rows = rows;
    sweep.best = 1;
    sweep.collapse = cc;
    CHECK(render_sweep_report(sweep).find("collapsed") != std::string::npos);
}

TEST_CASE("single-lambda sweep equals a direct run") {
    const SmallData d = small_data();
    const std::vector<double> lambdas{0.3};
    const SweepResult s = sweep_lambda(d.data, d.embeddings,
                                       small_config(TrainMode::baseline), lambdas);
    const TrainResult direct =
        train_adversarial(d.data, d.embeddings, small_config(TrainMode::adversarial, 0.3));
    REQUIRE(s.rows.size() == 1);
    CHECK(s.best == 0);
    CHECK(s.rows[0].result.log.to_jsonl() == direct.log.to_jsonl());
    CHECK(bitwise_equal(s.rows[0].result.params, direct.params));
    CHECK_THROWS(sweep_lambda(d.data, d.embeddings, small_config(TrainMode::adversarial),
                              std::vector<double>{}));
}

TEST_CASE("majority baseline") {
    auto doc = [](std::size_t pub, std::size_t sat) {
        EncodedDocument d;
        d.indices = {2};
        d.length = 1;
        d.publication = pub;
        d.satire = sat;
        return d;
    };
    const std::vector<std::string> pubs{"a", "b", "c"};
    const std::vector<EncodedDocument> mostly_regular{doc(0, 0), doc(1, 0), doc(1, 0),
                                                      doc(2, 1)};
    const MajorityPredictor m = majority_baseline(mostly_regular);
    CHECK(m.satire == 0);
    CHECK(m.publication == 1);
    const MetricsReport r = evaluate_majority(m, mostly_regular, pubs);
    CHECK(r.satire.f1 == 0.0);
    CHECK(r.publication.recall == 0.5);

    const std::vector<EncodedDocument> all_satire{doc(0, 1), doc(2, 1)};
    const MajorityPredictor s = majority_baseline(all_satire);
    CHECK(s.satire == 1);
    CHECK(s.publication == 0);  // tie between a and c goes to the first
    CHECK(evaluate_majority(s, all_satire, pubs).satire.f1 == 1.0);

    CHECK_THROWS(majority_baseline(std::vector<EncodedDocument>{}));
}

TEST_CASE("baseline learns the synthetic fixture within 30 epochs") {
    const auto f = satadv::testing::fixture_data();
    TrainConfig c = satadv::testing::fixture_config(TrainMode::baseline);
    c.max_epochs = 30;
    const TrainResult r = train_baseline(f.data, f.embeddings, c);
    CHECK(r.log.records[r.log.best].dev_satire.f1 >= 0.95);
}
