#include "satadv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>

namespace satadv {

namespace {

std::string format_lambda(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::vector<const EncodedDocument*> gather(std::span<const EncodedDocument> docs,
                                           const std::vector<std::size_t>& idx) {
    std::vector<const EncodedDocument*> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        out.push_back(&docs[i]);
    }
    return out;
}

std::size_t argmax(const Vector& v) {
    Index best = 0;
    v.maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

void require_data(const DataSplits& data) {
    if (data.train.empty()) {
        throw std::invalid_argument("training split is empty");
    }
    if (data.dev.empty()) {
        throw std::invalid_argument("dev split is empty");
    }
    if (data.publications.size() < 2) {
        throw std::invalid_argument("need at least 2 publications");
    }
}

ModelDims dims_for(const DataSplits& data, const EmbeddingMatrix& e, const TrainConfig& c) {
    return ModelDims{e.dim(), c.hidden, c.attention, static_cast<Index>(data.publications.size())};
}

// Runs one optimizer step, converting numeric failures into TrainingDiverged.
template <class F>
double guarded_step(std::size_t step, F&& f) {
    double loss = 0.0;
    try {
        loss = f();
    } catch (const TrainingDiverged&) {
        throw;
    } catch (const NumericError& e) {
        throw TrainingDiverged(step, e.what());
    }
    if (!std::isfinite(loss)) {
        throw TrainingDiverged(step, "non-finite loss");
    }
    return loss;
}

const std::vector<std::string> kSatireClasses = {"regular", "satire"};

}  // namespace

// -------------------------------------------------------------------- config

std::string to_string(TrainMode mode) {
    return mode == TrainMode::adversarial ? "adversarial" : "baseline";
}

TrainMode parse_train_mode(const std::string& s) {
    if (s == "adversarial") {
        return TrainMode::adversarial;
    }
    if (s == "baseline") {
        return TrainMode::baseline;
    }
    throw std::invalid_argument("unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be a finite value >= 0");
    }
    if (!(lr > 0.0) || !(decay >= 0.0)) {
        throw std::invalid_argument("learning rate must be > 0 and decay >= 0");
    }
    if (batch_size < 1 || patience < 1 || max_epochs < 1 || max_len < 1 || threads < 1) {
        throw std::invalid_argument(
            "batch_size, patience, max_epochs, max_len and threads must be >= 1");
    }
    if (hidden < 1 || attention < 1) {
        throw std::invalid_argument("hidden and attention sizes must be >= 1");
    }
}

nlohmann::json TrainConfig::to_json() const {
    return {{"mode", to_string(mode)},
            {"lambda", lambda},
            {"lr", lr},
            {"decay", decay},
            {"batch_size", batch_size},
            {"max_len", max_len},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"seed", seed},
            {"finetune_embeddings", finetune_embeddings},
            {"hidden", hidden},
            {"attention", attention}};
}

std::string model_tag(const TrainConfig& config) {
    return config.mode == TrainMode::baseline ? "no adv" : "adv, λ=" + format_lambda(config.lambda);
}

DataSplits encode_splits(const CorpusSplit& split, const Vocabulary& vocab,
                         std::span<const std::string> publications, std::size_t max_len) {
    DataSplits out;
    out.publications.assign(publications.begin(), publications.end());
    auto encode_all = [&](const std::vector<Article>& articles) {
        std::vector<EncodedDocument> docs;
        docs.reserve(articles.size());
        for (const Article& a : articles) {
            docs.push_back(encode(a, vocab, max_len, publications));
        }
        return docs;
    };
    out.train = encode_all(split.train);
    out.dev = encode_all(split.dev);
    out.test = encode_all(split.test);
    return out;
}

std::string TrainLog::to_jsonl() const {
    std::string out;
    for (const EvalRecord& r : records) {
        const nlohmann::json j = {{"phase", r.phase},
                                  {"epoch", r.epoch},
                                  {"step", r.step},
                                  {"dev_satire", to_json(r.dev_satire)},
                                  {"dev_publication", to_json(r.dev_publication)},
                                  {"mean_js", optional_json(r.mean_js)},
                                  {"mean_jp", optional_json(r.mean_jp)}};
        out += j.dump() + "\n";
    }
    return out;
}

TrainingDiverged::TrainingDiverged(std::size_t step, const std::string& what)
    : NumericError("training diverged at step " + std::to_string(step) + ": " + what),
      step_(step) {}

// ------------------------------------------------------------ batch gradient

BatchGrad batch_gradient(const ModelParams& params, const EmbeddingMatrix& e,
                         std::span<const EncodedDocument* const> batch, StepKind branch,
                         GradRequest request, std::size_t threads) {
    if (batch.empty()) {
        throw std::invalid_argument("batch_gradient: empty batch");
    }
    const HeadParams& head = branch == StepKind::satire ? params.satire : params.publication;
    BatchGrad out{0.0, zeros_like(head), zeros_like(params.extractor), Matrix()};
    if (request.embedding) {
        out.d_embedding = Matrix::Zero(e.rows(), e.dim());
    }
    const double inv = 1.0 / static_cast<double>(batch.size());

    struct DocResult {
        HeadResult head;
        std::optional<FeatureGrad> features;
        std::vector<std::size_t> tokens;
    };
    auto one = [&](const EncodedDocument& doc) {
        Features f = extract_features(params.extractor, doc, e);
        const Index y = static_cast<Index>(branch == StepKind::satire ? doc.satire
                                                                      : doc.publication);
        DocResult r{head_loss(head, f.m, y), std::nullopt, {}};
        if (request.extractor || request.embedding) {
            r.features = features_backward(params.extractor, f.cache, r.head.d_m);
            r.tokens = std::move(f.cache.tokens);
        }
        return r;
    };

    threads = std::max<std::size_t>(threads, 1);
    std::vector<DocResult> wave;
    std::vector<std::exception_ptr> errors;
    for (std::size_t start = 0; start < batch.size(); start += threads) {
        const std::size_t count = std::min(threads, batch.size() - start);
        wave.assign(count, DocResult{});
        errors.assign(count, nullptr);
        auto work = [&](std::size_t j) {
            try {
                wave[j] = one(*batch[start + j]);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        };
        std::vector<std::thread> workers;
        for (std::size_t j = 1; j < count; ++j) {
            workers.emplace_back(work, j);
        }
        work(0);
        for (auto& w : workers) {
            w.join();
        }
        for (std::size_t j = 0; j < count; ++j) {
            if (errors[j]) {
                std::rethrow_exception(errors[j]);
            }
            DocResult& r = wave[j];
            out.mean_loss += r.head.loss;
            axpy(1.0, r.head.d_head, out.d_head);
            if (request.extractor) {
                axpy(1.0, r.features->d_params, out.d_extractor);
            }
            if (request.embedding) {
                for (std::size_t t = 0; t < r.tokens.size(); ++t) {
                    out.d_embedding.row(static_cast<Index>(r.tokens[t])) +=
                        r.features->d_x.row(static_cast<Index>(t));
                }
            }
        }
    }
    out.mean_loss *= inv;
    scale(inv, out.d_head);
    scale(inv, out.d_extractor);
    if (request.embedding) {
        out.d_embedding *= inv;
        out.d_embedding.row(Vocabulary::kPad).setZero();
    }
    return out;
}

// ------------------------------------------------------------ batch iterator

BatchIterator::BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed) {
    if (n == 0 || batch_size == 0) {
        throw std::invalid_argument("BatchIterator: empty data or zero batch size");
    }
    order_.resize(n);
    reshuffle();
}

void BatchIterator::reshuffle() {
    for (std::size_t i = 0; i < n_; ++i) {
        order_[i] = i;
    }
    rng_.shuffle(order_);
    cursor_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
    if (cursor_ >= n_) {
        reshuffle();
    }
    const std::size_t end = std::min(n_, cursor_ + batch_size_);
    std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    return batch;
}

std::size_t BatchIterator::batches_per_epoch() const {
    return (n_ + batch_size_ - 1) / batch_size_;
}

// ---------------------------------------------------------- training session

TrainingSession::TrainingSession(ModelParams p, EmbeddingMatrix e, const TrainConfig& config)
    : params(std::move(p)),
      embeddings(std::move(e)),
      extractor_state(config.adam()),
      satire_state(config.adam()),
      publication_state(config.adam()),
      embedding_state(config.adam()),
      config_(config) {
    config_.validate();
}

void TrainingSession::update_embeddings(Matrix& grad) {
    grad.row(Vocabulary::kPad).setZero();
    std::vector<std::span<double>> ps = {
        std::span<double>(embeddings.input.data(), static_cast<std::size_t>(embeddings.input.size()))};
    std::vector<std::span<const double>> gs = {
        std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size()))};
    adam_step(ps, gs, embedding_state);
}

double TrainingSession::satire_step(std::span<const EncodedDocument* const> batch) {
    BatchGrad g = batch_gradient(params, embeddings, batch, StepKind::satire,
                                 GradRequest{true, config_.finetune_embeddings}, config_.threads);
    if (!std::isfinite(g.mean_loss)) {
        throw NumericError("non-finite satire loss");
    }
    adam_step(params.satire, g.d_head, satire_state);
    adam_step(params.extractor, g.d_extractor, extractor_state);
    if (config_.finetune_embeddings) {
        update_embeddings(g.d_embedding);
    }
    return g.mean_loss;
}

double TrainingSession::publication_step(std::span<const EncodedDocument* const> batch,
                                         bool update_extractor) {
    const bool embed = update_extractor && config_.finetune_embeddings;
    BatchGrad g = batch_gradient(params, embeddings, batch, StepKind::publication,
                                 GradRequest{update_extractor, embed}, config_.threads);
    if (!std::isfinite(g.mean_loss)) {
        throw NumericError("non-finite publication loss");
    }
    adam_step(params.publication, g.d_head, publication_state);
    if (update_extractor) {
        const FeatureExtractorParams combined =
            adversarial_feature_grad(zeros_like(g.d_extractor), g.d_extractor, config_.lambda);
        adam_step(params.extractor, combined, extractor_state);
        if (embed) {
            Matrix reversed = -config_.lambda * g.d_embedding;
            update_embeddings(reversed);
        }
    }
    return g.mean_loss;
}

// ---------------------------------------------------------------- evaluation

MetricsReport evaluate(const ModelParams& params, const EmbeddingMatrix& e,
                       std::span<const EncodedDocument> docs,
                       std::span<const std::string> publications) {
    std::vector<std::size_t> sat_true, sat_pred, pub_true, pub_pred;
    for (const EncodedDocument& d : docs) {
        const Features f = extract_features(params.extractor, d, e);
        sat_true.push_back(d.satire);
        pub_true.push_back(d.publication);
        sat_pred.push_back(argmax(head_probabilities(params.satire, f.m)));
        pub_pred.push_back(argmax(head_probabilities(params.publication, f.m)));
    }
    const std::vector<std::string> names(publications.begin(), publications.end());
    return make_report(ConfusionCounts::from_predictions(kSatireClasses, sat_true, sat_pred),
                       ConfusionCounts::from_predictions(names, pub_true, pub_pred), pub_pred);
}

// ------------------------------------------------------------------ training

TrainResult train_adversarial(const DataSplits& data, const EmbeddingMatrix& e,
                              const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    if (config.mode != TrainMode::adversarial) {
        throw std::invalid_argument("train_adversarial: config mode is not adversarial");
    }
    require_data(data);
    TrainingSession s(init_params(dims_for(data, e, config), config.seed), e, config);
    BatchIterator satire_batches(data.train.size(), config.batch_size,
                                 derive_seed(config.seed, "shuffle/satire"));
    BatchIterator publication_batches(data.train.size(), config.batch_size,
                                      derive_seed(config.seed, "shuffle/publication"));
    const bool reverse = config.lambda > 0.0;

    TrainResult result{s.params, s.embeddings, {}};
    double best_f1 = -1.0;
    std::size_t stale = 0;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double sum_js = 0.0;
        double sum_jp = 0.0;
        const std::size_t batches = satire_batches.batches_per_epoch();
        for (std::size_t b = 0; b < batches; ++b) {
            ++step;
            const auto sb = gather(data.train, satire_batches.next());
            sum_js += guarded_step(step, [&] { return s.satire_step(sb); });
            if (observer) {
                observer(StepEvent{step, StepKind::satire, s.params});
            }
            ++step;
            const auto pb = gather(data.train, publication_batches.next());
            sum_jp += guarded_step(step, [&] { return s.publication_step(pb, reverse); });
            if (observer) {
                observer(StepEvent{step, StepKind::publication, s.params});
            }
        }
        const MetricsReport dev = evaluate(s.params, s.embeddings, data.dev, data.publications);
        result.log.records.push_back(EvalRecord{1, epoch, step, dev.satire, dev.publication,
                                                sum_js / static_cast<double>(batches),
                                                sum_jp / static_cast<double>(batches)});
        if (dev.satire.f1 > best_f1) {
            best_f1 = dev.satire.f1;
            stale = 0;
            result.params = s.params;
            result.embeddings = s.embeddings;
            result.log.best = result.log.records.size() - 1;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    return result;
}

TrainResult train_baseline(const DataSplits& data, const EmbeddingMatrix& e,
                           const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    if (config.mode != TrainMode::baseline) {
        throw std::invalid_argument("train_baseline: config mode is not baseline");
    }
    require_data(data);
    TrainingSession s(init_params(dims_for(data, e, config), config.seed), e, config);
    BatchIterator satire_batches(data.train.size(), config.batch_size,
                                 derive_seed(config.seed, "shuffle/satire"));

    // Phase 1: theta_f and theta_s on J_s alone.
    TrainResult result{s.params, s.embeddings, {}};
    double best_f1 = -1.0;
    std::size_t stale = 0;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double sum_js = 0.0;
        const std::size_t batches = satire_batches.batches_per_epoch();
        for (std::size_t b = 0; b < batches; ++b) {
            ++step;
            const auto sb = gather(data.train, satire_batches.next());
            sum_js += guarded_step(step, [&] { return s.satire_step(sb); });
            if (observer) {
                observer(StepEvent{step, StepKind::satire, s.params});
            }
        }
        const MetricsReport dev = evaluate(s.params, s.embeddings, data.dev, data.publications);
        result.log.records.push_back(EvalRecord{1, epoch, step, dev.satire, dev.publication,
                                                sum_js / static_cast<double>(batches),
                                                std::nullopt});
        if (dev.satire.f1 > best_f1) {
            best_f1 = dev.satire.f1;
            stale = 0;
            result.params = s.params;
            result.embeddings = s.embeddings;
            result.log.best = result.log.records.size() - 1;
        } else if (++stale >= config.patience) {
            break;
        }
    }

    // Phase 2: frozen features, publication head only.
    ModelParams& model = result.params;
    const Prf frozen_satire = result.log.records[result.log.best].dev_satire;
    auto features_of = [&](std::span<const EncodedDocument> docs) {
        std::vector<Vector> out;
        out.reserve(docs.size());
        for (const EncodedDocument& d : docs) {
            out.push_back(extract_features(model.extractor, d, result.embeddings).m);
        }
        return out;
    };
    const std::vector<Vector> train_m = features_of(data.train);
    const std::vector<Vector> dev_m = features_of(data.dev);
    std::vector<std::size_t> dev_truth;
    for (const EncodedDocument& d : data.dev) {
        dev_truth.push_back(d.publication);
    }

    AdamState head_state(config.adam());
    BatchIterator publication_batches(data.train.size(), config.batch_size,
                                      derive_seed(config.seed, "shuffle/publication"));
    HeadParams best_head = model.publication;
    double best_pub_f1 = -1.0;
    stale = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double sum_jp = 0.0;
        const std::size_t batches = publication_batches.batches_per_epoch();
        for (std::size_t b = 0; b < batches; ++b) {
            ++step;
            const auto idx = publication_batches.next();
            const double inv = 1.0 / static_cast<double>(idx.size());
            HeadParams grad = zeros_like(model.publication);
            double loss = 0.0;
            for (std::size_t i : idx) {
                const HeadResult h = head_loss(model.publication, train_m[i],
                                               static_cast<Index>(data.train[i].publication));
                loss += h.loss;
                axpy(1.0, h.d_head, grad);
            }
            scale(inv, grad);
            loss *= inv;
            sum_jp += guarded_step(step, [&] {
                adam_step(model.publication, grad, head_state);
                return loss;
            });
            if (observer) {
                observer(StepEvent{step, StepKind::publication, model});
            }
        }
        std::vector<std::size_t> predicted;
        predicted.reserve(dev_m.size());
        for (const Vector& m : dev_m) {
            predicted.push_back(argmax(head_probabilities(model.publication, m)));
        }
        const Prf dev_pub = weighted_macro_prf(
            ConfusionCounts::from_predictions(data.publications, dev_truth, predicted));
        result.log.records.push_back(EvalRecord{2, epoch, step, frozen_satire, dev_pub,
                                                std::nullopt,
                                                sum_jp / static_cast<double>(batches)});
        if (dev_pub.f1 > best_pub_f1) {
            best_pub_f1 = dev_pub.f1;
            stale = 0;
            best_head = model.publication;
            result.log.best_probe = result.log.records.size() - 1;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    model.publication = best_head;
    return result;
}

TrainResult train(const DataSplits& data, const EmbeddingMatrix& e, const TrainConfig& config,
                  const StepObserver& observer) {
    return config.mode == TrainMode::adversarial ? train_adversarial(data, e, config, observer)
                                                 : train_baseline(data, e, config, observer);
}

// --------------------------------------------------------------------- sweep

CollapseCheck collapse_check(std::span<const SweepRow> rows, std::size_t best,
                             double threshold) {
    CollapseCheck c;
    if (rows.empty()) {
        return c;
    }
    const double best_f1 = rows[best].best.dev_satire.f1;
    for (const SweepRow& r : rows) {
        const double drop = best_f1 - r.best.dev_satire.f1;
        if (drop > threshold && (c.vacuous || r.lambda > c.lambda)) {
            c.vacuous = false;
            c.lambda = r.lambda;
            c.satire_f1_drop = drop;
            c.modal_share = r.dev_publication_modal_share;
        }
    }
    return c;
}

std::size_t select_lambda(std::span<const SweepRow> rows) {
    if (rows.empty()) {
        throw std::invalid_argument("select_lambda: no rows");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double f1 = rows[i].best.dev_satire.f1;
        const double best_f1 = rows[best].best.dev_satire.f1;
        if (f1 > best_f1 || (f1 == best_f1 && rows[i].lambda < rows[best].lambda)) {
            best = i;
        }
    }
    return best;
}

SweepResult sweep_lambda(const DataSplits& data, const EmbeddingMatrix& e,
                         const TrainConfig& base, std::span<const double> lambdas) {
    if (lambdas.empty()) {
        throw std::invalid_argument("sweep_lambda: no lambda values");
    }
    SweepResult sweep;
    for (double lambda : lambdas) {
        TrainConfig config = base;
        config.mode = TrainMode::adversarial;
        config.lambda = lambda;
        SweepRow row;
        row.lambda = lambda;
        row.result = train_adversarial(data, e, config);
        row.best = row.result.log.records[row.result.log.best];
        const MetricsReport dev =
            evaluate(row.result.params, row.result.embeddings, data.dev, data.publications);
        row.dev_publication_modal_share = dev.publication_histogram.modal_share;
        sweep.rows.push_back(std::move(row));
    }
    sweep.best = select_lambda(sweep.rows);
    sweep.collapse = collapse_check(sweep.rows, sweep.best);
    return sweep;
}

std::string render_sweep_report(const SweepResult& sweep) {
    std::vector<std::pair<std::string, MetricsReport>> rows;
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const SweepRow& r = sweep.rows[i];
        MetricsReport m;
        m.satire = r.best.dev_satire;
        m.publication = r.best.dev_publication;
        std::string name = "adv, λ=" + format_lambda(r.lambda);
        if (i == sweep.best) {
            name += " *";
        }
        rows.emplace_back(std::move(name), std::move(m));
    }
    std::string out = "dev results per lambda\n" + render_results_table(rows);
    if (!sweep.rows.empty()) {
        out += "* selected: λ=" + format_lambda(sweep.rows[sweep.best].lambda) +
               " (best dev satire F1)\n";
    }
    char buf[256];
    if (sweep.collapse.vacuous) {
        out += "collapse check: no swept λ degrades dev satire F1 by more than 0.1; "
               "passes vacuously\n";
    } else {
        std::snprintf(buf, sizeof(buf),
                      "collapse check: λ=%s drops dev satire F1 by %.3f; modal dev publication "
                      "prediction share %.3f (%s)\n",
                      format_lambda(sweep.collapse.lambda).c_str(), sweep.collapse.satire_f1_drop,
                      sweep.collapse.modal_share,
                      sweep.collapse.modal_share >= 0.95 ? "collapsed" : "not collapsed");
        out += buf;
    }
    return out;
}

// ------------------------------------------------------------------ majority

MajorityPredictor majority_baseline(std::span<const EncodedDocument> train) {
    if (train.empty()) {
        throw std::invalid_argument("majority_baseline: empty training split");
    }
    std::vector<std::size_t> satire(2, 0);
    std::vector<std::size_t> publication;
    for (const EncodedDocument& d : train) {
        ++satire.at(d.satire);
        if (d.publication >= publication.size()) {
            publication.resize(d.publication + 1, 0);
        }
        ++publication[d.publication];
    }
    auto mode = [](const std::vector<std::size_t>& counts) {
        return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                        counts.begin());
    };
    return MajorityPredictor{mode(satire), mode(publication)};
}

MetricsReport evaluate_majority(const MajorityPredictor& predictor,
                                std::span<const EncodedDocument> docs,
                                std::span<const std::string> publications) {
    std::vector<std::size_t> sat_true, pub_true;
    for (const EncodedDocument& d : docs) {
        sat_true.push_back(d.satire);
        pub_true.push_back(d.publication);
    }
    const std::vector<std::size_t> sat_pred(docs.size(), predictor.satire);
    const std::vector<std::size_t> pub_pred(docs.size(), predictor.publication);
    const std::vector<std::string> names(publications.begin(), publications.end());
    return make_report(ConfusionCounts::from_predictions(kSatireClasses, sat_true, sat_pred),
                       ConfusionCounts::from_predictions(names, pub_true, pub_pred), pub_pred);
}

}  // namespace satadv
