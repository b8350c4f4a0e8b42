#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "satadv/corpus.hpp"
#include "satadv/embeddings.hpp"
#include "satadv/metrics.hpp"
#include "satadv/model.hpp"
#include "satadv/netcore.hpp"

namespace satadv {

enum class TrainMode { adversarial, baseline };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& s);

struct TrainConfig {
    TrainMode mode = TrainMode::adversarial;
    double lambda = 0.0;
    double lr = 1e-4;
    double decay = 1e-6;
    std::size_t batch_size = 32;
    std::size_t max_len = 500;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;  // evaluations without improvement before stopping
    std::uint64_t seed = 0;
    bool finetune_embeddings = false;
    std::size_t threads = 1;
    Index hidden = 300;
    Index attention = 600;

    void validate() const;
    nlohmann::json to_json() const;
    AdamConfig adam() const { return AdamConfig{lr, decay}; }
};

/// Tag used in tables and checkpoints: "no adv" or "adv, λ=0.2".
std::string model_tag(const TrainConfig& config);

struct DataSplits {
    std::vector<EncodedDocument> train;
    std::vector<EncodedDocument> dev;
    std::vector<EncodedDocument> test;
    std::vector<std::string> publications;
};

/// Encodes every split with `vocab`; class indices follow `publications`.
DataSplits encode_splits(const CorpusSplit& split, const Vocabulary& vocab,
                         std::span<const std::string> publications, std::size_t max_len);

struct EvalRecord {
    int phase = 1;  // 2 = frozen-feature publication probe (baseline only)
    std::size_t epoch = 0;
    std::size_t step = 0;
    Prf dev_satire;
    Prf dev_publication;
    std::optional<double> mean_js;
    std::optional<double> mean_jp;
};

struct TrainLog {
    std::vector<EvalRecord> records;
    std::size_t best = 0;                   // record of the returned satire model
    std::optional<std::size_t> best_probe;  // baseline phase-2 record

    /// One JSON object per line.
    std::string to_jsonl() const;
};

class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(std::size_t step, const std::string& what);
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

enum class StepKind { satire, publication };

struct StepEvent {
    std::size_t step;
    StepKind kind;
    const ModelParams& params;
};

using StepObserver = std::function<void(const StepEvent&)>;

struct TrainResult {
    ModelParams params;
    EmbeddingMatrix embeddings;
    TrainLog log;
};

/// Mean loss and gradients over a batch for one branch. Documents are reduced
/// in batch order regardless of `threads`.
struct BatchGrad {
    double mean_loss = 0.0;
    HeadParams d_head;
    FeatureExtractorParams d_extractor;  // zero unless requested
    Matrix d_embedding;                  // V x D, empty unless requested
};

struct GradRequest {
    bool extractor = true;
    bool embedding = false;
};

BatchGrad batch_gradient(const ModelParams& params, const EmbeddingMatrix& e,
                         std::span<const EncodedDocument* const> batch, StepKind branch,
                         GradRequest request = {}, std::size_t threads = 1);

/// Epoch-wise reshuffled minibatches over [0, n). The final batch of an epoch
/// may be short.
class BatchIterator {
public:
    BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed);

    std::vector<std::size_t> next();
    std::size_t batches_per_epoch() const;

private:
    void reshuffle();

    std::size_t n_;
    std::size_t batch_size_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

/// Parameters, embeddings and one Adam state per parameter group.
class TrainingSession {
public:
    TrainingSession(ModelParams params, EmbeddingMatrix embeddings, const TrainConfig& config);

    /// theta_s and theta_f descend on the batch-mean J_s. Returns the loss.
    double satire_step(std::span<const EncodedDocument* const> batch);

    /// theta_p descends on the batch-mean J_p; when `update_extractor` is set,
    /// theta_f moves along -lambda * dJ_p/dtheta_f.
    double publication_step(std::span<const EncodedDocument* const> batch,
                            bool update_extractor);

    ModelParams params;
    EmbeddingMatrix embeddings;
    AdamState extractor_state;
    AdamState satire_state;
    AdamState publication_state;
    AdamState embedding_state;

private:
    void update_embeddings(Matrix& grad);

    TrainConfig config_;
};

MetricsReport evaluate(const ModelParams& params, const EmbeddingMatrix& e,
                       std::span<const EncodedDocument> docs,
                       std::span<const std::string> publications);

/// Alternating satire / publication steps with gradient reversal into the
/// shared extractor; early stopping on dev satire F1.
TrainResult train_adversarial(const DataSplits& data, const EmbeddingMatrix& e,
                              const TrainConfig& config, const StepObserver& observer = {});

/// Phase 1: satire detector alone. Phase 2: frozen extractor, publication
/// head trained on top with early stopping on dev publication weighted F1.
TrainResult train_baseline(const DataSplits& data, const EmbeddingMatrix& e,
                           const TrainConfig& config, const StepObserver& observer = {});

TrainResult train(const DataSplits& data, const EmbeddingMatrix& e, const TrainConfig& config,
                  const StepObserver& observer = {});

struct SweepRow {
    double lambda = 0.0;
    EvalRecord best;
    double dev_publication_modal_share = 0.0;
    TrainResult result;
};

/// The collapse check looks at the largest lambda whose dev satire F1 is more
/// than `threshold` below the best row's.
struct CollapseCheck {
    bool vacuous = true;
    double lambda = 0.0;
    double satire_f1_drop = 0.0;
    double modal_share = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best = 0;  // argmax dev satire F1, ties to the smaller lambda
    CollapseCheck collapse;
};

/// Row with the highest dev satire F1; ties go to the smaller lambda.
std::size_t select_lambda(std::span<const SweepRow> rows);

SweepResult sweep_lambda(const DataSplits& data, const EmbeddingMatrix& e,
                         const TrainConfig& base, std::span<const double> lambdas);

CollapseCheck collapse_check(std::span<const SweepRow> rows, std::size_t best,
                             double threshold = 0.1);

/// Dev table in results-table layout with the selected lambda marked and the
/// collapse analysis appended.
std::string render_sweep_report(const SweepResult& sweep);

struct MajorityPredictor {
    std::size_t satire = 0;
    std::size_t publication = 0;
};

/// Modal classes of the training split; ties go to the smaller class index.
MajorityPredictor majority_baseline(std::span<const EncodedDocument> train);

MetricsReport evaluate_majority(const MajorityPredictor& predictor,
                                std::span<const EncodedDocument> docs,
                                std::span<const std::string> publications);

}  // namespace satadv
