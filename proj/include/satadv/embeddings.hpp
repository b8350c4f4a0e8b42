#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "satadv/corpus.hpp"
#include "satadv/rng.hpp"
#include "satadv/tensor.hpp"

namespace satadv {

/// Word vectors indexed like the vocabulary. Row 0 (PAD) is all-zero.
struct EmbeddingMatrix {
    Matrix input;   // V x D, the vectors the classifier consumes
    Matrix output;  // V x D context vectors, only populated by pretraining

    Index rows() const { return input.rows(); }
    Index dim() const { return input.cols(); }
};

/// word2vec reference defaults.
struct SgnsConfig {
    Index dim = 300;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;  // decayed linearly to lr * 1e-4 over the run
    std::uint64_t seed = 0;

    void validate() const;
};

/// Draws indices with probability proportional to count^power.
class UnigramSampler {
public:
    explicit UnigramSampler(std::span<const double> counts, double power = 0.75);

    std::size_t sample(Rng& rng) const;
    const std::vector<double>& probabilities() const { return probabilities_; }

private:
    std::vector<double> probabilities_;
    std::vector<double> cumulative_;
};

struct SgnsPairGrad {
    double loss = 0.0;
    Vector d_center;
    Vector d_context;
    std::vector<Vector> d_negatives;
};

/// Negative of log sigma(u_ctx . v_ctr) + sum_neg log sigma(-u_neg . v_ctr),
/// with its gradient w.r.t. every vector involved.
SgnsPairGrad sgns_pair_loss(const Vector& center, const Vector& context,
                            std::span<const Vector> negatives);

/// In-place SGD step on one (center, context, negatives) tuple of rows.
/// Gradients are taken at the pre-update values. Returns the pair loss.
double sgns_pair_update(EmbeddingMatrix& e, std::size_t center, std::size_t context,
                        std::span<const std::size_t> negatives, double lr);

/// Skip-gram with negative sampling over the encoded corpus. Deterministic for
/// a fixed seed. `on_epoch` (optional) sees the matrix after every epoch.
EmbeddingMatrix sgns_train(
    std::span<const EncodedDocument> corpus, const Vocabulary& vocab,
    const SgnsConfig& config,
    const std::function<void(int, const EmbeddingMatrix&)>& on_epoch = {});

/// Untrained table: every non-PAD entry uniform in [-scale, scale], drawn
/// from the "embed/random" stream of `seed`.
EmbeddingMatrix random_embeddings(std::size_t vocab_size, Index dim, std::uint64_t seed,
                                  double scale = 0.5);

/// "V D" header then one "token v1 ... vD" line per vocabulary index, values
/// printed with 17 significant digits.
void save_embeddings(const EmbeddingMatrix& e, const Vocabulary& vocab,
                     const std::filesystem::path& path);

/// Rows are matched to `vocab` by token. Vocabulary tokens missing from the
/// file receive the file's <UNK> vector (zero if the file has none).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const Vocabulary& vocab, Index expected_dim);

double cosine(const Vector& a, const Vector& b);

}  // namespace satadv
