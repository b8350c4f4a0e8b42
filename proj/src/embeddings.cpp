#include "satadv/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace satadv {

namespace {

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

// -log sigma(x)
double softplus_neg(double x) {
    return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

}  // namespace

void SgnsConfig::validate() const {
    if (window < 1) {
        throw std::invalid_argument("sgns: window must be >= 1");
    }
    if (negatives < 1) {
        throw std::invalid_argument("sgns: negatives must be >= 1");
    }
    if (dim < 1 || epochs < 0 || !(lr > 0.0)) {
        throw std::invalid_argument("sgns: dim, epochs and lr must be positive");
    }
}

UnigramSampler::UnigramSampler(std::span<const double> counts, double power) {
    double total = 0.0;
    probabilities_.reserve(counts.size());
    for (double c : counts) {
        const double w = c > 0.0 ? std::pow(c, power) : 0.0;
        probabilities_.push_back(w);
        total += w;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("UnigramSampler: all counts are zero");
    }
    double running = 0.0;
    cumulative_.reserve(counts.size());
    for (double& p : probabilities_) {
        p /= total;
        running += p;
        cumulative_.push_back(running);
    }
}

std::size_t UnigramSampler::sample(Rng& rng) const {
    const double r = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
    if (idx == cumulative_.size()) {
        // r rounded up to the total; take the last entry with mass.
        idx = cumulative_.size() - 1;
        while (probabilities_[idx] == 0.0) {
            --idx;
        }
    }
    return idx;
}

SgnsPairGrad sgns_pair_loss(const Vector& center, const Vector& context,
                            std::span<const Vector> negatives) {
    if (center.size() != context.size()) {
        throw ShapeError("sgns_pair_loss: center is " + shape_of(center) +
                         ", context is " + shape_of(context));
    }
    SgnsPairGrad g;
    const double s_pos = context.dot(center);
    g.loss = softplus_neg(s_pos);
    const double coef_pos = -(1.0 - sigmoid(s_pos));
    g.d_context = coef_pos * center;
    g.d_center = coef_pos * context;
    for (const Vector& u : negatives) {
        if (u.size() != center.size()) {
            throw ShapeError("sgns_pair_loss: negative is " + shape_of(u));
        }
        const double s = u.dot(center);
        g.loss += softplus_neg(-s);
        const double coef = sigmoid(s);
        g.d_negatives.push_back(coef * center);
        g.d_center += coef * u;
    }
    return g;
}

double sgns_pair_update(EmbeddingMatrix& e, std::size_t center, std::size_t context,
                        std::span<const std::size_t> negatives, double lr) {
    const Index ci = static_cast<Index>(center);
    const Index oi = static_cast<Index>(context);
    const Vector v = e.input.row(ci).transpose();
    Vector d_center = Vector::Zero(v.size());
    const double s_pos = e.output.row(oi).dot(v);
    double loss = softplus_neg(s_pos);
    const double coef_pos = -(1.0 - sigmoid(s_pos));
    d_center += coef_pos * e.output.row(oi).transpose();
    // Negative gradients use pre-update context vectors.
    std::vector<double> coefs;
    coefs.reserve(negatives.size());
    for (std::size_t k : negatives) {
        const Index ki = static_cast<Index>(k);
        const double s = e.output.row(ki).dot(v);
        loss += softplus_neg(-s);
        const double coef = sigmoid(s);
        coefs.push_back(coef);
        d_center += coef * e.output.row(ki).transpose();
    }
    e.output.row(oi) -= lr * coef_pos * v.transpose();
    for (std::size_t j = 0; j < negatives.size(); ++j) {
        e.output.row(static_cast<Index>(negatives[j])) -= lr * coefs[j] * v.transpose();
    }
    e.input.row(ci) -= lr * d_center.transpose();
    return loss;
}

EmbeddingMatrix random_embeddings(std::size_t vocab_size, Index dim, std::uint64_t seed,
                                  double scale) {
    if (vocab_size < 2 || dim < 1 || !(scale > 0.0)) {
        throw std::invalid_argument("random_embeddings: need vocab_size >= 2, dim >= 1, scale > 0");
    }
    const auto rows = static_cast<Index>(vocab_size);
    Rng rng = Rng::stream(seed, "embed/random");
    EmbeddingMatrix e{Matrix(rows, dim), Matrix::Zero(rows, dim)};
    for (Index i = 0; i < e.input.size(); ++i) {
        e.input.data()[i] = rng.uniform(-scale, scale);
    }
    e.input.row(Vocabulary::kPad).setZero();
    return e;
}

EmbeddingMatrix sgns_train(std::span<const EncodedDocument> corpus,
                           const Vocabulary& vocab, const SgnsConfig& config,
                           const std::function<void(int, const EmbeddingMatrix&)>& on_epoch) {
    config.validate();
    if (corpus.empty()) {
        throw std::invalid_argument("sgns_train: empty corpus");
    }
    const Index v_size = static_cast<Index>(vocab.size());
    std::vector<double> counts(vocab.size(), 0.0);
    std::size_t total_tokens = 0;
    for (const EncodedDocument& d : corpus) {
        for (std::size_t t = 0; t < d.length; ++t) {
            if (d.indices[t] >= vocab.size()) {
                throw std::out_of_range("sgns_train: index outside vocabulary");
            }
            if (d.indices[t] != Vocabulary::kPad) {
                counts[d.indices[t]] += 1.0;
                ++total_tokens;
            }
        }
    }
    const UnigramSampler sampler(counts);

    Rng init = Rng::stream(config.seed, "sgns/init");
    EmbeddingMatrix e{Matrix(v_size, config.dim), Matrix::Zero(v_size, config.dim)};
    for (Index r = 0; r < v_size; ++r) {
        for (Index c = 0; c < config.dim; ++c) {
            e.input(r, c) = (init.uniform() - 0.5) / static_cast<double>(config.dim);
        }
    }
    e.input.row(Vocabulary::kPad).setZero();

    Rng rng = Rng::stream(config.seed, "sgns/train");
    const double planned = static_cast<double>(total_tokens) * config.epochs;
    std::size_t processed = 0;
    std::vector<std::size_t> negs;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const EncodedDocument& d : corpus) {
            const auto n = static_cast<std::ptrdiff_t>(d.length);
            for (std::ptrdiff_t t = 0; t < n; ++t) {
                const std::size_t center = d.indices[static_cast<std::size_t>(t)];
                if (center == Vocabulary::kPad) {
                    continue;
                }
                const double lr =
                    config.lr * std::max(1.0 - static_cast<double>(processed) / planned, 1e-4);
                ++processed;
                const auto reach = static_cast<std::ptrdiff_t>(
                    config.window - static_cast<int>(rng.below(static_cast<std::uint64_t>(config.window))));
                for (std::ptrdiff_t o = std::max<std::ptrdiff_t>(0, t - reach);
                     o <= std::min(n - 1, t + reach); ++o) {
                    const std::size_t context = d.indices[static_cast<std::size_t>(o)];
                    if (o == t || context == Vocabulary::kPad) {
                        continue;
                    }
                    negs.clear();
                    for (int k = 0; k < config.negatives; ++k) {
                        const std::size_t neg = sampler.sample(rng);
                        if (neg != context) {
                            negs.push_back(neg);
                        }
                    }
                    sgns_pair_update(e, center, context, negs, lr);
                }
            }
        }
        e.input.row(Vocabulary::kPad).setZero();
        if (on_epoch) {
            on_epoch(epoch, e);
        }
    }
    return e;
}

void save_embeddings(const EmbeddingMatrix& e, const Vocabulary& vocab,
                     const std::filesystem::path& path) {
    if (static_cast<std::size_t>(e.rows()) != vocab.size()) {
        throw ShapeError("save_embeddings: " + std::to_string(e.rows()) + " rows for " +
                         std::to_string(vocab.size()) + " vocabulary entries");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write embedding file " + path.string());
    }
    out << e.rows() << ' ' << e.dim() << '\n';
    char buf[40];
    for (Index r = 0; r < e.rows(); ++r) {
        out << vocab.token(static_cast<std::size_t>(r));
        for (Index c = 0; c < e.dim(); ++c) {
            std::snprintf(buf, sizeof(buf), " %.17g", e.input(r, c));
            out << buf;
        }
        out << '\n';
    }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                const Vocabulary& vocab, Index expected_dim) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open embedding file " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("embedding file is empty");
    }
    long long rows = 0;
    long long dim = 0;
    {
        std::istringstream header(line);
        if (!(header >> rows >> dim) || rows < 0 || dim < 1) {
            throw FormatError("embedding header must be \"V D\"");
        }
    }
    if (dim != expected_dim) {
        throw FormatError("embedding dimension " + std::to_string(dim) +
                          " does not match expected " + std::to_string(expected_dim));
    }
    std::unordered_map<std::string, Vector> vectors;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto space = line.find(' ');
        if (space == std::string::npos) {
            throw FormatError("embedding line " + std::to_string(line_no) + ": no values");
        }
        Vector v(dim);
        const char* p = line.data() + space;
        const char* end = line.data() + line.size();
        for (Index c = 0; c < dim; ++c) {
            while (p < end && *p == ' ') {
                ++p;
            }
            const auto res = std::from_chars(p, end, v[c]);
            if (res.ec != std::errc()) {
                throw FormatError("embedding line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(dim) + " values");
            }
            p = res.ptr;
        }
        while (p < end && *p == ' ') {
            ++p;
        }
        if (p != end) {
            throw FormatError("embedding line " + std::to_string(line_no) +
                              ": more than " + std::to_string(dim) + " values");
        }
        vectors.emplace(line.substr(0, space), std::move(v));
    }
    if (static_cast<long long>(vectors.size()) != rows) {
        throw FormatError("embedding header announces " + std::to_string(rows) +
                          " rows, file has " + std::to_string(vectors.size()));
    }
    const auto unk_it = vectors.find(std::string(Vocabulary::kUnkToken));
    const Vector unk = unk_it != vectors.end() ? unk_it->second : Vector::Zero(dim);
    EmbeddingMatrix e{Matrix(static_cast<Index>(vocab.size()), dim), Matrix()};
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const auto it = vectors.find(vocab.token(i));
        e.input.row(static_cast<Index>(i)) = (it != vectors.end() ? it->second : unk).transpose();
    }
    e.input.row(Vocabulary::kPad).setZero();
    return e;
}

double cosine(const Vector& a, const Vector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    return na == 0.0 || nb == 0.0 ? 0.0 : a.dot(b) / (na * nb);
}

}  // namespace satadv
