#pragma once

#include <set>
#include <string>
#include <vector>

#include "satadv/synthgen.hpp"
#include "satadv/trainer.hpp"

namespace satadv::testing {

// Fixture-A prepared the way the acceptance runs use it: 80/10/10 split with
// the fixture seed, vocabulary from train, frozen random embeddings.
struct FixtureData {
    SynthSpec spec;
    std::vector<Article> articles;
    CorpusSplit split;
    Vocabulary vocab;
    DataSplits data;
    EmbeddingMatrix embeddings;
};

inline constexpr Index kFixtureDim = 32;

inline FixtureData fixture_data(std::uint64_t seed = 7) {
    SynthSpec spec = fixture_a(seed);
    std::vector<Article> articles = generate(spec);
    CorpusSplit s = split(articles, SplitSpec{0.8, 0.1, 0.1, seed});
    Vocabulary vocab = build_vocabulary(s.train, 2);
    DataSplits data = encode_splits(s, vocab, publication_classes(articles), 500);
    EmbeddingMatrix e = random_embeddings(vocab.size(), kFixtureDim, seed);
    return FixtureData{std::move(spec), std::move(articles), std::move(s), std::move(vocab),
                       std::move(data), std::move(e)};
}

inline TrainConfig fixture_config(TrainMode mode, double lambda = 0.0, std::uint64_t seed = 7) {
    TrainConfig c;
    c.mode = mode;
    c.lambda = lambda;
    c.lr = 3e-3;
    c.batch_size = 32;
    c.max_epochs = 40;
    c.patience = 8;
    c.seed = seed;
    c.hidden = kFixtureDim;
    c.attention = kFixtureDim;
    return c;
}

inline std::set<std::string> as_set(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

}  // namespace satadv::testing
