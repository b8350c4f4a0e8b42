#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "satadv/corpus.hpp"

namespace satadv {

struct SynthPublication {
    std::string name;
    bool satire = false;
    std::string marker;  // token unique to this publication
};

/// Seeded synthetic corpus with planted publication markers and satire cues.
/// Background tokens are "w0000" .. "w{vocab_size-1}"; titles hold 2-5
/// background tokens and cues are only ever placed in the body.
struct SynthSpec {
    std::vector<SynthPublication> publications;
    std::size_t articles_per_publication = 200;
    std::size_t vocab_size = 1000;
    std::size_t min_length = 20;  // background body tokens
    std::size_t max_length = 60;
    double publication_cue_rate = 0.9;
    std::vector<std::string> satire_cues;
    double satire_cue_rate = 0.9;
    std::uint64_t seed = 7;

    void validate() const;
    std::vector<std::string> markers() const;
};

/// K=4 (two satire, two regular), 200 articles each, 1,000 background tokens,
/// body lengths 20-60, both cue rates 0.9.
SynthSpec fixture_a(std::uint64_t seed = 7);

/// Background token number `i`.
std::string background_token(std::size_t i);

/// Articles grouped by publication in spec order. Each document draws from its
/// own stream, so the result does not depend on generation order.
std::vector<Article> generate(const SynthSpec& spec);

/// Ground-truth cue inventory plus every generation parameter.
nlohmann::json describe(const SynthSpec& spec);
SynthSpec spec_from_manifest(const nlohmann::json& manifest);

}  // namespace satadv
