#include "satadv/synthgen.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

#include "satadv/rng.hpp"

namespace satadv {

namespace {

constexpr std::size_t kMinTitle = 2;
constexpr std::size_t kMaxTitle = 5;
constexpr const char* kManifestFormat = "satadv-synth/1";

std::size_t draw_between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

void insert_at_random(Tokens& body, const std::string& token, Rng& rng) {
    const auto pos = static_cast<std::ptrdiff_t>(rng.below(body.size() + 1));
    body.insert(body.begin() + pos, token);
}

std::string article_id(std::size_t pub, std::size_t j) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "p%zu-%04zu", pub, j);
    return buf;
}

}  // namespace

std::string background_token(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%04zu", i);
    return buf;
}

void SynthSpec::validate() const {
    if (publications.size() < 2) {
        throw std::invalid_argument("synth spec needs at least 2 publications");
    }
    std::size_t satire_pubs = 0;
    std::set<std::string> names;
    std::set<std::string> cues;
    for (const SynthPublication& p : publications) {
        satire_pubs += p.satire ? 1 : 0;
        if (p.name.empty() || !names.insert(p.name).second) {
            throw std::invalid_argument("synth spec: publication names must be unique and nonempty");
        }
        if (p.marker.empty() || !cues.insert(p.marker).second) {
            throw std::invalid_argument("synth spec: marker '" + p.marker +
                                        "' is empty or shared between publications");
        }
    }
    if (satire_pubs == 0 || satire_pubs == publications.size()) {
        throw std::invalid_argument(
            "synth spec needs at least one satire and one regular publication");
    }
    for (const std::string& c : satire_cues) {
        if (c.empty() || !cues.insert(c).second) {
            throw std::invalid_argument("synth spec: satire cue '" + c +
                                        "' is empty or overlaps another cue");
        }
    }
    if (satire_cue_rate > 0.0 && satire_cues.empty()) {
        throw std::invalid_argument("synth spec: satire cue rate > 0 but no satire cues");
    }
    for (double r : {publication_cue_rate, satire_cue_rate}) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw std::invalid_argument("synth spec: rates must lie in [0, 1]");
        }
    }
    if (articles_per_publication < 1 || vocab_size < 1) {
        throw std::invalid_argument("synth spec: articles per publication and vocabulary size must be >= 1");
    }
    if (min_length < 1 || min_length > max_length) {
        throw std::invalid_argument("synth spec: need 1 <= min_length <= max_length");
    }
    for (const std::string& c : cues) {
        const bool numbered = c.size() >= 5 && c.size() <= 12 && c[0] == 'w' &&
                              c.find_first_not_of("0123456789", 1) == std::string::npos;
        if (numbered && background_token(std::stoull(c.substr(1))) == c &&
            std::stoull(c.substr(1)) < vocab_size) {
            throw std::invalid_argument("synth spec: cue '" + c + "' collides with background vocabulary");
        }
        if (c.find_first_of(" \t\r\n") != std::string::npos || is_punctuation_token(c)) {
            throw std::invalid_argument("synth spec: cue '" + c + "' is not a single word token");
        }
    }
}

std::vector<std::string> SynthSpec::markers() const {
    std::vector<std::string> out;
    for (const SynthPublication& p : publications) {
        out.push_back(p.marker);
    }
    return out;
}

SynthSpec fixture_a(std::uint64_t seed) {
    SynthSpec s;
    s.publications = {{"pub0", true, "mk0"},
                      {"pub1", true, "mk1"},
                      {"pub2", false, "mk2"},
                      {"pub3", false, "mk3"}};
    s.satire_cues = {"sc0", "sc1", "sc2", "sc3"};
    s.seed = seed;
    return s;
}

std::vector<Article> generate(const SynthSpec& spec) {
    spec.validate();
    const std::uint64_t master = derive_seed(spec.seed, "synth");
    std::vector<Article> out;
    out.reserve(spec.publications.size() * spec.articles_per_publication);
    for (std::size_t p = 0; p < spec.publications.size(); ++p) {
        const SynthPublication& pub = spec.publications[p];
        for (std::size_t j = 0; j < spec.articles_per_publication; ++j) {
            Article a;
            a.id = article_id(p, j);
            a.publication = pub.name;
            a.satire = pub.satire;
            Rng rng = Rng::stream(master, a.id);
            const std::size_t title_len = draw_between(rng, kMinTitle, kMaxTitle);
            for (std::size_t t = 0; t < title_len; ++t) {
                a.title.push_back(background_token(rng.below(spec.vocab_size)));
            }
            const std::size_t body_len = draw_between(rng, spec.min_length, spec.max_length);
            for (std::size_t t = 0; t < body_len; ++t) {
                a.body.push_back(background_token(rng.below(spec.vocab_size)));
            }
            // Both draws happen for every document so the streams stay aligned
            // when rates change.
            const bool marker = rng.bernoulli(spec.publication_cue_rate);
            const bool cue = rng.bernoulli(spec.satire_cue_rate);
            if (marker) {
                insert_at_random(a.body, pub.marker, rng);
            }
            if (pub.satire && cue && !spec.satire_cues.empty()) {
                insert_at_random(a.body, spec.satire_cues[rng.below(spec.satire_cues.size())], rng);
            }
            out.push_back(std::move(a));
        }
    }
    return out;
}

nlohmann::json describe(const SynthSpec& spec) {
    nlohmann::json pubs = nlohmann::json::array();
    for (const SynthPublication& p : spec.publications) {
        pubs.push_back({{"name", p.name}, {"satire", p.satire}, {"marker", p.marker}});
    }
    return {{"format", kManifestFormat},
            {"publications", pubs},
            {"markers", spec.markers()},
            {"satire_cues", spec.satire_cues},
            {"articles_per_publication", spec.articles_per_publication},
            {"vocab_size", spec.vocab_size},
            {"min_length", spec.min_length},
            {"max_length", spec.max_length},
            {"publication_cue_rate", spec.publication_cue_rate},
            {"satire_cue_rate", spec.satire_cue_rate},
            {"seed", spec.seed}};
}

SynthSpec spec_from_manifest(const nlohmann::json& manifest) {
    if (manifest.value("format", "") != kManifestFormat) {
        throw std::invalid_argument("not a synth manifest (format '" +
                                    manifest.value("format", "") + "')");
    }
    SynthSpec s;
    for (const auto& p : manifest.at("publications")) {
        s.publications.push_back({p.at("name").get<std::string>(), p.at("satire").get<bool>(),
                                  p.at("marker").get<std::string>()});
    }
    s.satire_cues = manifest.at("satire_cues").get<std::vector<std::string>>();
    s.articles_per_publication = manifest.at("articles_per_publication").get<std::size_t>();
    s.vocab_size = manifest.at("vocab_size").get<std::size_t>();
    s.min_length = manifest.at("min_length").get<std::size_t>();
    s.max_length = manifest.at("max_length").get<std::size_t>();
    s.publication_cue_rate = manifest.at("publication_cue_rate").get<double>();
    s.satire_cue_rate = manifest.at("satire_cue_rate").get<double>();
    s.seed = manifest.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

}  // namespace satadv
