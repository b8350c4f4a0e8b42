#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "satadv/corpus.hpp"
#include "satadv/embeddings.hpp"
#include "satadv/model.hpp"

namespace satadv {

struct AttentionMap {
    std::string id;
    std::string model;  // tag such as "no adv" or "adv, λ=0.2"
    Tokens tokens;
    std::vector<double> weights;  // raw fractions
};

/// Tokens are the vocabulary entries of the encoded indices (OOV shows as
/// <UNK>); weights are the model's attention vector.
AttentionMap extract_attention(const ModelParams& params, const EncodedDocument& doc,
                               const EmbeddingMatrix& e, const Vocabulary& vocab,
                               const std::string& model);

/// Same weights, labelled with the article's surface tokens (title then body,
/// truncated to the encoded length).
AttentionMap extract_attention(const ModelParams& params, const Article& article,
                               const EncodedDocument& doc, const EmbeddingMatrix& e,
                               const std::string& model);

enum class HeatmapFormat { html, ansi };

HeatmapFormat parse_heatmap_format(const std::string& s);

/// One labelled row per map, in order. Shading is weight / max weight of the
/// map.
std::string render_heatmap(std::span<const AttentionMap> maps, HeatmapFormat format);

/// Summed weight on positions whose token is in `tokens`.
double attention_mass_on(const std::set<std::string>& tokens, const AttentionMap& map);

nlohmann::json to_json(const AttentionMap& map);
AttentionMap attention_map_from_json(const nlohmann::json& j);

}  // namespace satadv
