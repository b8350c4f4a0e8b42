#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "satadv/corpus.hpp"
#include "satadv/embeddings.hpp"
#include "satadv/model.hpp"

namespace satadv {

struct CheckpointMeta {
    std::string tag;  // display name, e.g. "no adv" or "adv, λ=0.2"
    std::uint64_t seed = 0;
    std::vector<std::string> publications;  // class index order
    nlohmann::json config = nlohmann::json::object();
};

struct Checkpoint {
    ModelParams params;
    EmbeddingMatrix embeddings;
    Vocabulary vocab;
    CheckpointMeta meta;
};

inline constexpr const char* kCheckpointManifest = "checkpoint.json";
inline constexpr const char* kCheckpointBlob = "checkpoint.bin";
inline constexpr const char* kCheckpointVocab = "vocab.tsv";

/// Writes checkpoint.json (tensor names, shapes and offsets in blob order,
/// dims, vocabulary digest, seed, config), checkpoint.bin (little-endian
/// float64 values in manifest order, embedding table last) and vocab.tsv.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const EmbeddingMatrix& embeddings, const Vocabulary& vocab,
                     const CheckpointMeta& meta);

/// Validates every tensor name and shape against the manifest, the blob size,
/// and the vocabulary digest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace satadv
