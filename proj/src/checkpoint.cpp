#include "satadv/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace satadv {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host byte order");

namespace {

using nlohmann::json;

constexpr const char* kFormat = "satadv-checkpoint/1";

struct TensorEntry {
    std::string name;
    Index rows = 0;
    Index cols = 0;
};

// Model tensors in visit order, then the embedding table.
template <class F>
void for_each_tensor(const ModelParams& params, const Matrix& embedding, F&& f) {
    params.visit([&](std::string_view name, const auto& t) {
        f(std::string(name), t.rows(), t.cols(), t.data());
    });
    f(std::string("embedding"), embedding.rows(), embedding.cols(), embedding.data());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const EmbeddingMatrix& embeddings, const Vocabulary& vocab,
                     const CheckpointMeta& meta) {
    if (static_cast<std::size_t>(embeddings.rows()) != vocab.size()) {
        throw ShapeError("save_checkpoint: embedding rows do not match vocabulary");
    }
    std::filesystem::create_directories(dir);
    const ModelDims dims = params.dims();
    json tensors = json::array();
    std::ofstream blob(dir / kCheckpointBlob, std::ios::binary);
    if (!blob) {
        throw FormatError("cannot write " + (dir / kCheckpointBlob).string());
    }
    std::uint64_t offset = 0;
    for_each_tensor(params, embeddings.input,
                    [&](const std::string& name, Index rows, Index cols, const double* data) {
                        const auto count = static_cast<std::uint64_t>(rows * cols);
                        tensors.push_back(
                            {{"name", name}, {"shape", {rows, cols}}, {"offset", offset}});
                        blob.write(reinterpret_cast<const char*>(data),
                                   static_cast<std::streamsize>(count * sizeof(double)));
                        offset += count;
                    });
    json manifest = {
        {"format", kFormat},
        {"tag", meta.tag},
        {"dims",
         {{"embed", dims.embed},
          {"hidden", dims.hidden},
          {"attention", dims.attention},
          {"publications", dims.publications},
          {"vocabulary", vocab.size()}}},
        {"publications", meta.publications},
        {"seed", meta.seed},
        {"vocab_hash", vocab.digest()},
        {"config", meta.config},
        {"blob", kCheckpointBlob},
        {"values", offset},
        {"tensors", tensors},
    };
    std::ofstream out(dir / kCheckpointManifest, std::ios::binary);
    out << manifest.dump(2) << '\n';
    vocab.save(dir / kCheckpointVocab);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / kCheckpointManifest);
    if (!in) {
        throw FormatError("cannot open " + (dir / kCheckpointManifest).string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("checkpoint manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != kFormat) {
        throw FormatError("checkpoint manifest: unsupported format");
    }
    Checkpoint ck{ModelParams{}, EmbeddingMatrix{}, Vocabulary::load(dir / kCheckpointVocab),
                  CheckpointMeta{}};
    try {
        const json& d = manifest.at("dims");
        const ModelDims dims{d.at("embed").get<Index>(), d.at("hidden").get<Index>(),
                             d.at("attention").get<Index>(), d.at("publications").get<Index>()};
        const auto vocab_size = d.at("vocabulary").get<Index>();
        if (manifest.at("vocab_hash").get<std::string>() != ck.vocab.digest() ||
            static_cast<std::size_t>(vocab_size) != ck.vocab.size()) {
            throw FormatError("checkpoint vocabulary does not match its manifest");
        }
        ck.params = ModelParams::zeros(dims);
        ck.embeddings.input = Matrix::Zero(vocab_size, dims.embed);
        ck.meta.tag = manifest.at("tag").get<std::string>();
        ck.meta.seed = manifest.at("seed").get<std::uint64_t>();
        ck.meta.publications = manifest.at("publications").get<std::vector<std::string>>();
        ck.meta.config = manifest.at("config");
        if (static_cast<Index>(ck.meta.publications.size()) != dims.publications) {
            throw FormatError("checkpoint: publication list does not match dims");
        }

        std::vector<TensorEntry> expected;
        std::vector<double*> targets;
        auto collect = [&](std::string_view name, auto& t) {
            expected.push_back({std::string(name), t.rows(), t.cols()});
            targets.push_back(t.data());
        };
        ck.params.visit(collect);
        collect("embedding", ck.embeddings.input);

        const json& tensors = manifest.at("tensors");
        if (tensors.size() != expected.size()) {
            throw FormatError("checkpoint: manifest lists " + std::to_string(tensors.size()) +
                              " tensors, model has " + std::to_string(expected.size()));
        }
        std::ifstream blob(dir / manifest.at("blob").get<std::string>(), std::ios::binary);
        if (!blob) {
            throw FormatError("cannot open checkpoint blob");
        }
        std::uint64_t offset = 0;
        for (std::size_t k = 0; k < expected.size(); ++k) {
            const json& t = tensors[k];
            const auto shape = t.at("shape").get<std::vector<Index>>();
            if (t.at("name").get<std::string>() != expected[k].name || shape.size() != 2 ||
                shape[0] != expected[k].rows || shape[1] != expected[k].cols ||
                t.at("offset").get<std::uint64_t>() != offset) {
                throw FormatError("checkpoint: tensor " + std::to_string(k) + " ('" +
                                  t.at("name").get<std::string>() +
                                  "') does not match expected '" + expected[k].name + "' " +
                                  std::to_string(expected[k].rows) + "x" +
                                  std::to_string(expected[k].cols));
            }
            const auto count = static_cast<std::uint64_t>(expected[k].rows * expected[k].cols);
            blob.read(reinterpret_cast<char*>(targets[k]),
                      static_cast<std::streamsize>(count * sizeof(double)));
            if (!blob) {
                throw FormatError("checkpoint blob is truncated");
            }
            offset += count;
        }
        if (blob.peek() != std::char_traits<char>::eof()) {
            throw FormatError("checkpoint blob has trailing data");
        }
        if (manifest.at("values").get<std::uint64_t>() != offset) {
            throw FormatError("checkpoint: value count mismatch");
        }
    } catch (const json::exception& e) {
        throw FormatError("checkpoint manifest: " + std::string(e.what()));
    }
    return ck;
}

}  // namespace satadv
