#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace satadv {

using Tokens = std::vector<std::string>;

/// One news document with its publication source and satire label.
struct Article {
    std::string id;
    Tokens title;
    Tokens body;
    std::string publication;
    bool satire = false;
};

/// Raised for malformed corpus, vocabulary, or embedding files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a JSON-lines corpus (keys id, title, text, publication, satire).
/// Errors name the offending line number; duplicate ids are rejected.
std::vector<Article> load_corpus(const std::filesystem::path& path);

/// Writes articles as JSON-lines; title and text are the tokens joined by
/// single spaces.
void save_corpus(std::span<const Article> articles,
                 const std::filesystem::path& path);

/// Whitespace split followed by peeling leading/trailing punctuation into
/// single-character tokens. Case is preserved; inner punctuation
/// ("NPD-Funktionäre") stays attached.
Tokens tokenize(std::string_view text);

/// Token/index mapping. Index 0 is <PAD> and index 1 is <UNK>; the remaining
/// entries are sorted by descending count, ties lexicographic.
class Vocabulary {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;
    static constexpr std::string_view kPadToken = "<PAD>";
    static constexpr std::string_view kUnkToken = "<UNK>";

    Vocabulary();

    std::size_t size() const { return tokens_.size(); }
    std::size_t min_count() const { return min_count_; }

    /// Index of `token`, or kUnk when absent.
    std::size_t index_of(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(std::size_t index) const { return tokens_.at(index); }
    std::uint64_t count(std::size_t index) const { return counts_.at(index); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// Saves as one `token<TAB>count` line per index.
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    /// FNV-1a digest of the serialized form, hex encoded.
    std::string digest() const;

private:
    friend Vocabulary build_vocabulary(std::span<const Article>, std::size_t);

    void append(std::string token, std::uint64_t count);

    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t min_count_ = 1;
};

Vocabulary build_vocabulary(std::span<const Article> articles,
                            std::size_t min_count);

struct EncodedDocument {
    std::string id;
    std::vector<std::size_t> indices;  // may be PAD-extended past `length`
    std::size_t length = 0;            // true length before padding
    std::size_t publication = 0;
    std::size_t satire = 0;            // 0 = regular, 1 = satire
};

/// Sorted list of distinct publication names; position = class index.
std::vector<std::string> publication_classes(std::span<const Article> articles);

/// Title tokens followed by body tokens, OOV mapped to UNK, truncated to
/// `max_len`. `publications` supplies the class index mapping.
EncodedDocument encode(const Article& article, const Vocabulary& vocab,
                       std::size_t max_len,
                       std::span<const std::string> publications);

/// Right-pads every document's index list with PAD to `max_len`.
std::vector<std::vector<std::size_t>> pad_batch(
    std::span<const EncodedDocument> docs, std::size_t max_len);

struct SplitSpec {
    double train = 0.8;
    double dev = 0.1;
    double test = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CorpusSplit {
    std::vector<Article> train;
    std::vector<Article> dev;
    std::vector<Article> test;
};

/// Per-publication counts (train, dev, test) by largest-remainder rounding.
/// Train is never empty for a publication with at least one article.
std::tuple<std::size_t, std::size_t, std::size_t> split_counts(
    std::size_t n, const SplitSpec& spec);

/// Stratified by publication; each split keeps the input's relative order.
CorpusSplit split(std::span<const Article> articles, const SplitSpec& spec);

struct StatsRow {
    std::string group;        // "regular", "satire", or "aggregate"
    std::string publication;  // publication name, or "Regular"/"Satire"
    std::size_t articles = 0;
    double article_length = 0.0;
    double sentence_length = 0.0;
    double title_length = 0.0;
};

/// Per-publication corpus statistics (lengths in words, i.e. tokens that
/// are not pure punctuation). Regular publications come first, then satire,
/// then the Regular and Satire aggregate rows.
std::vector<StatsRow> corpus_stats(std::span<const Article> articles);

std::string stats_csv(std::span<const StatsRow> rows);

/// Fixed-width text rendering with thousands separators.
std::string render_stats_table(std::span<const StatsRow> rows);

/// "1234567.891" -> "1,234,567.89" with the given number of decimals.
std::string with_thousands(double value, int decimals);

bool is_punctuation_token(std::string_view token);

}  // namespace satadv
