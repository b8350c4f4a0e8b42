#include "satadv/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "satadv/rng.hpp"

namespace satadv {

namespace {

using nlohmann::json;

// Multi-byte punctuation commonly found in German news text.
constexpr std::array<std::string_view, 13> kUtf8Punctuation = {
    "„", "“", "”", "‚", "‘", "’", "«",
    "»", "–", "—", "…", "‹", "›"};

// Length in bytes of the punctuation unit at the start of `s`, or 0.
std::size_t leading_punct(std::string_view s) {
    if (s.empty()) {
        return 0;
    }
    const auto c = static_cast<unsigned char>(s.front());
    if (c < 0x80) {
        return std::ispunct(c) ? 1 : 0;
    }
    for (std::string_view p : kUtf8Punctuation) {
        if (s.starts_with(p)) {
            return p.size();
        }
    }
    return 0;
}

std::size_t trailing_punct(std::string_view s) {
    if (s.empty()) {
        return 0;
    }
    const auto c = static_cast<unsigned char>(s.back());
    if (c < 0x80) {
        return std::ispunct(c) ? 1 : 0;
    }
    for (std::string_view p : kUtf8Punctuation) {
        if (s.ends_with(p)) {
            return p.size();
        }
    }
    return 0;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

std::string join(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += tokens[i];
    }
    return out;
}

std::size_t word_count(const Tokens& tokens) {
    return static_cast<std::size_t>(std::count_if(
        tokens.begin(), tokens.end(),
        [](const std::string& t) { return !is_punctuation_token(t); }));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace

bool is_punctuation_token(std::string_view token) {
    if (token.empty()) {
        return false;
    }
    while (!token.empty()) {
        const std::size_t n = leading_punct(token);
        if (n == 0) {
            return false;
        }
        token.remove_prefix(n);
    }
    return true;
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && is_space(text[pos])) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < text.size() && !is_space(text[pos])) {
            ++pos;
        }
        std::string_view word = text.substr(start, pos - start);
        if (word.empty()) {
            continue;
        }
        Tokens trailing;
        for (std::size_t n = leading_punct(word); n > 0 && !word.empty();
             n = leading_punct(word)) {
            out.emplace_back(word.substr(0, n));
            word.remove_prefix(n);
        }
        for (std::size_t n = trailing_punct(word); n > 0 && !word.empty();
             n = trailing_punct(word)) {
            trailing.emplace_back(word.substr(word.size() - n));
            word.remove_suffix(n);
        }
        if (!word.empty()) {
            out.emplace_back(word);
        }
        out.insert(out.end(), trailing.rbegin(), trailing.rend());
    }
    return out;
}

std::vector<Article> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open corpus file " + path.string());
    }
    std::vector<Article> articles;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), is_space)) {
            continue;
        }
        const std::string where = "line " + std::to_string(line_no);
        Article a;
        try {
            const json record = json::parse(line);
            if (!record.is_object()) {
                throw FormatError("record is not an object");
            }
            for (const char* key : {"id", "title", "text", "publication"}) {
                if (!record.contains(key) || !record[key].is_string()) {
                    throw FormatError(std::string("missing string field \"") +
                                      key + "\"");
                }
            }
            if (!record.contains("satire") || !record["satire"].is_boolean()) {
                throw FormatError("missing boolean field \"satire\"");
            }
            a.id = record["id"].get<std::string>();
            a.title = tokenize(record["title"].get<std::string>());
            a.body = tokenize(record["text"].get<std::string>());
            a.publication = record["publication"].get<std::string>();
            a.satire = record["satire"].get<bool>();
        } catch (const json::exception& e) {
            throw FormatError(where + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (a.id.empty()) {
            throw FormatError(where + ": empty id");
        }
        if (a.publication.empty()) {
            throw FormatError(where + ": empty publication");
        }
        if (a.title.empty() && a.body.empty()) {
            throw FormatError(where + ": article '" + a.id + "' has no tokens");
        }
        if (!seen.insert(a.id).second) {
            throw FormatError(where + ": duplicate article id '" + a.id + "'");
        }
        articles.push_back(std::move(a));
    }
    return articles;
}

void save_corpus(std::span<const Article> articles,
                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write corpus file " + path.string());
    }
    for (const Article& a : articles) {
        json record = {{"id", a.id},
                       {"title", join(a.title)},
                       {"text", join(a.body)},
                       {"publication", a.publication},
                       {"satire", a.satire}};
        out << record.dump() << '\n';
    }
}

// ---------------------------------------------------------------- vocabulary

Vocabulary::Vocabulary() {
    append(std::string(kPadToken), 0);
    append(std::string(kUnkToken), 0);
}

void Vocabulary::append(std::string token, std::uint64_t count) {
    index_.emplace(token, tokens_.size());
    tokens_.push_back(std::move(token));
    counts_.push_back(count);
}

std::size_t Vocabulary::index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end() || it->second < 2) {
        return kUnk;
    }
    return it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_of(token) != kUnk;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write vocabulary file " + path.string());
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        out << tokens_[i] << '\t' << counts_[i] << '\n';
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open vocabulary file " + path.string());
    }
    Vocabulary vocab;
    vocab.tokens_.clear();
    vocab.counts_.clear();
    vocab.index_.clear();
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t min_seen = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError("vocabulary line " + std::to_string(line_no) +
                              ": expected token<TAB>count");
        }
        std::string token = line.substr(0, tab);
        std::uint64_t count = 0;
        try {
            count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw FormatError("vocabulary line " + std::to_string(line_no) +
                              ": bad count");
        }
        if (line_no == 1 && token != kPadToken) {
            throw FormatError("vocabulary line 1 must be <PAD>");
        }
        if (line_no == 2 && token != kUnkToken) {
            throw FormatError("vocabulary line 2 must be <UNK>");
        }
        if (line_no > 2) {
            min_seen = (line_no == 3) ? count : std::min(min_seen, count);
        }
        if (vocab.index_.count(token) != 0) {
            throw FormatError("vocabulary line " + std::to_string(line_no) +
                              ": duplicate token '" + token + "'");
        }
        vocab.append(std::move(token), count);
    }
    if (vocab.size() < 2) {
        throw FormatError("vocabulary file lacks reserved entries");
    }
    vocab.min_count_ = static_cast<std::size_t>(std::max<std::uint64_t>(min_seen, 1));
    return vocab;
}

std::string Vocabulary::digest() const {
    std::uint64_t h = fnv1a64("");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        h = fnv1a64(tokens_[i], h);
        h = fnv1a64("\t", h);
        h = fnv1a64(std::to_string(counts_[i]), h);
        h = fnv1a64("\n", h);
    }
    return hex64(h);
}

Vocabulary build_vocabulary(std::span<const Article> articles,
                            std::size_t min_count) {
    if (min_count < 1) {
        throw std::invalid_argument("build_vocabulary: min_count must be >= 1");
    }
    if (articles.empty()) {
        throw std::invalid_argument("build_vocabulary: empty article set");
    }
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const Article& a : articles) {
        for (const auto* part : {&a.title, &a.body}) {
            for (const std::string& t : *part) {
                ++counts[t];
            }
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [token, count] : counts) {
        if (count >= min_count && token != Vocabulary::kPadToken &&
            token != Vocabulary::kUnkToken) {
            kept.emplace_back(token, count);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (auto& [token, count] : kept) {
        vocab.append(std::move(token), count);
    }
    return vocab;
}

// ------------------------------------------------------------------ encoding

std::vector<std::string> publication_classes(std::span<const Article> articles) {
    std::set<std::string> names;
    for (const Article& a : articles) {
        names.insert(a.publication);
    }
    return {names.begin(), names.end()};
}

EncodedDocument encode(const Article& article, const Vocabulary& vocab,
                       std::size_t max_len,
                       std::span<const std::string> publications) {
    if (max_len < 1) {
        throw std::invalid_argument("encode: max_len must be >= 1");
    }
    const std::size_t total = article.title.size() + article.body.size();
    if (total == 0) {
        throw std::invalid_argument("encode: article '" + article.id +
                                    "' has no tokens");
    }
    const auto pub = std::lower_bound(publications.begin(), publications.end(),
                                      article.publication);
    if (pub == publications.end() || *pub != article.publication) {
        throw std::invalid_argument("encode: unknown publication '" +
                                    article.publication + "'");
    }
    EncodedDocument doc;
    doc.id = article.id;
    doc.length = std::min(total, max_len);
    doc.indices.reserve(doc.length);
    for (const auto* part : {&article.title, &article.body}) {
        for (const std::string& t : *part) {
            if (doc.indices.size() == doc.length) {
                break;
            }
            doc.indices.push_back(vocab.index_of(t));
        }
    }
    doc.publication = static_cast<std::size_t>(pub - publications.begin());
    doc.satire = article.satire ? 1 : 0;
    return doc;
}

std::vector<std::vector<std::size_t>> pad_batch(
    std::span<const EncodedDocument> docs, std::size_t max_len) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(docs.size());
    for (const EncodedDocument& d : docs) {
        if (d.length > max_len) {
            throw std::invalid_argument("pad_batch: document '" + d.id +
                                        "' longer than max_len");
        }
        std::vector<std::size_t> row(d.indices.begin(),
                                     d.indices.begin() + static_cast<std::ptrdiff_t>(d.length));
        row.resize(max_len, Vocabulary::kPad);
        out.push_back(std::move(row));
    }
    return out;
}

// --------------------------------------------------------------------- split

void SplitSpec::validate() const {
    if (!(train > 0.0) || !(dev > 0.0) || !(test > 0.0)) {
        throw std::invalid_argument("split fractions must be positive");
    }
    if (std::abs(train + dev + test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must sum to 1");
    }
}

std::tuple<std::size_t, std::size_t, std::size_t> split_counts(
    std::size_t n, const SplitSpec& spec) {
    spec.validate();
    const std::array<double, 3> fractions = {spec.train, spec.dev, spec.test};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * fractions[i];
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    // Largest remainder first; ties go to the earlier split.
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
        ++counts[order[k % 3]];
    }
    if (n > 0 && counts[0] == 0) {
        const std::size_t donor = counts[1] >= counts[2] ? 1 : 2;
        --counts[donor];
        ++counts[0];
    }
    return {counts[0], counts[1], counts[2]};
}

CorpusSplit split(std::span<const Article> articles, const SplitSpec& spec) {
    spec.validate();
    std::map<std::string, std::vector<std::size_t>> by_publication;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        by_publication[articles[i].publication].push_back(i);
    }
    // 0 = train, 1 = dev, 2 = test
    std::vector<int> assignment(articles.size(), 0);
    const std::uint64_t split_seed = derive_seed(spec.seed, "split");
    for (auto& [name, members] : by_publication) {
        Rng rng = Rng::stream(split_seed, name);
        std::vector<std::size_t> shuffled = members;
        rng.shuffle(shuffled);
        const auto [n_train, n_dev, n_test] = split_counts(shuffled.size(), spec);
        (void)n_test;
        for (std::size_t k = 0; k < shuffled.size(); ++k) {
            assignment[shuffled[k]] = k < n_train ? 0 : (k < n_train + n_dev ? 1 : 2);
        }
    }
    CorpusSplit out;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        auto& target = assignment[i] == 0 ? out.train
                       : assignment[i] == 1 ? out.dev
                                            : out.test;
        target.push_back(articles[i]);
    }
    return out;
}

// --------------------------------------------------------------------- stats

namespace {

struct StatsAccumulator {
    std::size_t articles = 0;
    std::size_t body_words = 0;
    std::size_t title_words = 0;
    std::size_t sentence_words = 0;
    std::size_t sentences = 0;

    void add(const Article& a) {
        ++articles;
        body_words += word_count(a.body);
        title_words += word_count(a.title);
        std::size_t current = 0;
        for (const std::string& t : a.body) {
            if (t == "." || t == "!" || t == "?") {
                if (current > 0) {
                    sentence_words += current;
                    ++sentences;
                }
                current = 0;
            } else if (!is_punctuation_token(t)) {
                ++current;
            }
        }
        if (current > 0) {
            sentence_words += current;
            ++sentences;
        }
    }

    void merge(const StatsAccumulator& o) {
        articles += o.articles;
        body_words += o.body_words;
        title_words += o.title_words;
        sentence_words += o.sentence_words;
        sentences += o.sentences;
    }

    StatsRow row(std::string group, std::string publication) const {
        auto ratio = [](std::size_t num, std::size_t den) {
            return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
        };
        return StatsRow{std::move(group), std::move(publication), articles,
                        ratio(body_words, articles),
                        ratio(sentence_words, sentences),
                        ratio(title_words, articles)};
    }
};

}  // namespace

std::vector<StatsRow> corpus_stats(std::span<const Article> articles) {
    std::map<std::string, StatsAccumulator> regular, satire;
    for (const Article& a : articles) {
        (a.satire ? satire : regular)[a.publication].add(a);
    }
    std::vector<StatsRow> rows;
    StatsAccumulator regular_total, satire_total;
    for (const auto& [name, acc] : regular) {
        rows.push_back(acc.row("regular", name));
        regular_total.merge(acc);
    }
    for (const auto& [name, acc] : satire) {
        rows.push_back(acc.row("satire", name));
        satire_total.merge(acc);
    }
    rows.push_back(regular_total.row("aggregate", "Regular"));
    rows.push_back(satire_total.row("aggregate", "Satire"));
    return rows;
}

std::string stats_csv(std::span<const StatsRow> rows) {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string q = "\"";
        for (char c : s) {
            q += c;
            if (c == '"') {
                q += '"';
            }
        }
        return q + "\"";
    };
    std::string out = "group,publication,articles,article_length,sentence_length,title_length\n";
    for (const StatsRow& r : rows) {
        out += r.group + "," + quote(r.publication) + "," + std::to_string(r.articles) +
               "," + fixed(r.article_length, 2) + "," + fixed(r.sentence_length, 2) +
               "," + fixed(r.title_length, 2) + "\n";
    }
    return out;
}

std::string with_thousands(double value, int decimals) {
    std::string s = fixed(value, decimals);
    const bool negative = !s.empty() && s.front() == '-';
    if (negative) {
        s.erase(0, 1);
    }
    const auto dot = s.find('.');
    std::string int_part = s.substr(0, dot);
    const std::string frac = dot == std::string::npos ? "" : s.substr(dot);
    std::string grouped;
    for (std::size_t i = 0; i < int_part.size(); ++i) {
        if (i > 0 && (int_part.size() - i) % 3 == 0) {
            grouped += ',';
        }
        grouped += int_part[i];
    }
    return (negative ? "-" : "") + grouped + frac;
}

std::string render_stats_table(std::span<const StatsRow> rows) {
    std::size_t name_width = 11;
    for (const StatsRow& r : rows) {
        name_width = std::max(name_width, r.publication.size());
    }
    auto pad_right = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    auto pad_left = [](const std::string& s, std::size_t w) {
        return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
    };
    std::string out = pad_right("", 10) + pad_right("", name_width) + pad_left("", 10) +
                      "  Average Length\n";
    out += pad_right("Group", 10) + pad_right("Publication", name_width) +
           pad_left("#Articles", 10) + pad_left("Article", 10) + pad_left("Sent.", 8) +
           pad_left("Title", 8) + "\n";
    std::string last_group;
    for (const StatsRow& r : rows) {
        if (r.group != last_group) {
            out += std::string(10 + name_width + 36, '-') + "\n";
            last_group = r.group;
        }
        const std::string group = r.group == "aggregate" ? "" : r.group;
        out += pad_right(group, 10) + pad_right(r.publication, name_width) +
               pad_left(with_thousands(static_cast<double>(r.articles), 0), 10) +
               pad_left(with_thousands(r.article_length, 2), 10) +
               pad_left(fixed(r.sentence_length, 2), 8) +
               pad_left(fixed(r.title_length, 2), 8) + "\n";
    }
    return out;
}

}  // namespace satadv
