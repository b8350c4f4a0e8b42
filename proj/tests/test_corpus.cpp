#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "satadv/corpus.hpp"
#include "satadv/rng.hpp"

using namespace satadv;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "satadv_test_corpus";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

Article article(std::string id, std::string pub, bool satire, Tokens body, Tokens title = {}) {
    return Article{std::move(id), std::move(title), std::move(body), std::move(pub), satire};
}

std::vector<Article> many(std::map<std::string, std::size_t> per_pub) {
    std::vector<Article> out;
    for (const auto& [pub, n] : per_pub) {
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(article(pub + "-" + std::to_string(i), pub, pub[0] == 's', {"x"}));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("load_corpus reads records in file order") {
    const auto p = temp_file("three.jsonl",
                             R"({"id":"a","title":"Erfurt (dpo) -","text":"Recht und Ordnung.","publication":"Der Postillon","satire":true}
{"id":"b","title":"","text":"Eins zwei","publication":"Spiegel","satire":false}

{"id":"c","title":"Drei","text":"","publication":"Spiegel","satire":false}
)");
    const auto arts = load_corpus(p);
    REQUIRE(arts.size() == 3);
    CHECK(arts[0].id == "a");
    CHECK(arts[0].title == Tokens{"Erfurt", "(", "dpo", ")", "-"});
    CHECK(arts[0].body == Tokens{"Recht", "und", "Ordnung", "."});
    CHECK(arts[0].satire);
    CHECK(arts[1].title.empty());
    CHECK(arts[2].body.empty());
    CHECK(arts[2].publication == "Spiegel");
}

TEST_CASE("load_corpus errors name the line") {
    CHECK(load_corpus(temp_file("empty.jsonl", "")).empty());

    const auto missing = temp_file("missing.jsonl",
                                   R"({"id":"a","title":"t","text":"x","publication":"p","satire":false}
{"id":"b","title":"t","text":"x","satire":false}
)");
    try {
        load_corpus(missing);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    const auto dup = temp_file("dup.jsonl",
                               R"({"id":"a","title":"t","text":"x","publication":"p","satire":false}
{"id":"a","title":"t","text":"y","publication":"p","satire":false}
)");
    try {
        load_corpus(dup);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }

    CHECK_THROWS_AS(load_corpus(temp_file("bad.jsonl", "{not json}\n")), FormatError);
    CHECK_THROWS_AS(load_corpus(temp_file("tokens.jsonl",
                                          R"({"id":"a","title":"","text":"  ","publication":"p","satire":false})")),
                    FormatError);
    CHECK_THROWS_AS(load_corpus(temp_file("label.jsonl",
                                          R"({"id":"a","title":"","text":"x","publication":"p","satire":"yes"})")),
                    FormatError);
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), FormatError);
}

TEST_CASE("save_corpus round-trips") {
    std::vector<Article> arts = {article("x1", "P", true, {"Hallo", "Welt", "."}, {"Titel"}),
                                 article("x2", "Q", false, {"\"quoted\"", "ü"})};
    const fs::path p = fs::temp_directory_path() / "satadv_test_corpus" / "rt.jsonl";
    save_corpus(arts, p);
    const auto back = load_corpus(p);
    REQUIRE(back.size() == 2);
    CHECK(back[0].body == arts[0].body);
    CHECK(back[0].title == arts[0].title);
    CHECK(back[1].body == Tokens{"\"", "quoted", "\"", "ü"});
}

TEST_CASE("tokenize fixture list") {
    // Hand-tokenized before the tokenizer was written.
    const std::vector<std::pair<std::string, Tokens>> cases = {
        {"", {}},
        {"   ", {}},
        {"Erfurt (dpo) -", {"Erfurt", "(", "dpo", ")", "-"}},
        {"Recht und Ordnung.", {"Recht", "und", "Ordnung", "."}},
        {"NPD-Funktionäre sagen: \"Nein!\"", {"NPD-Funktionäre", "sagen", ":", "\"", "Nein", "!", "\""}},
        {"„Wir schaffen das“", {"„", "Wir", "schaffen", "das", "“"}},
        {"Ende...", {"Ende", ".", ".", "."}},
        {"3,5 Prozent", {"3,5", "Prozent"}},
        {"«Bonjour»\tà\nlundi", {"«", "Bonjour", "»", "à", "lundi"}},
    };
    for (const auto& [text, expected] : cases) {
        CAPTURE(text);
        CHECK(tokenize(text) == expected);
    }
}

TEST_CASE("tokenize never produces reserved tokens and is deterministic") {
    const std::string text = "<PAD> <UNK> text";
    const Tokens t = tokenize(text);
    for (const auto& tok : t) {
        CHECK(tok != Vocabulary::kPadToken);
        CHECK(tok != Vocabulary::kUnkToken);
    }
    CHECK(tokenize(text) == t);
}

TEST_CASE("build_vocabulary ordering and threshold") {
    const std::vector<Article> one = {article("1", "p", false, {"a", "a", "b"})};
    const Vocabulary v1 = build_vocabulary(one, 1);
    REQUIRE(v1.size() == 4);
    CHECK(v1.token(0) == "<PAD>");
    CHECK(v1.token(1) == "<UNK>");
    CHECK(v1.index_of("a") == 2);
    CHECK(v1.index_of("b") == 3);

    const Vocabulary v2 = build_vocabulary(one, 2);
    CHECK(v2.size() == 3);
    CHECK(v2.index_of("b") == Vocabulary::kUnk);
    CHECK_FALSE(v2.contains("b"));

    const Vocabulary tie = build_vocabulary(std::vector<Article>{article("1", "p", false, {"b", "a"})}, 1);
    CHECK(tie.index_of("a") == 2);
    CHECK(tie.index_of("b") == 3);

    CHECK_THROWS_AS(build_vocabulary(one, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_vocabulary(std::vector<Article>{}, 1), std::invalid_argument);
}

TEST_CASE("vocabulary invariants and file round-trip") {
    std::vector<Article> arts;
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Tokens body;
        for (int t = 0; t < 20; ++t) {
            body.push_back("t" + std::to_string(rng.below(40)));
        }
        arts.push_back(article(std::to_string(i), "p", false, body, {"Title"}));
    }
    const Vocabulary v = build_vocabulary(arts, 3);
    // Reserved entries are never looked up by string, so a literal "<PAD>"
    // in a document cannot become padding.
    CHECK(v.index_of("<PAD>") == Vocabulary::kUnk);
    for (std::size_t i = 2; i < v.size(); ++i) {
        CHECK(v.index_of(v.token(i)) == i);
        CHECK(v.count(i) >= 3);
        if (i >= 3) {
            CHECK(v.count(i) <= v.count(i - 1));
        }
    }
    const fs::path p = fs::temp_directory_path() / "satadv_test_corpus" / "vocab.tsv";
    v.save(p);
    const Vocabulary back = Vocabulary::load(p);
    CHECK(back.tokens() == v.tokens());
    CHECK(back.digest() == v.digest());
    CHECK_THROWS_AS(Vocabulary::load(temp_file("badvocab.tsv", "a\t1\n")), FormatError);
}

TEST_CASE("encode concatenates, maps OOV and truncates") {
    const std::vector<Article> arts = {article("1", "p", true, {"a", "b", "c"}, {"T"})};
    const Vocabulary v = build_vocabulary(arts, 1);
    const std::vector<std::string> pubs = {"o", "p"};

    const EncodedDocument d = encode(arts[0], v, 500, pubs);
    CHECK(d.length == 4);
    CHECK(d.indices.size() == 4);
    CHECK(d.indices[0] == v.index_of("T"));
    CHECK(d.publication == 1);
    CHECK(d.satire == 1);

    const Article unknown = article("2", "o", false, {"a", "zzz"});
    const EncodedDocument u = encode(unknown, v, 500, pubs);
    CHECK(u.indices[1] == Vocabulary::kUnk);
    CHECK(u.satire == 0);

    Tokens long_body(600, "a");
    const EncodedDocument t = encode(article("3", "p", false, long_body), v, 500, pubs);
    CHECK(t.length == 500);
    CHECK(t.indices.size() == 500);
    for (std::size_t idx : t.indices) {
        CHECK(idx != Vocabulary::kPad);
        CHECK(idx < v.size());
    }

    CHECK_THROWS_AS(encode(article("4", "p", false, {}), v, 500, pubs), std::invalid_argument);
    CHECK_THROWS_AS(encode(arts[0], v, 0, pubs), std::invalid_argument);
    CHECK_THROWS_AS(encode(article("5", "nope", false, {"a"}), v, 500, pubs),
                    std::invalid_argument);

    const auto padded = pad_batch(std::vector<EncodedDocument>{d, u}, 6);
    CHECK(padded[0] == std::vector<std::size_t>{d.indices[0], d.indices[1], d.indices[2],
                                                d.indices[3], 0, 0});
    CHECK(padded[1].size() == 6);
}

TEST_CASE("publication classes are sorted names") {
    const auto arts = many({{"zeit", 1}, {"spiegel", 2}, {"postillon", 1}});
    CHECK(publication_classes(arts) == std::vector<std::string>{"postillon", "spiegel", "zeit"});
}

TEST_CASE("split_counts uses largest remainder") {
    const SplitSpec s{0.8, 0.1, 0.1, 0};
    CHECK(split_counts(10, s) == std::make_tuple(8u, 1u, 1u));
    CHECK(split_counts(0, s) == std::make_tuple(0u, 0u, 0u));
    CHECK(split_counts(1, s) == std::make_tuple(1u, 0u, 0u));
    CHECK(split_counts(2, s) == std::make_tuple(2u, 0u, 0u));
    CHECK(split_counts(15, s) == std::make_tuple(12u, 2u, 1u));
    // Train is never left empty.
    const SplitSpec tiny{0.1, 0.45, 0.45, 0};
    const auto [tr, dv, te] = split_counts(2, tiny);
    CHECK(tr == 1);
    CHECK(tr + dv + te == 2);

    CHECK_THROWS_AS(split_counts(10, SplitSpec{0.8, 0.1, 0.2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(split_counts(10, SplitSpec{1.0, 0.0, 0.0, 0}), std::invalid_argument);
}

TEST_CASE("split examples") {
    const auto ten = many({{"p", 10}});
    const CorpusSplit s = split(ten, SplitSpec{0.8, 0.1, 0.1, 3});
    CHECK(s.train.size() == 8);
    CHECK(s.dev.size() == 1);
    CHECK(s.test.size() == 1);

    const CorpusSplit again = split(ten, SplitSpec{0.8, 0.1, 0.1, 3});
    CHECK(again.dev[0].id == s.dev[0].id);
    CHECK(again.test[0].id == s.test[0].id);

    // Brute-force per-publication counts.
    const auto two = many({{"a", 10}, {"s", 10}});
    const CorpusSplit t = split(two, SplitSpec{0.8, 0.1, 0.1, 9});
    for (const auto* part : {&t.train, &t.dev, &t.test}) {
        std::map<std::string, int> counts;
        for (const auto& art : *part) {
            ++counts[art.publication];
        }
        const int expected = part == &t.train ? 8 : 1;
        CHECK(counts["a"] == expected);
        CHECK(counts["s"] == expected);
    }
}

TEST_CASE("split partition property over random corpora") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, std::size_t> sizes;
        const std::size_t pubs = 1 + rng.below(6);
        for (std::size_t p = 0; p < pubs; ++p) {
            sizes["pub" + std::to_string(p)] = 1 + rng.below(60);
        }
        const auto arts = many(sizes);
        const double dev = 0.05 + 0.2 * rng.uniform();
        const double test = 0.05 + 0.2 * rng.uniform();
        const SplitSpec spec{1.0 - dev - test, dev, test, rng.next_u64()};
        const CorpusSplit s = split(arts, spec);
        REQUIRE(s.train.size() + s.dev.size() + s.test.size() == arts.size());
        std::set<std::string> ids;
        for (const auto* part : {&s.train, &s.dev, &s.test}) {
            for (const auto& a : *part) {
                REQUIRE(ids.insert(a.id).second);
            }
        }
        for (const auto& [pub, n] : sizes) {
            std::size_t ntr = 0, ndv = 0, nte = 0;
            for (const auto& a : s.train) ntr += a.publication == pub;
            for (const auto& a : s.dev) ndv += a.publication == pub;
            for (const auto& a : s.test) nte += a.publication == pub;
            CHECK(ntr >= 1);
            if (n >= 10) {
                CHECK(std::abs(static_cast<double>(ndv) - dev * n) < 1.0);
                CHECK(std::abs(static_cast<double>(nte) - test * n) < 1.0);
            }
        }
    }
}

TEST_CASE("corpus_stats rows") {
    const std::vector<Article> arts = {
        article("1", "Der Postillon", true,
                {"Eins", "zwei", "drei", ".", "Vier", "fünf", "sechs", "sieben", "acht", "neun", "zehn", "!"},
                {"Ein", "Titel", ":"}),
        article("2", "Spiegel", false, {"a", "b"}, {"t"}),
        article("3", "Spiegel", false, {"a", "b", "c", "d"}, {"t", "u", "v"}),
        article("4", "Zeit", false, {"x"}, {}),
    };
    const auto rows = corpus_stats(arts);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].publication == "Spiegel");
    CHECK(rows[0].group == "regular");
    CHECK(rows[0].articles == 2);
    CHECK(rows[0].article_length == doctest::Approx(3.0));
    CHECK(rows[0].title_length == doctest::Approx(2.0));
    CHECK(rows[1].publication == "Zeit");
    CHECK(rows[2].publication == "Der Postillon");
    CHECK(rows[2].group == "satire");
    CHECK(rows[2].article_length == doctest::Approx(10.0));
    CHECK(rows[2].sentence_length == doctest::Approx(5.0));
    CHECK(rows[2].title_length == doctest::Approx(2.0));
    CHECK(rows[3].publication == "Regular");
    CHECK(rows[3].articles == rows[0].articles + rows[1].articles);
    CHECK(rows[3].article_length == doctest::Approx(7.0 / 3.0));
    CHECK(rows[4].publication == "Satire");
    CHECK(rows[4].articles == 1);

    const std::string csv = stats_csv(rows);
    CHECK(csv.rfind("group,publication,articles,article_length,sentence_length,title_length\n", 0) == 0);
    CHECK(csv.find("satire,Der Postillon,1,10.00,5.00,2.00\n") != std::string::npos);
}

TEST_CASE("stats table formats like the published corpus table") {
    CHECK(with_thousands(5065, 0) == "5,065");
    CHECK(with_thousands(225.36, 2) == "225.36");
    CHECK(with_thousands(1234567.891, 2) == "1,234,567.89");
    CHECK(with_thousands(-1234.5, 1) == "-1,234.5");

    std::vector<StatsRow> rows = {{"satire", "Der Postillon", 5065, 225.36, 14.0, 8.0}};
    const std::string table = render_stats_table(rows);
    CHECK(table.find("Der Postillon") != std::string::npos);
    CHECK(table.find("5,065") != std::string::npos);
    CHECK(table.find("225.36") != std::string::npos);
}

TEST_CASE("punctuation tokens") {
    CHECK(is_punctuation_token("."));
    CHECK(is_punctuation_token("„"));
    CHECK(is_punctuation_token("—"));
    CHECK_FALSE(is_punctuation_token("a"));
    CHECK_FALSE(is_punctuation_token("3,5"));
    CHECK_FALSE(is_punctuation_token(""));
}
