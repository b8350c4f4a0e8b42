#include "satadv/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "satadv/attnreport.hpp"
#include "satadv/checkpoint.hpp"
#include "satadv/corpus.hpp"
#include "satadv/embeddings.hpp"
#include "satadv/metrics.hpp"
#include "satadv/synthgen.hpp"
#include "satadv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satadv {

namespace {

constexpr const char* kRunManifest = "run_manifest.json";

// ------------------------------------------------------------------ options

struct CommonOptions {
    std::uint64_t seed = 7;
    std::size_t threads = 1;
};

struct DataOptions {
    std::string corpus;
    std::size_t min_count = 2;
    std::size_t max_len = 500;
    double train = 0.8;
    double dev = 0.1;
    double test = 0.1;

    json to_json() const {
        return {{"corpus", corpus}, {"min_count", min_count}, {"max_len", max_len},
                {"split", {{"train", train}, {"dev", dev}, {"test", test}}}};
    }
};

struct EmbedOptions {
    std::string file;
    std::string init = "sgns";
    Index dim = 300;
    int sgns_epochs = 5;
    int window = 5;
    int negatives = 5;
    double sgns_lr = 0.025;
    double scale = 0.5;
    bool finetune = false;

    json to_json() const {
        json j = {{"dim", dim}, {"finetune", finetune}};
        if (!file.empty()) {
            j["file"] = file;
        } else if (init == "random") {
            j["init"] = "random";
            j["scale"] = scale;
        } else {
            j["init"] = "sgns";
            j["sgns"] = {{"epochs", sgns_epochs}, {"window", window},
                         {"negatives", negatives}, {"lr", sgns_lr}};
        }
        return j;
    }
};

struct ModelOptions {
    std::string mode = "adversarial";
    double lambda = 0.0;
    double lr = 1e-4;
    double decay = 1e-6;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    Index hidden = 300;
    Index attention = 600;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--seed", o.seed, "master seed for every random stream")
        ->capture_default_str();
    app->add_option("--threads", o.threads, "worker threads for per-document gradients")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_data(CLI::App* app, DataOptions& o) {
    app->add_option("--corpus", o.corpus, "corpus in JSON-lines format")->required();
    app->add_option("--min-count", o.min_count, "vocabulary frequency cutoff")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--max-len", o.max_len, "tokens kept per document")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--train-frac", o.train)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app->add_option("--dev-frac", o.dev)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    app->add_option("--test-frac", o.test)->check(CLI::Range(0.0, 1.0))->capture_default_str();
}

void add_embed(CLI::App* app, EmbedOptions& o) {
    app->add_option("--embeddings", o.file, "pretrained vectors (text format)");
    app->add_option("--embed-init", o.init, "initialisation without --embeddings")
        ->check(CLI::IsMember({"sgns", "random"}))
        ->capture_default_str();
    app->add_option("--embed-dim", o.dim)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--sgns-epochs", o.sgns_epochs)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--embed-scale", o.scale, "range of --embed-init random")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--finetune-embeddings", o.finetune, "train the embedding table with theta_f");
}

void add_model(CLI::App* app, ModelOptions& o, bool with_mode) {
    if (with_mode) {
        app->add_option("--mode", o.mode)
            ->check(CLI::IsMember({"adversarial", "baseline"}))
            ->capture_default_str();
        app->add_option("--lambda", o.lambda, "adversary weight")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    }
    app->add_option("--lr", o.lr)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--decay", o.decay)->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-epochs", o.max_epochs)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--patience", o.patience)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--attention", o.attention)->check(CLI::PositiveNumber)->capture_default_str();
}

// -------------------------------------------------------------------- files

fs::path resolve_input(const std::string& p) {
    const fs::path path(p);
    if (path.is_relative() && !fs::exists(path)) {
        if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir != '\0') {
            const fs::path alt = fs::path(dir) / path;
            if (fs::exists(alt)) {
                return alt;
            }
        }
    }
    return path;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !out.flush()) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::string digest_of(const fs::path& path) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file(path))));
    return buf;
}

// Files inside a checkpoint directory, in a fixed order.
std::vector<fs::path> checkpoint_files(const fs::path& dir) {
    return {dir / kCheckpointManifest, dir / kCheckpointBlob, dir / kCheckpointVocab};
}

void write_manifest(const fs::path& path, const std::string& subcommand, const json& config,
                    const std::vector<fs::path>& inputs, std::uint64_t seed) {
    json digests = json::object();
    for (const fs::path& p : inputs) {
        digests[p.generic_string()] = digest_of(p);
    }
    const json m = {{"tool", "satadv"},
                    {"version", kToolVersion},
                    {"subcommand", subcommand},
                    {"seed", seed},
                    {"config", config},
                    {"inputs", digests}};
    write_file(path, m.dump(2) + "\n");
}

std::string lambda_dir(double lambda) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "lambda_%g", lambda);
    return buf;
}

// --------------------------------------------------------------- pipelines

struct Prepared {
    std::vector<Article> articles;
    CorpusSplit split;
    std::vector<std::string> publications;
};

SplitSpec split_spec(const DataOptions& d, std::uint64_t seed) {
    SplitSpec s{d.train, d.dev, d.test, seed};
    s.validate();
    return s;
}

Prepared prepare(const DataOptions& d, std::uint64_t seed) {
    Prepared p;
    p.articles = load_corpus(resolve_input(d.corpus));
    p.split = split(p.articles, split_spec(d, seed));
    p.publications = publication_classes(p.articles);
    return p;
}

EmbeddingMatrix make_embeddings(const EmbedOptions& o, const Vocabulary& vocab,
                                const DataSplits& data, std::uint64_t seed) {
    if (!o.file.empty()) {
        return load_embeddings(resolve_input(o.file), vocab, o.dim);
    }
    if (o.init == "random") {
        return random_embeddings(vocab.size(), o.dim, seed, o.scale);
    }
    SgnsConfig s;
    s.dim = o.dim;
    s.window = o.window;
    s.negatives = o.negatives;
    s.epochs = o.sgns_epochs;
    s.lr = o.sgns_lr;
    s.seed = seed;
    return sgns_train(data.train, vocab, s);
}

TrainConfig train_config(const ModelOptions& m, const EmbedOptions& e, const DataOptions& d,
                         const CommonOptions& c) {
    TrainConfig t;
    t.mode = parse_train_mode(m.mode);
    t.lambda = m.lambda;
    t.lr = m.lr;
    t.decay = m.decay;
    t.batch_size = m.batch_size;
    t.max_len = d.max_len;
    t.max_epochs = m.max_epochs;
    t.patience = m.patience;
    t.seed = c.seed;
    t.finetune_embeddings = e.finetune;
    t.threads = c.threads;
    t.hidden = m.hidden;
    t.attention = m.attention;
    t.validate();
    return t;
}

json run_config(const TrainConfig& t, const EmbedOptions& e, const DataOptions& d) {
    json j = t.to_json();
    j.erase("threads");
    j["data"] = d.to_json();
    j["embeddings"] = e.to_json();
    return j;
}

void save_run(const fs::path& dir, const TrainResult& r, const Vocabulary& vocab,
              const TrainConfig& t, const json& config, const std::vector<std::string>& pubs) {
    save_checkpoint(dir, r.params, r.embeddings, vocab,
                    CheckpointMeta{model_tag(t), t.seed, pubs, config});
    write_file(dir / "train_log.jsonl", r.log.to_jsonl());
}

std::vector<fs::path> data_inputs(const DataOptions& d, const EmbedOptions* e) {
    std::vector<fs::path> in = {resolve_input(d.corpus)};
    if (e != nullptr && !e->file.empty()) {
        in.push_back(resolve_input(e->file));
    }
    return in;
}

// --------------------------------------------------------------- commands

int cmd_stats(const DataOptions& d, const std::string& out_path, std::ostream& out) {
    const fs::path corpus = resolve_input(d.corpus);
    const std::vector<Article> articles = load_corpus(corpus);
    const std::vector<StatsRow> rows = corpus_stats(articles);
    write_file(out_path, stats_csv(rows));
    write_manifest(out_path + ".manifest.json", "stats", {{"corpus", d.corpus}, {"out", out_path}},
                   {corpus}, 0);
    out << render_stats_table(rows);
    return 0;
}

int cmd_pretrain(const CommonOptions& c, const DataOptions& d, EmbedOptions e,
                 const std::string& out_dir, std::ostream& out) {
    const Prepared p = prepare(d, c.seed);
    const Vocabulary vocab = build_vocabulary(p.split.train, d.min_count);
    const DataSplits data = encode_splits(p.split, vocab, p.publications, d.max_len);
    e.file.clear();
    e.init = "sgns";
    const EmbeddingMatrix emb = make_embeddings(e, vocab, data, c.seed);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    save_embeddings(emb, vocab, dir / "embeddings.txt");
    vocab.save(dir / "vocab.tsv");
    json config = e.to_json();
    config.erase("finetune");
    config["data"] = d.to_json();
    write_manifest(dir / kRunManifest, "pretrain", config, data_inputs(d, nullptr), c.seed);
    out << "embeddings: " << vocab.size() << " x " << e.dim << " -> "
        << (dir / "embeddings.txt").generic_string() << "\n";
    return 0;
}

int cmd_train(const CommonOptions& c, const DataOptions& d, const EmbedOptions& e,
              const ModelOptions& m, const std::string& out_dir, std::ostream& out) {
    const TrainConfig t = train_config(m, e, d, c);
    const Prepared p = prepare(d, c.seed);
    const Vocabulary vocab = build_vocabulary(p.split.train, d.min_count);
    const DataSplits data = encode_splits(p.split, vocab, p.publications, d.max_len);
    const EmbeddingMatrix emb = make_embeddings(e, vocab, data, c.seed);
    const TrainResult r = train(data, emb, t);
    const json config = run_config(t, e, d);
    const fs::path dir(out_dir);
    save_run(dir, r, vocab, t, config, p.publications);
    write_manifest(dir / kRunManifest, "train", config, data_inputs(d, &e), c.seed);

    const EvalRecord& best = r.log.records[r.log.best];
    out << model_tag(t) << ": best dev satire F1 " << percent1(best.dev_satire.f1)
        << " at epoch " << best.epoch << " (" << r.log.records.size() << " evaluations)\n";
    if (r.log.best_probe) {
        out << "frozen probe: dev publication weighted F1 "
            << percent1(r.log.records[*r.log.best_probe].dev_publication.f1) << "\n";
    }
    return 0;
}

int cmd_sweep(const CommonOptions& c, const DataOptions& d, const EmbedOptions& e,
              ModelOptions m, const std::vector<double>& lambdas, const std::string& out_dir,
              std::ostream& out) {
    m.mode = "adversarial";
    const TrainConfig base = train_config(m, e, d, c);
    const Prepared p = prepare(d, c.seed);
    const Vocabulary vocab = build_vocabulary(p.split.train, d.min_count);
    const DataSplits data = encode_splits(p.split, vocab, p.publications, d.max_len);
    const EmbeddingMatrix emb = make_embeddings(e, vocab, data, c.seed);
    const SweepResult sweep = sweep_lambda(data, emb, base, lambdas);

    const fs::path dir(out_dir);
    json rows = json::array();
    for (const SweepRow& row : sweep.rows) {
        TrainConfig t = base;
        t.lambda = row.lambda;
        save_run(dir / lambda_dir(row.lambda), row.result, vocab, t, run_config(t, e, d),
                 p.publications);
        rows.push_back({{"lambda", row.lambda},
                        {"epoch", row.best.epoch},
                        {"dev_satire", to_json(row.best.dev_satire)},
                        {"dev_publication", to_json(row.best.dev_publication)},
                        {"dev_publication_modal_share", row.dev_publication_modal_share},
                        {"checkpoint", lambda_dir(row.lambda)}});
    }
    const json summary = {
        {"rows", rows},
        {"selected_lambda", sweep.rows[sweep.best].lambda},
        {"collapse",
         sweep.collapse.vacuous
             ? json{{"vacuous", true}}
             : json{{"vacuous", false},
                    {"lambda", sweep.collapse.lambda},
                    {"satire_f1_drop", sweep.collapse.satire_f1_drop},
                    {"modal_share", sweep.collapse.modal_share}}}};
    const std::string report = render_sweep_report(sweep);
    write_file(dir / "sweep.txt", report);
    write_file(dir / "sweep.json", summary.dump(2) + "\n");
    json config = run_config(base, e, d);
    config.erase("lambda");
    config.erase("mode");
    config["lambdas"] = lambdas;
    write_manifest(dir / kRunManifest, "sweep", config, data_inputs(d, &e), c.seed);
    out << report;
    return 0;
}

int cmd_eval(const CommonOptions& c, const DataOptions& d, const std::vector<std::string>& ckpts,
             bool majority, const std::string& which, const std::string& out_dir,
             std::ostream& out) {
    if (ckpts.empty() && !majority) {
        throw CLI::ValidationError("eval", "give --checkpoint and/or --majority");
    }
    std::vector<Checkpoint> loaded;
    for (const std::string& path : ckpts) {
        loaded.push_back(load_checkpoint(resolve_input(path)));
    }
    // The split must be the one the checkpoints were trained on.
    DataOptions data_opts = d;
    std::uint64_t seed = c.seed;
    if (!loaded.empty()) {
        const json& cfg = loaded.front().meta.config;
        seed = loaded.front().meta.seed;
        data_opts.train = cfg.at("data").at("split").at("train").get<double>();
        data_opts.dev = cfg.at("data").at("split").at("dev").get<double>();
        data_opts.test = cfg.at("data").at("split").at("test").get<double>();
        data_opts.max_len = cfg.at("data").at("max_len").get<std::size_t>();
        for (const Checkpoint& k : loaded) {
            if (k.meta.seed != seed || k.meta.config.at("data").at("split") != cfg.at("data").at("split")) {
                throw std::invalid_argument("checkpoints were trained on different splits");
            }
        }
    }
    const Prepared p = prepare(data_opts, seed);
    const std::vector<Article>& eval_articles = which == "dev" ? p.split.dev : p.split.test;
    if (eval_articles.empty()) {
        throw std::invalid_argument("the " + which + " split is empty");
    }

    std::vector<std::pair<std::string, MetricsReport>> reports;
    if (majority) {
        const Vocabulary vocab = build_vocabulary(p.split.train, data_opts.min_count);
        const DataSplits data = encode_splits(p.split, vocab, p.publications, data_opts.max_len);
        const MajorityPredictor mp = majority_baseline(data.train);
        reports.emplace_back("majority", evaluate_majority(mp, which == "dev" ? data.dev : data.test,
                                                           p.publications));
    }
    for (const Checkpoint& k : loaded) {
        std::vector<EncodedDocument> docs;
        for (const Article& a : eval_articles) {
            docs.push_back(encode(a, k.vocab, data_opts.max_len, k.meta.publications));
        }
        reports.emplace_back(k.meta.tag, evaluate(k.params, k.embeddings, docs, k.meta.publications));
    }

    json models = json::array();
    for (const auto& [name, report] : reports) {
        models.push_back({{"name", name}, {"metrics", to_json(report)}});
    }
    const fs::path dir(out_dir);
    const std::string table = render_results_table(reports);
    write_file(dir / "metrics.json", json{{"split", which}, {"models", models}}.dump(2) + "\n");
    write_file(dir / "results.txt", table);

    std::vector<fs::path> inputs = data_inputs(data_opts, nullptr);
    for (const std::string& path : ckpts) {
        for (const fs::path& f : checkpoint_files(resolve_input(path))) {
            inputs.push_back(f);
        }
    }
    json config = {{"data", data_opts.to_json()}, {"split", which}, {"checkpoints", ckpts},
                   {"majority", majority}};
    write_manifest(dir / kRunManifest, "eval", config, inputs, seed);
    out << table;
    return 0;
}

int cmd_attend(const DataOptions& d, const std::vector<std::string>& ckpts,
               const std::vector<std::string>& ids, const std::string& format,
               const std::string& out_dir, std::ostream& out) {
    const fs::path corpus = resolve_input(d.corpus);
    const std::vector<Article> articles = load_corpus(corpus);
    std::map<std::string, const Article*> by_id;
    for (const Article& a : articles) {
        by_id.emplace(a.id, &a);
    }
    std::vector<Checkpoint> loaded;
    for (const std::string& path : ckpts) {
        loaded.push_back(load_checkpoint(resolve_input(path)));
    }
    std::vector<AttentionMap> maps;
    for (const std::string& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw std::invalid_argument("no article with id '" + id + "'");
        }
        for (const Checkpoint& k : loaded) {
            const std::size_t max_len = k.meta.config.at("data").at("max_len").get<std::size_t>();
            const EncodedDocument doc = encode(*it->second, k.vocab, max_len, k.meta.publications);
            maps.push_back(extract_attention(k.params, *it->second, doc, k.embeddings, k.meta.tag));
        }
    }
    const HeatmapFormat f = parse_heatmap_format(format);
    json exported = json::array();
    for (const AttentionMap& m : maps) {
        exported.push_back(to_json(m));
    }
    const fs::path dir(out_dir);
    const fs::path heatmap = dir / (f == HeatmapFormat::html ? "heatmap.html" : "heatmap.ans");
    write_file(dir / "attention.json", exported.dump(2) + "\n");
    write_file(heatmap, render_heatmap(maps, f));

    std::vector<fs::path> inputs = {corpus};
    for (const std::string& path : ckpts) {
        for (const fs::path& p : checkpoint_files(resolve_input(path))) {
            inputs.push_back(p);
        }
    }
    write_manifest(dir / kRunManifest, "attend",
                   {{"corpus", d.corpus}, {"checkpoints", ckpts}, {"ids", ids}, {"format", format}},
                   inputs, 0);
    out << maps.size() << " attention maps -> " << heatmap.generic_string() << "\n";
    return 0;
}

int cmd_synth(const CommonOptions& c, const std::string& fixture, const std::string& spec_path,
              const std::string& out_path, std::ostream& out) {
    SynthSpec spec;
    std::vector<fs::path> inputs;
    if (!spec_path.empty()) {
        const fs::path p = resolve_input(spec_path);
        spec = spec_from_manifest(json::parse(read_file(p)));
        inputs.push_back(p);
    } else if (fixture == "A") {
        spec = fixture_a(c.seed);
    } else {
        throw CLI::ValidationError("--fixture", "unknown fixture '" + fixture + "'");
    }
    const std::vector<Article> articles = generate(spec);
    save_corpus(articles, out_path);
    const json cues = describe(spec);
    write_file(out_path + ".cues.json", cues.dump(2) + "\n");
    json config = {{"out", out_path}, {"spec", cues}};
    if (spec_path.empty()) {
        config["fixture"] = fixture;
    }
    write_manifest(out_path + ".manifest.json", "synth", config, inputs, spec.seed);
    out << articles.size() << " articles -> " << out_path << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Satire detection with an adversarial publication identifier"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    CommonOptions common;
    DataOptions data;
    EmbedOptions embed;
    ModelOptions model;
    std::string out_path;
    std::string out_dir;

    CLI::App* stats = app.add_subcommand("stats", "corpus statistics table and CSV");
    add_data(stats, data);
    stats->add_option("--out", out_path, "CSV output")->required();

    CLI::App* pretrain = app.add_subcommand("pretrain", "skip-gram embeddings on the train split");
    add_common(pretrain, common);
    add_data(pretrain, data);
    add_embed(pretrain, embed);
    pretrain->add_option("--window", embed.window)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--negatives", embed.negatives)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--sgns-lr", embed.sgns_lr)->check(CLI::PositiveNumber)->capture_default_str();
    pretrain->add_option("--out-dir", out_dir)->required();

    CLI::App* train_cmd = app.add_subcommand("train", "train a baseline or adversarial model");
    add_common(train_cmd, common);
    add_data(train_cmd, data);
    add_embed(train_cmd, embed);
    add_model(train_cmd, model, true);
    train_cmd->add_option("--out-dir", out_dir)->required();

    std::vector<double> lambdas = {0.2, 0.3, 0.5, 0.7};
    CLI::App* sweep = app.add_subcommand("sweep", "one adversarial model per lambda, dev table");
    add_common(sweep, common);
    add_data(sweep, data);
    add_embed(sweep, embed);
    add_model(sweep, model, false);
    sweep->add_option("--lambdas", lambdas, "comma-separated lambda values")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sweep->add_option("--out-dir", out_dir)->required();

    std::vector<std::string> checkpoints;
    bool majority = false;
    std::string which = "test";
    CLI::App* eval_cmd = app.add_subcommand("eval", "metrics report for checkpoints on a split");
    add_common(eval_cmd, common);
    add_data(eval_cmd, data);
    eval_cmd->add_option("--checkpoint,--checkpoints", checkpoints, "checkpoint directories")
        ->delimiter(',');
    eval_cmd->add_flag("--majority", majority, "include the majority-class baseline");
    eval_cmd->add_option("--split", which)->check(CLI::IsMember({"dev", "test"}))->capture_default_str();
    eval_cmd->add_option("--out-dir", out_dir)->required();

    std::vector<std::string> ids;
    std::string format = "html";
    CLI::App* attend = app.add_subcommand("attend", "attention heatmaps for chosen documents");
    add_data(attend, data);
    attend->add_option("--checkpoints,--checkpoint", checkpoints)->delimiter(',')->required();
    attend->add_option("--ids", ids, "article ids")->delimiter(',')->required();
    attend->add_option("--format", format)->check(CLI::IsMember({"html", "ansi"}))->capture_default_str();
    attend->add_option("--out-dir", out_dir)->required();

    std::string fixture = "A";
    std::string spec_path;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted cues");
    add_common(synth, common);
    synth->add_option("--fixture", fixture)->capture_default_str();
    synth->add_option("--spec", spec_path, "cue manifest to regenerate from");
    synth->add_option("--out", out_path, "corpus output (JSON lines)")->required();

    std::vector<const char*> argv;
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (stats->parsed()) {
            return cmd_stats(data, out_path, out);
        }
        if (pretrain->parsed()) {
            return cmd_pretrain(common, data, embed, out_dir, out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(common, data, embed, model, out_dir, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(common, data, embed, model, lambdas, out_dir, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(common, data, checkpoints, majority, which, out_dir, out);
        }
        if (attend->parsed()) {
            return cmd_attend(data, checkpoints, ids, format, out_dir, out);
        }
        if (synth->parsed()) {
            return cmd_synth(common, fixture, spec_path, out_path, out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace satadv
