#include "satadv/attnreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace satadv {

namespace {

std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

double max_weight(const AttentionMap& map) {
    double top = 0.0;
    for (double w : map.weights) {
        top = std::max(top, w);
    }
    return top;
}

double relative(double w, double top) {
    return top > 0.0 ? w / top : 0.0;
}

void check_map(const AttentionMap& map) {
    if (map.tokens.size() != map.weights.size()) {
        throw std::invalid_argument("attention map '" + map.id + "': " +
                                    std::to_string(map.tokens.size()) + " tokens but " +
                                    std::to_string(map.weights.size()) + " weights");
    }
}

AttentionMap make_map(const ModelParams& params, const EncodedDocument& doc,
                      const EmbeddingMatrix& e, const std::string& model) {
    const Features f = extract_features(params.extractor, doc, e);
    AttentionMap map;
    map.id = doc.id;
    map.model = model;
    map.weights.assign(f.a.data(), f.a.data() + f.a.size());
    return map;
}

const char* kHtmlHead =
    "<!DOCTYPE html>\n"
    "<html>\n<head>\n<meta charset=\"utf-8\">\n<title>attention weights</title>\n"
    "<style>\n"
    "body { font-family: sans-serif; line-height: 1.9; }\n"
    ".map { margin: 1em 0; }\n"
    ".label { font-weight: bold; }\n"
    ".tok { padding: 1px 3px; border-radius: 2px; }\n"
    "</style>\n</head>\n<body>\n";

std::string render_html(std::span<const AttentionMap> maps) {
    std::string out = kHtmlHead;
    char buf[96];
    for (const AttentionMap& map : maps) {
        const double top = max_weight(map);
        out += "<div class=\"map\">\n<div class=\"label\">" + html_escape(map.id) + " (" +
               html_escape(map.model) + ")</div>\n<div>";
        for (std::size_t i = 0; i < map.tokens.size(); ++i) {
            std::snprintf(buf, sizeof(buf),
                          "<span class=\"tok\" style=\"background: rgba(220, 40, 40, %.3f)\" "
                          "title=\"%.2f%%\">",
                          relative(map.weights[i], top), 100.0 * map.weights[i]);
            out += (i ? " " : "") + std::string(buf) + html_escape(map.tokens[i]) + "</span>";
        }
        out += "</div>\n</div>\n";
    }
    out += "</body>\n</html>\n";
    return out;
}

// xterm-256 cube entry with full red and equal green/blue: step 0 is pure red,
// step 5 is white.
int ansi_color(double rel) {
    const int k = 5 - static_cast<int>(std::lround(5.0 * rel));
    return 16 + 36 * 5 + 6 * k + k;
}

std::string render_ansi(std::span<const AttentionMap> maps) {
    std::string out;
    for (const AttentionMap& map : maps) {
        const double top = max_weight(map);
        out += map.id + " (" + map.model + ")\n";
        for (std::size_t i = 0; i < map.tokens.size(); ++i) {
            out += (i ? " " : "") + std::string("\x1b[38;5;16;48;5;") +
                   std::to_string(ansi_color(relative(map.weights[i], top))) + "m" +
                   map.tokens[i] + "\x1b[0m";
        }
        out += "\n\n";
    }
    return out;
}

}  // namespace

AttentionMap extract_attention(const ModelParams& params, const EncodedDocument& doc,
                               const EmbeddingMatrix& e, const Vocabulary& vocab,
                               const std::string& model) {
    AttentionMap map = make_map(params, doc, e, model);
    for (std::size_t t = 0; t < doc.length; ++t) {
        map.tokens.push_back(vocab.token(doc.indices[t]));
    }
    return map;
}

AttentionMap extract_attention(const ModelParams& params, const Article& article,
                               const EncodedDocument& doc, const EmbeddingMatrix& e,
                               const std::string& model) {
    if (article.id != doc.id) {
        throw std::invalid_argument("article '" + article.id + "' does not match document '" +
                                    doc.id + "'");
    }
    AttentionMap map = make_map(params, doc, e, model);
    for (const Tokens* part : {&article.title, &article.body}) {
        for (const std::string& tok : *part) {
            if (map.tokens.size() == doc.length) {
                break;
            }
            map.tokens.push_back(tok);
        }
    }
    check_map(map);
    return map;
}

HeatmapFormat parse_heatmap_format(const std::string& s) {
    if (s == "html") {
        return HeatmapFormat::html;
    }
    if (s == "ansi") {
        return HeatmapFormat::ansi;
    }
    throw std::invalid_argument("unknown heatmap format '" + s + "' (expected html or ansi)");
}

std::string render_heatmap(std::span<const AttentionMap> maps, HeatmapFormat format) {
    for (const AttentionMap& map : maps) {
        check_map(map);
    }
    return format == HeatmapFormat::html ? render_html(maps) : render_ansi(maps);
}

double attention_mass_on(const std::set<std::string>& tokens, const AttentionMap& map) {
    check_map(map);
    double mass = 0.0;
    for (std::size_t i = 0; i < map.tokens.size(); ++i) {
        if (tokens.contains(map.tokens[i])) {
            mass += map.weights[i];
        }
    }
    return mass;
}

nlohmann::json to_json(const AttentionMap& map) {
    return {{"id", map.id}, {"model", map.model}, {"tokens", map.tokens}, {"weights", map.weights}};
}

AttentionMap attention_map_from_json(const nlohmann::json& j) {
    AttentionMap map{j.at("id").get<std::string>(), j.at("model").get<std::string>(),
                     j.at("tokens").get<Tokens>(), j.at("weights").get<std::vector<double>>()};
    check_map(map);
    return map;
}

}  // namespace satadv
