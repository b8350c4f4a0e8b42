#include "satadv/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace satadv {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

ConfusionCounts::ConfusionCounts(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
    if (classes_.size() < 2) {
        throw std::invalid_argument("ConfusionCounts: need at least 2 classes");
    }
}

ConfusionCounts ConfusionCounts::from_predictions(std::vector<std::string> classes,
                                                  std::span<const std::size_t> truth,
                                                  std::span<const std::size_t> predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("ConfusionCounts: truth and predictions differ in length");
    }
    ConfusionCounts c(std::move(classes));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        c.add(truth[i], predicted[i]);
    }
    return c;
}

void ConfusionCounts::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
    if (truth >= size() || predicted >= size()) {
        throw std::out_of_range("ConfusionCounts: class index out of range");
    }
    counts_[truth * size() + predicted] += n;
}

std::uint64_t ConfusionCounts::at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * size() + predicted);
}

std::uint64_t ConfusionCounts::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts_) {
        t += c;
    }
    return t;
}

std::uint64_t ConfusionCounts::support(std::size_t cls) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < size(); ++j) {
        s += at(cls, j);
    }
    return s;
}

Prf class_prf(const ConfusionCounts& conf, std::size_t cls) {
    const std::uint64_t tp = conf.at(cls, cls);
    std::uint64_t predicted = 0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        predicted += conf.at(i, cls);
    }
    const double p = ratio(tp, predicted);
    const double r = ratio(tp, conf.support(cls));
    return Prf{p, r, harmonic(p, r)};
}

Prf satire_prf(const ConfusionCounts& conf) {
    if (conf.size() != 2) {
        throw std::invalid_argument("satire_prf: expected a 2x2 confusion matrix");
    }
    return class_prf(conf, 1);
}

Prf weighted_macro_prf(const ConfusionCounts& conf) {
    const std::uint64_t total = conf.total();
    Prf out;
    if (total == 0) {
        return out;
    }
    for (std::size_t k = 0; k < conf.size(); ++k) {
        const double w = ratio(conf.support(k), total);
        const Prf c = class_prf(conf, k);
        out.precision += w * c.precision;
        out.recall += w * c.recall;
        out.f1 += w * c.f1;
    }
    return out;
}

PredictionHistogram prediction_histogram(std::span<const std::size_t> predictions,
                                         std::size_t classes) {
    if (predictions.empty()) {
        throw std::invalid_argument("prediction_histogram: no predictions");
    }
    std::vector<std::uint64_t> counts(classes, 0);
    for (std::size_t p : predictions) {
        if (p >= classes) {
            throw std::out_of_range("prediction_histogram: class index out of range");
        }
        ++counts[p];
    }
    PredictionHistogram h;
    h.fractions.reserve(classes);
    for (std::uint64_t c : counts) {
        h.fractions.push_back(ratio(c, predictions.size()));
    }
    h.modal_class = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    h.modal_share = h.fractions[h.modal_class];
    return h;
}

MetricsReport make_report(const ConfusionCounts& satire, const ConfusionCounts& publication,
                          std::span<const std::size_t> publication_predictions) {
    MetricsReport r;
    r.satire = satire_prf(satire);
    r.publication = weighted_macro_prf(publication);
    r.publication_names = publication.classes();
    for (std::size_t k = 0; k < publication.size(); ++k) {
        r.publication_classes.push_back(
            {publication.classes()[k], publication.support(k), class_prf(publication, k)});
    }
    if (!publication_predictions.empty()) {
        r.publication_histogram =
            prediction_histogram(publication_predictions, publication.size());
    }
    r.documents = satire.total();
    return r;
}

nlohmann::json to_json(const Prf& prf) {
    return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json classes = nlohmann::json::array();
    for (const ClassScore& c : report.publication_classes) {
        classes.push_back({{"name", c.name}, {"support", c.support}, {"scores", to_json(c.scores)}});
    }
    const auto& h = report.publication_histogram;
    nlohmann::json histogram = {{"fractions", h.fractions}};
    if (!h.fractions.empty()) {
        histogram["modal_class"] = report.publication_names.at(h.modal_class);
        histogram["modal_share"] = h.modal_share;
    }
    return {{"documents", report.documents},
            {"satire", to_json(report.satire)},
            {"publication", to_json(report.publication)},
            {"publication_classes", classes},
            {"publication_histogram", histogram}};
}

std::string percent1(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

std::string render_results_table(
    std::span<const std::pair<std::string, MetricsReport>> reports) {
    // The model column is padded by display width; names may hold UTF-8.
    auto display_width = [](const std::string& s) {
        return static_cast<std::size_t>(
            std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::size_t name_width = 5;
    for (const auto& [name, report] : reports) {
        name_width = std::max(name_width, display_width(name));
    }
    auto cell = [](const std::string& s) {
        return std::string(s.size() < 6 ? 6 - s.size() : 0, ' ') + s;
    };
    auto pad_name = [&](const std::string& s) {
        return s + std::string(name_width + 2 - display_width(s), ' ');
    };
    std::string out = pad_name("") + "|" + cell("") + "Satire" + std::string(8, ' ') + "|" +
                      cell("") + "Publication\n";
    out += pad_name("Model") + "|" + cell("P") + cell("R") + cell("F1") + " |" + cell("P") +
           cell("R") + cell("F1") + "\n";
    out += std::string(name_width + 2, '-') + "+" + std::string(19, '-') + "+" +
           std::string(18, '-') + "\n";
    for (const auto& [name, r] : reports) {
        out += pad_name(name) + "|" + cell(percent1(r.satire.precision)) +
               cell(percent1(r.satire.recall)) + cell(percent1(r.satire.f1)) + " |" +
               cell(percent1(r.publication.precision)) + cell(percent1(r.publication.recall)) +
               cell(percent1(r.publication.f1)) + "\n";
    }
    return out;
}

}  // namespace satadv
