#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace satadv {

/// K x K counts, row = true class, column = predicted class.
class ConfusionCounts {
public:
    explicit ConfusionCounts(std::vector<std::string> classes);
    static ConfusionCounts from_predictions(std::vector<std::string> classes,
                                            std::span<const std::size_t> truth,
                                            std::span<const std::size_t> predicted);

    void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
    std::uint64_t at(std::size_t truth, std::size_t predicted) const;
    std::size_t size() const { return classes_.size(); }
    std::uint64_t total() const;
    std::uint64_t support(std::size_t cls) const;  // true-class count
    const std::vector<std::string>& classes() const { return classes_; }

private:
    std::vector<std::string> classes_;
    std::vector<std::uint64_t> counts_;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// One-vs-rest scores of class `cls`; 0/0 is taken as 0.
Prf class_prf(const ConfusionCounts& conf, std::size_t cls);

/// Precision, recall and F1 of the satire class (index 1) of a 2x2 matrix.
Prf satire_prf(const ConfusionCounts& conf);

/// Per-class scores averaged with weights support / total.
Prf weighted_macro_prf(const ConfusionCounts& conf);

struct PredictionHistogram {
    std::vector<double> fractions;
    std::size_t modal_class = 0;
    double modal_share = 0.0;
};

PredictionHistogram prediction_histogram(std::span<const std::size_t> predictions,
                                         std::size_t classes);

struct ClassScore {
    std::string name;
    std::uint64_t support = 0;
    Prf scores;
};

struct MetricsReport {
    Prf satire;
    Prf publication;
    std::vector<ClassScore> publication_classes;
    PredictionHistogram publication_histogram;
    std::vector<std::string> publication_names;
    std::uint64_t documents = 0;
};

MetricsReport make_report(const ConfusionCounts& satire, const ConfusionCounts& publication,
                          std::span<const std::size_t> publication_predictions);

nlohmann::json to_json(const Prf& prf);
nlohmann::json to_json(const MetricsReport& report);

/// Rows in the given order; scores as percentages with one decimal under
/// "Satire P R F1 | Publication P R F1" headers.
std::string render_results_table(
    std::span<const std::pair<std::string, MetricsReport>> reports);

/// "66.5" for 0.665.
std::string percent1(double fraction);

}  // namespace satadv
