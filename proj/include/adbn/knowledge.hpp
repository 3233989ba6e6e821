#pragma once

#include "adbn/c45.hpp"
#include "adbn/data.hpp"
#include "adbn/dbn.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace adbn {

// Ordered cut points split [0, 1] into bands; each band is closed below.
struct ProbabilityBanding {
    std::vector<double> cuts{0.20, 0.35, 0.50};
    std::vector<std::string> labels;  // empty: derived from the cuts

    void validate() const;
    std::size_t band_count() const noexcept { return cuts.size() + 1; }
    std::size_t band_of(double probability) const;
    std::vector<std::string> band_labels() const;

    // "0.2,0.35,0.5"
    static ProbabilityBanding parse(const std::string& text);
    nlohmann::json to_json() const;
};

// The model's inputs in raw attribute form paired with its banded output.
struct IoPairs {
    c45::Table table;               // class_names = band labels, y = band index
    Vector probabilities;           // positive-class probability per row
    std::vector<std::size_t> rows;  // source row in the dataset
};

// Raw cells in encoder order mapped to a C4.5 schema: continuous features
// stay numeric, categorical and ordinal ones keep their levels.
c45::AttributeSchema attribute_schema(const FeatureEncoder& encoder);
c45::Table attribute_table(const FeatureEncoder& encoder, const std::vector<std::vector<std::string>>& cells);

std::size_t class_index(const DbnModel& model, const std::string& positive_class);

IoPairs generate_io_pairs(const DbnModel& model, const Dataset& data, std::span<const std::size_t> rows,
                          const std::string& positive_class, const ProbabilityBanding& banding,
                          bool impute = false);

struct ExtractConfig {
    c45::TreeConfig tree;
    double holdout_fraction = 0.25;
    std::uint64_t seed = 0;
    bool impute = false;
};

struct FidelityReport {
    double agreement = 0.0;  // held-out: rule band == model band
    double train_agreement = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [model band][rule band], held-out
    std::vector<std::size_t> band_histogram;          // model bands over all pairs
    std::size_t rule_count = 0;
    std::size_t train_count = 0;
    std::size_t heldout_count = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json(const std::vector<std::string>& band_labels) const;
    std::string to_text(const std::vector<std::string>& band_labels) const;
};

struct Extraction {
    c45::RuleSet rules;
    c45::DecisionNode tree;
    FidelityReport fidelity;
    IoPairs pairs;
};

Extraction extract_rules(const DbnModel& model, const Dataset& data, std::span<const std::size_t> rows,
                         const std::string& positive_class, const ProbabilityBanding& banding,
                         const ExtractConfig& cfg);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) to (1,1)
    double auc = 0.0;
};

// Threshold sweep from the highest distinct score downwards; tied scores
// move together, giving a diagonal segment.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);
std::string roc_to_csv(const RocCurve& curve);

}  // namespace adbn
