#pragma once

#include "adbn/matrix.hpp"
#include "adbn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace adbn {

enum class FeatureKind { continuous, categorical, ordinal };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view name);

struct ColumnHint {
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> levels;  // ordinal: low to high; categorical: optional fixed order
};

struct SchemaHints {
    std::string label_column;
    std::map<std::string, ColumnHint> columns;
    std::vector<std::string> ignore;
};

struct FeatureColumn {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    std::vector<std::string> levels;  // hinted levels, empty when inferred
};

struct ColumnStats {
    std::size_t distinct = 0;
    double min = 0.0;  // continuous only
    double max = 0.0;
};

enum class SplitRole : std::uint8_t { unassigned, train, test };

// A loaded table. Cells stay as their original strings so that rule
// extraction can work on human-readable values.
struct Dataset {
    std::vector<FeatureColumn> features;
    std::vector<std::vector<std::string>> rows;  // rows x features
    std::string label_name;
    std::vector<std::string> labels;             // empty when no label column
    std::vector<SplitRole> assignment;
    std::string provenance;
    std::vector<ColumnStats> stats;

    std::size_t size() const noexcept { return rows.size(); }
    std::optional<std::size_t> feature_index(const std::string& name) const;
    std::vector<std::size_t> rows_with(SplitRole role) const;
    // Sorted distinct labels.
    std::vector<std::string> class_labels() const;
    // Label of each row as an index into class_labels().
    std::vector<std::size_t> label_indices(const std::vector<std::string>& classes) const;
    double numeric(std::size_t row, std::size_t feature) const;
};

// Parses a header-first comma-separated table. Double quotes may wrap a
// field; "" inside quotes is a literal quote.
Dataset parse_csv(std::istream& in, const SchemaHints& hints, const std::string& provenance = "<stream>");
Dataset load_csv(const std::filesystem::path& path, const SchemaHints& hints);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string to_csv(const Dataset& dataset);

// Min-max scales continuous features, one-hot encodes categorical ones and
// maps ordinal ones to equally spaced values in [0, 1].
class FeatureEncoder {
public:
    struct Feature {
        std::string name;
        FeatureKind kind = FeatureKind::continuous;
        double min = 0.0;
        double max = 1.0;
        double mean = 0.0;
        std::vector<std::string> levels;
        std::string mode;  // most frequent level in the fitted rows

        bool operator==(const Feature&) const = default;
    };

    static FeatureEncoder fit(const Dataset& dataset, std::span<const std::size_t> rows);
    static FeatureEncoder fit(const Dataset& dataset);

    const std::vector<Feature>& features() const noexcept { return features_; }
    std::size_t width() const;

    // Cells in the encoder's own feature order.
    Vector encode_row(std::span<const std::string> cells) const;
    // Looks columns up by name, so the dataset may carry extra columns. With
    // `impute`, absent features are filled with the fitted mean / mode.
    Matrix encode(const Dataset& dataset, std::span<const std::size_t> rows, bool impute = false) const;
    Matrix encode(const Dataset& dataset, bool impute = false) const;
    // Raw cells of `dataset` reordered to this encoder's feature order.
    std::vector<std::vector<std::string>> align(const Dataset& dataset, std::span<const std::size_t> rows,
                                                bool impute = false) const;

    double decode_continuous(std::size_t feature, double encoded) const;

    // Hint set that reloads a CSV with this encoder's column kinds.
    SchemaHints hints(const std::string& label_column) const;
    // Stable digest of names, kinds and level lists.
    std::string schema_hash() const;

    nlohmann::json to_json() const;
    static FeatureEncoder from_json(const nlohmann::json& j);

    bool operator==(const FeatureEncoder&) const = default;

private:
    std::vector<Feature> features_;
};

// Stratified seeded split; fills dataset.assignment.
void split(Dataset& dataset, double train_fraction, std::uint64_t seed);

// Planted-rule synthetic data.
enum class Comparison { less, less_equal, greater, greater_equal };

struct PlantedCondition {
    std::size_t feature = 0;
    Comparison op = Comparison::greater;
    double value = 0.0;
};

// A row is positive when any rule's conditions all hold.
struct PlantedRule {
    std::vector<PlantedCondition> conditions;
};

struct PlantedSpec {
    std::size_t feature_count = 10;
    std::size_t rows = 1000;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::vector<PlantedRule> rules;
    std::map<std::size_t, std::pair<double, double>> ranges;  // default [0, 1]

    void validate() const;
    std::vector<std::size_t> informative_features() const;
    bool evaluate(std::span<const double> row) const;
};

// Text format, one directive per line, `#` starts a comment:
//   features 10
//   rows 2000
//   noise 0.05
//   seed 7
//   range f0 10 134
//   rule f0 > 0.6 and f1 <= 0.4
PlantedSpec parse_planted_spec(const std::string& text);
PlantedSpec load_planted_spec(const std::filesystem::path& path);

struct PlantedDataset {
    Dataset dataset;        // features f0.., label column "label" in {negative, positive}
    std::vector<bool> truth;  // noise-free rule value per row
    PlantedSpec spec;
};

PlantedDataset generate_planted(const PlantedSpec& spec);

}  // namespace adbn
