#pragma once

#include "adbn/adaptive.hpp"
#include "adbn/data.hpp"
#include "adbn/matrix.hpp"
#include "adbn/rbm.hpp"
#include "adbn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace adbn {

// Multinomial logistic output layer: logits = weights * h + bias.
struct SoftmaxHead {
    Matrix weights;  // M x J_top
    Vector bias;     // M

    std::size_t class_count() const noexcept { return bias.size(); }
    std::size_t input_count() const noexcept { return weights.cols(); }
    Vector probabilities(std::span<const double> h) const;

    bool operator==(const SoftmaxHead&) const = default;
};

struct TrainConfig {
    BatchConfig batch;
    AdaptiveConfig adaptive;
    std::size_t initial_hidden = 20;
    double init_stddev = 0.01;
    std::size_t head_epochs = 200;
    double head_learning_rate = 0.1;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Per-layer summary recorded when the layer finished training.
struct LayerSummary {
    std::size_t initial_hidden = 0;
    std::size_t final_hidden = 0;
    double wd_total = 0.0;
    double energy_term = 0.0;
};

struct DbnModel {
    std::vector<RbmParams> layers;
    SoftmaxHead head;
    std::vector<std::string> class_labels;
    std::string label_name;  // label column of the training data, if known
    std::vector<StructuralEvent> events;
    std::vector<LayerSummary> layer_summaries;
    std::optional<FeatureEncoder> encoder;
    TrainConfig train_config;

    std::size_t input_count() const;
    // Stack and head dimensions agree, M >= 2, parameters finite.
    void validate() const;
};

struct ForwardResult {
    std::vector<Vector> activations;  // [0] = input, [l] = p(h^l = 1 | h^{l-1})
    Vector probabilities;             // softmax output, length M
};

ForwardResult forward(const DbnModel& model, std::span<const double> x);
// Top-layer activations for every row.
Matrix propagate(const DbnModel& model, const Matrix& data);
Matrix propagate_layer(const RbmParams& layer, const Matrix& data);

struct Prediction {
    std::size_t class_index = 0;
    Vector probabilities;
};

// argmax of the softmax output; ties go to the lowest class index.
Prediction predict(const DbnModel& model, std::span<const double> x);
double accuracy(const DbnModel& model, const Matrix& data, std::span<const std::size_t> labels);

// Full-batch gradient descent on mean cross-entropy. Returns the loss after
// every epoch.
std::vector<double> train_head(SoftmaxHead& head, const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t epochs, double learning_rate);

struct TrainReport {
    std::vector<std::vector<EpochStats>> layer_epochs;
    std::vector<LayerSummary> layers;
    std::vector<StructuralEvent> events;
    std::vector<double> head_loss;
    double train_accuracy = 0.0;

    nlohmann::json to_json() const;
};

struct TrainResult {
    DbnModel model;
    TrainReport report;
};

// Greedy layer-wise construction. Each layer is an adaptive RBM trained for
// batch.epochs; a further layer is stacked while the layer-generation rule
// holds. The softmax head is then fit on the top-layer activations.
TrainResult train_dbn(const Matrix& data, std::span<const std::size_t> labels,
                      const std::vector<std::string>& class_labels, const TrainConfig& cfg, Rng& rng);

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string serialize_model(const DbnModel& model);
DbnModel deserialize_model(std::string_view bytes);
void save_model(const DbnModel& model, const std::filesystem::path& path);
DbnModel load_model(const std::filesystem::path& path);

nlohmann::json event_to_json(const StructuralEvent& e);
StructuralEvent event_from_json(const nlohmann::json& j);
// One JSON object per line.
std::string events_to_jsonl(std::span<const StructuralEvent> events);
std::vector<StructuralEvent> events_from_jsonl(const std::string& text);

// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace adbn
