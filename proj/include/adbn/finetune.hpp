#pragma once

#include "adbn/dbn.hpp"

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace adbn {

// Which neurons fired for one sample, per RBM layer.
struct ActivationTrace {
    std::size_t sample = 0;
    bool correct = false;
    std::vector<std::vector<bool>> fired;  // [layer][neuron]
};

struct FineTuneConfig {
    double theta_t = 0.3;  // ratio in [0, 1]
    double theta_f = 0.3;
    double w_correct = 1.0;
    double w_wrong = 0.0;
    double firing_threshold = 0.5;
    std::vector<std::size_t> layers_to_patch;  // empty: every layer, bottom to top

    void validate(std::size_t layer_count) const;
};

// fired iff activation >= firing_threshold; correct iff predict() == label.
std::vector<ActivationTrace> trace_activations(const DbnModel& model, const Matrix& data,
                                               std::span<const std::size_t> labels, double firing_threshold);

struct DiscriminationRatios {
    Vector correct;  // r_T
    Vector wrong;    // r_F
};

// r_T[j] = |X^T firing j| / (|X^T| + |X^F|) when no X^F sample fires j, else 0
// (and symmetrically for r_F).
DiscriminationRatios neuron_discrimination_ratios(std::span<const ActivationTrace> traces, std::size_t layer);

enum class PatchKind { correct, wrong };

struct PatchRecord {
    std::size_t layer = 0;
    std::size_t neuron = 0;
    PatchKind kind = PatchKind::correct;
    double value = 0.0;       // assigned to every incoming weight
    double ratio = 0.0;
    double prior_norm = 0.0;  // L2 norm of the incoming column before patching
};

struct PatchReport {
    std::vector<PatchRecord> patches;
    double accuracy_before = 0.0;
    double accuracy_after = 0.0;

    nlohmann::json to_json() const;
    static PatchReport from_json(const nlohmann::json& j);
    std::string to_text() const;
};

// Overwrites the incoming weight column of every qualifying neuron of
// `layer`. Biases are never touched.
std::vector<PatchRecord> patch_layer(DbnModel& model, std::size_t layer, const DiscriminationRatios& ratios,
                                     const FineTuneConfig& cfg);

// Trace, score and patch each configured layer in ascending order,
// re-tracing after every layer.
PatchReport fine_tune(DbnModel& model, const Matrix& data, std::span<const std::size_t> labels,
                      const FineTuneConfig& cfg);

// Re-applies recorded patches to an unpatched model.
void apply_patches(DbnModel& model, std::span<const PatchRecord> patches);

}  // namespace adbn
