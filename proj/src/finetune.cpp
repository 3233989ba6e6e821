#include "adbn/finetune.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace adbn {

void FineTuneConfig::validate(std::size_t layer_count) const {
    require(theta_t >= 0.0 && theta_t <= 1.0 && theta_f >= 0.0 && theta_f <= 1.0, ErrorCode::invalid_argument,
            "fine-tune thresholds must be ratios in [0, 1]");
    require(firing_threshold > 0.0 && firing_threshold < 1.0, ErrorCode::invalid_argument,
            "firing threshold must lie in (0, 1)");
    require(std::isfinite(w_correct) && std::isfinite(w_wrong), ErrorCode::invalid_argument,
            "patch weights must be finite");
    for (auto l : layers_to_patch) {
        require(l < layer_count, ErrorCode::invalid_argument, "layer " + std::to_string(l) + " does not exist");
    }
}

std::vector<ActivationTrace> trace_activations(const DbnModel& model, const Matrix& data,
                                               std::span<const std::size_t> labels, double firing_threshold) {
    require(labels.size() == data.rows(), ErrorCode::dimension_mismatch, "one label per data row required");
    std::vector<ActivationTrace> traces;
    traces.reserve(data.rows());
    for (std::size_t n = 0; n < data.rows(); ++n) {
        const auto fr = forward(model, data.row(n));
        std::size_t best = 0;
        for (std::size_t k = 1; k < fr.probabilities.size(); ++k) {
            if (fr.probabilities[k] > fr.probabilities[best]) best = k;
        }
        ActivationTrace t;
        t.sample = n;
        t.correct = best == labels[n];
        for (std::size_t l = 1; l < fr.activations.size(); ++l) {
            std::vector<bool> fired(fr.activations[l].size());
            for (std::size_t j = 0; j < fired.size(); ++j) fired[j] = fr.activations[l][j] >= firing_threshold;
            t.fired.push_back(std::move(fired));
        }
        traces.push_back(std::move(t));
    }
    return traces;
}

DiscriminationRatios neuron_discrimination_ratios(std::span<const ActivationTrace> traces, std::size_t layer) {
    require(!traces.empty(), ErrorCode::invalid_argument, "no traces to score");
    require(layer < traces.front().fired.size(), ErrorCode::invalid_argument,
            "layer " + std::to_string(layer) + " not present in traces");
    const std::size_t J = traces.front().fired[layer].size();
    std::vector<std::size_t> fired_correct(J, 0), fired_wrong(J, 0);
    for (const auto& t : traces) {
        require(t.fired.size() > layer && t.fired[layer].size() == J, ErrorCode::dimension_mismatch,
                "trace layer widths disagree");
        for (std::size_t j = 0; j < J; ++j) {
            if (!t.fired[layer][j]) continue;
            ++(t.correct ? fired_correct : fired_wrong)[j];
        }
    }
    const double total = static_cast<double>(traces.size());
    DiscriminationRatios r{Vector(J, 0.0), Vector(J, 0.0)};
    for (std::size_t j = 0; j < J; ++j) {
        if (fired_wrong[j] == 0) r.correct[j] = static_cast<double>(fired_correct[j]) / total;
        if (fired_correct[j] == 0) r.wrong[j] = static_cast<double>(fired_wrong[j]) / total;
    }
    return r;
}

std::vector<PatchRecord> patch_layer(DbnModel& model, std::size_t layer, const DiscriminationRatios& ratios,
                                     const FineTuneConfig& cfg) {
    require(layer < model.layers.size(), ErrorCode::invalid_argument, "layer " + std::to_string(layer) + " does not exist");
    if (!cfg.layers_to_patch.empty()) {
        require(std::find(cfg.layers_to_patch.begin(), cfg.layers_to_patch.end(), layer) != cfg.layers_to_patch.end(),
                ErrorCode::invalid_argument, "layer " + std::to_string(layer) + " is not configured for patching");
    }
    auto& params = model.layers[layer];
    const std::size_t J = params.hidden_count();
    require(ratios.correct.size() == J && ratios.wrong.size() == J, ErrorCode::dimension_mismatch,
            "hidden axis: ratio vectors do not match layer width");

    std::vector<PatchRecord> out;
    for (std::size_t j = 0; j < J; ++j) {
        // A neuron needs at least one firing sample (ratio > 0) to count as exclusive.
        const bool as_correct = ratios.correct[j] > 0.0 && ratios.correct[j] >= cfg.theta_t;
        const bool as_wrong = ratios.wrong[j] > 0.0 && ratios.wrong[j] >= cfg.theta_f;
        require(!(as_correct && as_wrong), ErrorCode::invalid_argument,
                "neuron " + std::to_string(j) + " qualifies for both patches");
        if (!as_correct && !as_wrong) continue;
        const Vector column = params.weights.column(j);
        double norm = 0.0;
        for (double w : column) norm += w * w;
        PatchRecord rec{layer, j, as_correct ? PatchKind::correct : PatchKind::wrong,
                        as_correct ? cfg.w_correct : cfg.w_wrong,
                        as_correct ? ratios.correct[j] : ratios.wrong[j], std::sqrt(norm)};
        for (std::size_t i = 0; i < params.visible_count(); ++i) params.weights(i, j) = rec.value;
        out.push_back(rec);
    }
    return out;
}

PatchReport fine_tune(DbnModel& model, const Matrix& data, std::span<const std::size_t> labels,
                      const FineTuneConfig& cfg) {
    model.validate();
    cfg.validate(model.layers.size());
    PatchReport report;
    report.accuracy_before = accuracy(model, data, labels);

    std::vector<std::size_t> layers = cfg.layers_to_patch;
    if (layers.empty()) {
        for (std::size_t l = 0; l < model.layers.size(); ++l) layers.push_back(l);
    }
    std::sort(layers.begin(), layers.end());
    layers.erase(std::unique(layers.begin(), layers.end()), layers.end());

    for (auto l : layers) {
        const auto traces = trace_activations(model, data, labels, cfg.firing_threshold);
        const auto ratios = neuron_discrimination_ratios(traces, l);
        auto patches = patch_layer(model, l, ratios, cfg);
        report.patches.insert(report.patches.end(), patches.begin(), patches.end());
    }
    report.accuracy_after = accuracy(model, data, labels);
    return report;
}

void apply_patches(DbnModel& model, std::span<const PatchRecord> patches) {
    for (const auto& p : patches) {
        require(p.layer < model.layers.size() && p.neuron < model.layers[p.layer].hidden_count(),
                ErrorCode::invalid_argument, "patch refers to a missing neuron");
        auto& params = model.layers[p.layer];
        for (std::size_t i = 0; i < params.visible_count(); ++i) params.weights(i, p.neuron) = p.value;
    }
}

nlohmann::json PatchReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : patches) {
        arr.push_back({{"layer", p.layer}, {"neuron", p.neuron},
                       {"kind", p.kind == PatchKind::correct ? "correct" : "wrong"}, {"value", p.value},
                       {"ratio", p.ratio}, {"prior_norm", p.prior_norm}});
    }
    return {{"patches", arr}, {"accuracy_before", accuracy_before}, {"accuracy_after", accuracy_after}};
}

PatchReport PatchReport::from_json(const nlohmann::json& j) {
    PatchReport r;
    try {
        r.accuracy_before = j.at("accuracy_before").get<double>();
        r.accuracy_after = j.at("accuracy_after").get<double>();
        for (const auto& pj : j.at("patches")) {
            PatchRecord p;
            p.layer = pj.at("layer").get<std::size_t>();
            p.neuron = pj.at("neuron").get<std::size_t>();
            p.kind = pj.at("kind").get<std::string>() == "correct" ? PatchKind::correct : PatchKind::wrong;
            p.value = pj.at("value").get<double>();
            p.ratio = pj.at("ratio").get<double>();
            p.prior_norm = pj.at("prior_norm").get<double>();
            r.patches.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed patch report: ") + e.what());
    }
    return r;
}

std::string PatchReport::to_text() const {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "accuracy before: %.4f\naccuracy after:  %.4f\npatched neurons: %zu\n",
                  accuracy_before, accuracy_after, patches.size());
    os << line;
    for (const auto& p : patches) {
        std::snprintf(line, sizeof(line), "  layer %zu neuron %zu -> %s (w = %g, ratio %.4f, prior |w| %.6g)\n",
                      p.layer, p.neuron, p.kind == PatchKind::correct ? "w_correct" : "w_wrong", p.value, p.ratio,
                      p.prior_norm);
        os << line;
    }
    return os.str();
}

}  // namespace adbn
