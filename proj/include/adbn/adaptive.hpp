#pragma once

#include "adbn/matrix.hpp"
#include "adbn/rbm.hpp"
#include "adbn/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace adbn {

// Walking Distance per hidden neuron: exponentially smoothed per-epoch
// movement of the hidden bias (wd_c) and of the incoming weight column (wd_w).
struct WdTracker {
    Vector wd_c;
    Vector wd_w;
    double gamma_c = 0.9;
    double gamma_w = 0.9;

    WdTracker() = default;
    WdTracker(std::size_t hidden_count, double gamma_c = 0.9, double gamma_w = 0.9);

    std::size_t size() const noexcept { return wd_c.size(); }
    double product(std::size_t j) const { return wd_c[j] * wd_w[j]; }
    // Sum over neurons of wd_c * wd_w.
    double total() const;
};

struct AdaptiveConfig {
    double theta_g = 0.001;
    double theta_a = 0.100;
    double theta_l1 = 0.05;
    double theta_l2 = 0.05;
    double alpha_wd = 1.0;
    double alpha_e = 1.0;
    double noise_mu = 0.0;
    double noise_sigma = 0.1;
    double gamma_c = 0.9;
    double gamma_w = 0.9;
    std::size_t warmup_epochs = 5;
    std::size_t max_hidden = 2000;
    std::size_t max_layers = 8;
    bool enable_generation = true;
    bool enable_annihilation = true;

    void validate() const;
};

enum class EventKind { generation, generation_skipped, annihilation, layer_spawn };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view name);

struct StructuralEvent {
    EventKind kind = EventKind::generation;
    std::size_t epoch = 0;
    std::size_t layer_index = 0;
    // generation: parent index (child sits at parent + 1); annihilation: removed index.
    std::optional<std::size_t> neuron_index;
    double trigger_value = 0.0;

    bool operator==(const StructuralEvent&) const = default;
};

void update_wd(WdTracker& tracker, std::span<const double> delta_c, std::span<const double> weight_dist);

// Neurons with wd_c * wd_w > theta_g, ascending by index. Returns nothing
// before warmup_epochs; when the max_hidden cap binds, the strongest
// triggers are kept.
std::vector<std::size_t> check_generation(const WdTracker& tracker, const AdaptiveConfig& cfg,
                                          std::size_t current_hidden, std::size_t epoch);

// Inserts a perturbed copy of `parent` at parent + 1. The child inherits the
// parent's WD state. At the max_hidden cap this is a no-op that returns a
// generation_skipped event.
StructuralEvent generate_neuron(RbmParams& params, WdTracker& tracker, std::size_t parent,
                                const AdaptiveConfig& cfg, Rng& rng, std::size_t epoch = 0,
                                std::size_t layer_index = 0);

// Columns of `hidden_probs` (N x J) whose mean is below theta_a, ascending.
// At most J - 1 are returned; if every column qualifies the highest-mean one
// survives.
std::vector<std::size_t> check_annihilation(const Matrix& hidden_probs, const AdaptiveConfig& cfg);

StructuralEvent annihilate_neuron(RbmParams& params, WdTracker& tracker, std::size_t j,
                                  std::size_t epoch = 0, std::size_t layer_index = 0,
                                  double trigger_value = 0.0);

// per_layer_wd[l] = sum_j wd_c*wd_w at layer l; per_layer_energy[l] = the
// layer's normalized energy term. Both conjuncts and the layer cap must hold.
bool check_layer_generation(std::span<const double> per_layer_wd, std::span<const double> per_layer_energy,
                            const AdaptiveConfig& cfg);

// Energy term fed to the layer-generation rule: magnitude of the mean energy
// E(v, p(h|v)) divided by the hidden count.
double layer_energy_term(const RbmParams& params, const Matrix& data);

struct AdaptiveRbmResult {
    RbmParams params;
    WdTracker tracker;
    std::vector<EpochStats> epochs;
    std::vector<StructuralEvent> events;
    double wd_total = 0.0;
    double energy_term = 0.0;
};

// Trains one layer for cfg.epochs. After each epoch: update WD, split
// qualifying neurons, then remove silent ones (neurons born this epoch are
// exempt).
AdaptiveRbmResult train_adaptive_rbm(RbmParams initial, const Matrix& data, const BatchConfig& batch,
                                     const AdaptiveConfig& cfg, Rng& rng, std::size_t layer_index = 0);

// Hidden count obtained by applying a layer's events to its initial width.
std::size_t replay_hidden_count(std::size_t initial_hidden, std::span<const StructuralEvent> events,
                                std::size_t layer_index);

}  // namespace adbn
