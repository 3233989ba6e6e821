#include "adbn/adaptive.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace adbn {

WdTracker::WdTracker(std::size_t hidden_count, double gamma_c_, double gamma_w_)
    : wd_c(hidden_count, 0.0), wd_w(hidden_count, 0.0), gamma_c(gamma_c_), gamma_w(gamma_w_) {
    require(gamma_c >= 0.0 && gamma_c < 1.0 && gamma_w >= 0.0 && gamma_w < 1.0, ErrorCode::invalid_argument,
            "WD decay coefficients must lie in [0, 1)");
}

double WdTracker::total() const {
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j) s += product(j);
    return s;
}

void AdaptiveConfig::validate() const {
    require(theta_g > 0.0, ErrorCode::invalid_argument, "theta_g must be positive");
    require(theta_a >= 0.0 && theta_a <= 1.0, ErrorCode::invalid_argument, "theta_a must lie in [0, 1]");
    require(theta_l1 >= 0.0 && theta_l2 >= 0.0, ErrorCode::invalid_argument,
            "layer thresholds must be non-negative");
    require(alpha_wd > 0.0 && alpha_e > 0.0, ErrorCode::invalid_argument, "alpha constants must be positive");
    require(noise_sigma >= 0.0, ErrorCode::invalid_argument, "noise_sigma must be non-negative");
    require(gamma_c >= 0.0 && gamma_c < 1.0 && gamma_w >= 0.0 && gamma_w < 1.0, ErrorCode::invalid_argument,
            "WD decay coefficients must lie in [0, 1)");
    require(max_hidden > 0 && max_layers > 0, ErrorCode::invalid_argument, "caps must be positive");
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::generation: return "generation";
    case EventKind::generation_skipped: return "generation-skipped";
    case EventKind::annihilation: return "annihilation";
    case EventKind::layer_spawn: return "layer-spawn";
    }
    return "unknown";
}

EventKind event_kind_from_string(std::string_view name) {
    for (auto k : {EventKind::generation, EventKind::generation_skipped, EventKind::annihilation,
                   EventKind::layer_spawn}) {
        if (to_string(k) == name) return k;
    }
    fail(ErrorCode::format_error, "unknown structural event kind '" + std::string(name) + "'");
}

void update_wd(WdTracker& tracker, std::span<const double> delta_c, std::span<const double> weight_dist) {
    require(delta_c.size() == tracker.size() && weight_dist.size() == tracker.size(),
            ErrorCode::dimension_mismatch,
            "hidden axis: WD tracker has " + std::to_string(tracker.size()) + " neurons, deltas have " +
                std::to_string(delta_c.size()) + "/" + std::to_string(weight_dist.size()));
    for (std::size_t j = 0; j < tracker.size(); ++j) {
        require(delta_c[j] >= 0.0 && weight_dist[j] >= 0.0, ErrorCode::invalid_argument,
                "WD inputs must be non-negative (neuron " + std::to_string(j) + ")");
    }
    for (std::size_t j = 0; j < tracker.size(); ++j) {
        tracker.wd_c[j] = tracker.gamma_c * tracker.wd_c[j] + (1.0 - tracker.gamma_c) * delta_c[j];
        tracker.wd_w[j] = tracker.gamma_w * tracker.wd_w[j] + (1.0 - tracker.gamma_w) * weight_dist[j];
    }
}

std::vector<std::size_t> check_generation(const WdTracker& tracker, const AdaptiveConfig& cfg,
                                          std::size_t current_hidden, std::size_t epoch) {
    if (epoch < cfg.warmup_epochs) return {};
    std::vector<std::size_t> hits;
    for (std::size_t j = 0; j < tracker.size(); ++j) {
        if (tracker.product(j) > cfg.theta_g) hits.push_back(j);
    }
    const std::size_t room = cfg.max_hidden > current_hidden ? cfg.max_hidden - current_hidden : 0;
    if (hits.size() > room) {
        std::stable_sort(hits.begin(), hits.end(),
                         [&](std::size_t a, std::size_t b) { return tracker.product(a) > tracker.product(b); });
        hits.resize(room);
        std::sort(hits.begin(), hits.end());
    }
    return hits;
}

StructuralEvent generate_neuron(RbmParams& params, WdTracker& tracker, std::size_t parent,
                                const AdaptiveConfig& cfg, Rng& rng, std::size_t epoch, std::size_t layer_index) {
    require(parent < params.hidden_count(), ErrorCode::invalid_argument,
            "parent neuron " + std::to_string(parent) + " out of range");
    require(tracker.size() == params.hidden_count(), ErrorCode::dimension_mismatch,
            "hidden axis: WD tracker length differs from hidden count");
    const double trigger = tracker.product(parent);
    if (params.hidden_count() >= cfg.max_hidden) {
        return {EventKind::generation_skipped, epoch, layer_index, parent, trigger};
    }

    const std::size_t child = parent + 1;
    const double c_new = params.hidden_bias[parent] + rng.normal(cfg.noise_mu, cfg.noise_sigma);
    Vector w_new = params.weights.column(parent);
    for (double& w : w_new) w += rng.normal(cfg.noise_mu, cfg.noise_sigma);

    params.hidden_bias.insert(params.hidden_bias.begin() + static_cast<std::ptrdiff_t>(child), c_new);
    params.weights.insert_column(child, w_new);
    tracker.wd_c.insert(tracker.wd_c.begin() + static_cast<std::ptrdiff_t>(child), tracker.wd_c[parent]);
    tracker.wd_w.insert(tracker.wd_w.begin() + static_cast<std::ptrdiff_t>(child), tracker.wd_w[parent]);
    params.validate();
    return {EventKind::generation, epoch, layer_index, parent, trigger};
}

std::vector<std::size_t> check_annihilation(const Matrix& hidden_probs, const AdaptiveConfig& cfg) {
    const std::size_t N = hidden_probs.rows();
    const std::size_t J = hidden_probs.cols();
    require(N >= 1, ErrorCode::invalid_argument, "annihilation check needs at least one sample");
    Vector mean(J, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        auto row = hidden_probs.row(n);
        for (std::size_t j = 0; j < J; ++j) mean[j] += row[j];
    }
    std::vector<std::size_t> hits;
    for (std::size_t j = 0; j < J; ++j) {
        mean[j] /= static_cast<double>(N);
        if (mean[j] < cfg.theta_a) hits.push_back(j);
    }
    if (!hits.empty() && hits.size() == J) {
        // Keep the most active neuron; ties go to the lowest index.
        std::size_t keep = 0;
        for (std::size_t j = 1; j < J; ++j) {
            if (mean[j] > mean[keep]) keep = j;
        }
        hits.erase(std::find(hits.begin(), hits.end(), keep));
    }
    return hits;
}

StructuralEvent annihilate_neuron(RbmParams& params, WdTracker& tracker, std::size_t j, std::size_t epoch,
                                  std::size_t layer_index, double trigger_value) {
    require(params.hidden_count() >= 2, ErrorCode::invalid_argument,
            "refusing to annihilate the last hidden neuron");
    require(j < params.hidden_count(), ErrorCode::invalid_argument,
            "neuron " + std::to_string(j) + " out of range");
    require(tracker.size() == params.hidden_count(), ErrorCode::dimension_mismatch,
            "hidden axis: WD tracker length differs from hidden count");
    params.hidden_bias.erase(params.hidden_bias.begin() + static_cast<std::ptrdiff_t>(j));
    params.weights.erase_column(j);
    tracker.wd_c.erase(tracker.wd_c.begin() + static_cast<std::ptrdiff_t>(j));
    tracker.wd_w.erase(tracker.wd_w.begin() + static_cast<std::ptrdiff_t>(j));
    params.validate();
    return {EventKind::annihilation, epoch, layer_index, j, trigger_value};
}

bool check_layer_generation(std::span<const double> per_layer_wd, std::span<const double> per_layer_energy,
                            const AdaptiveConfig& cfg) {
    require(!per_layer_wd.empty() && per_layer_wd.size() == per_layer_energy.size(),
            ErrorCode::dimension_mismatch, "layer axis: WD and energy lists must be non-empty and equal length");
    double wd_sum = 0.0;
    double energy_sum = 0.0;
    for (std::size_t l = 0; l < per_layer_wd.size(); ++l) {
        wd_sum += cfg.alpha_wd * per_layer_wd[l];
        energy_sum += cfg.alpha_e * per_layer_energy[l];
    }
    return wd_sum > cfg.theta_l1 && energy_sum > cfg.theta_l2 && per_layer_wd.size() < cfg.max_layers;
}

double layer_energy_term(const RbmParams& params, const Matrix& data) {
    return std::abs(mean_energy(params, data)) / static_cast<double>(params.hidden_count());
}

AdaptiveRbmResult train_adaptive_rbm(RbmParams initial, const Matrix& data, const BatchConfig& batch,
                                     const AdaptiveConfig& cfg, Rng& rng, std::size_t layer_index) {
    cfg.validate();
    initial.validate();
    AdaptiveRbmResult out;
    out.params = std::move(initial);
    out.tracker = WdTracker(out.params.hidden_count(), cfg.gamma_c, cfg.gamma_w);

    Rng sgd_rng = rng.derive("sgd");
    Rng noise_rng = rng.derive("generation-noise");

    for (std::size_t epoch = 0; epoch < batch.epochs; ++epoch) {
        EpochStats stats = train_epoch(out.params, data, batch, sgd_rng);
        update_wd(out.tracker, stats.hidden_bias_delta, stats.weight_distance);

        std::vector<bool> newborn(out.params.hidden_count(), false);
        if (cfg.enable_generation) {
            auto parents = check_generation(out.tracker, cfg, out.params.hidden_count(), epoch);
            // Descending order keeps the remaining parent indices valid.
            for (auto it = parents.rbegin(); it != parents.rend(); ++it) {
                auto event = generate_neuron(out.params, out.tracker, *it, cfg, noise_rng, epoch, layer_index);
                if (event.kind == EventKind::generation) {
                    newborn.insert(newborn.begin() + static_cast<std::ptrdiff_t>(*it + 1), true);
                }
                out.events.push_back(event);
            }
        }

        if (cfg.enable_annihilation) {
            const Matrix probs = hidden_conditional(out.params, data);
            auto victims = check_annihilation(probs, cfg);
            std::erase_if(victims, [&](std::size_t j) { return newborn[j]; });
            for (auto it = victims.rbegin(); it != victims.rend(); ++it) {
                double mean = 0.0;
                for (std::size_t n = 0; n < probs.rows(); ++n) mean += probs(n, *it);
                mean /= static_cast<double>(probs.rows());
                out.events.push_back(annihilate_neuron(out.params, out.tracker, *it, epoch, layer_index, mean));
            }
        }
        out.epochs.push_back(std::move(stats));
    }
    out.wd_total = out.tracker.total();
    out.energy_term = layer_energy_term(out.params, data);
    return out;
}

std::size_t replay_hidden_count(std::size_t initial_hidden, std::span<const StructuralEvent> events,
                                std::size_t layer_index) {
    std::size_t hidden = initial_hidden;
    for (const auto& e : events) {
        if (e.layer_index != layer_index) continue;
        if (e.kind == EventKind::generation) {
            ++hidden;
        } else if (e.kind == EventKind::annihilation) {
            require(hidden >= 2, ErrorCode::format_error, "event log annihilates the last neuron");
            --hidden;
        }
    }
    return hidden;
}

}  // namespace adbn
