#pragma once

#include "adbn/matrix.hpp"
#include "adbn/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace adbn {

// Learnable parameters of one binary RBM layer: visible biases b (I),
// hidden biases c (J) and weights W (I x J, W(i, j) couples v_i and h_j).
struct RbmParams {
    Vector visible_bias;
    Vector hidden_bias;
    Matrix weights;

    RbmParams() = default;
    RbmParams(std::size_t visible_count, std::size_t hidden_count);

    // b = c = 0, W ~ N(0, stddev^2).
    static RbmParams random(std::size_t visible_count, std::size_t hidden_count, Rng& rng,
                            double stddev = 0.01);

    std::size_t visible_count() const noexcept { return visible_bias.size(); }
    std::size_t hidden_count() const noexcept { return hidden_bias.size(); }

    // Throws dimension_mismatch or invalid_argument (non-finite entry).
    void validate() const;

    bool operator==(const RbmParams&) const = default;
};

struct BatchConfig {
    std::size_t batch_size = 100;
    double learning_rate = 0.005;
    std::size_t cd_steps = 1;
    std::size_t epochs = 50;
    std::uint64_t rng_seed = 0;
    // Replace CD-k by the enumerated log-likelihood gradient (tiny layers only).
    bool exact_gradient = false;

    void validate(std::size_t dataset_rows) const;
};

// Largest I + J accepted by the enumerating routines.
inline constexpr std::size_t kMaxEnumerationUnits = 24;

double energy(const RbmParams& params, std::span<const double> v, std::span<const double> h);

// Z by summing exp(-E) over every (v, h) state. The hidden sum is taken in
// closed form per visible state, so the cost is 2^I * I * J.
double partition_function(const RbmParams& params);
double log_partition_function(const RbmParams& params);

// F(v) = -b.v - sum_j log(1 + exp(c_j + W_j.v)); p(v) = exp(-F(v)) / Z.
double free_energy(const RbmParams& params, std::span<const double> v);

Vector hidden_conditional(const RbmParams& params, std::span<const double> v);
Vector visible_conditional(const RbmParams& params, std::span<const double> h);
Matrix hidden_conditional(const RbmParams& params, const Matrix& data);

struct Gradient {
    Vector visible_bias;
    Vector hidden_bias;
    Matrix weights;

    static Gradient zeros(std::size_t visible_count, std::size_t hidden_count);
    double norm() const;
    double dot(const Gradient& other) const;
};

struct CdResult {
    Gradient gradient;
    Matrix hidden_probs;  // positive-phase p(h | v) for each batch row
};

// CD-k estimate of the log-likelihood ascent direction, averaged over the
// batch. Positive phase uses data rows as probabilities; the chain runs on
// binary samples and the negative statistics use p(h | v_k).
CdResult cd_gradient(const RbmParams& params, const Matrix& batch, std::size_t k, Rng& rng);

// Exact gradient of the mean log-likelihood of the batch (enumerates 2^I
// visible states; requires I + J <= kMaxEnumerationUnits).
Gradient exact_gradient(const RbmParams& params, const Matrix& batch);

void apply_gradient(RbmParams& params, const Gradient& gradient, double learning_rate);

struct EpochStats {
    double reconstruction_error = 0.0;  // mean squared mean-field reconstruction error
    double mean_energy = 0.0;           // mean E(v, p(h|v)) per sample
    Vector hidden_bias_delta;           // |c_j[end] - c_j[start]|
    Vector weight_distance;             // ||W_j[end] - W_j[start]||_2
};

double reconstruction_error(const RbmParams& params, const Matrix& data);
double mean_energy(const RbmParams& params, const Matrix& data);

// One pass of minibatch SGD over a seeded permutation of the rows.
EpochStats train_epoch(RbmParams& params, const Matrix& data, const BatchConfig& cfg, Rng& rng);

}  // namespace adbn
