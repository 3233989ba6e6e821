#include "adbn/rbm.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace adbn {

namespace {

void check_length(std::span<const double> x, std::size_t expected, const char* axis) {
    if (x.size() != expected) {
        fail(ErrorCode::dimension_mismatch, std::string(axis) + " axis: expected length " +
                                                std::to_string(expected) + ", got " +
                                                std::to_string(x.size()));
    }
}

void check_enumerable(const RbmParams& params) {
    const std::size_t units = params.visible_count() + params.hidden_count();
    if (units > kMaxEnumerationUnits) {
        fail(ErrorCode::enumeration_limit,
             "exact enumeration needs I + J <= " + std::to_string(kMaxEnumerationUnits) + ", got " +
                 std::to_string(units));
    }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void fill_binary(std::uint64_t code, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>((code >> i) & 1U);
}

// c_j + sum_i W_ij v_i for every j.
void hidden_preactivation(const RbmParams& p, std::span<const double> v, std::span<double> out) {
    const std::size_t J = p.hidden_count();
    std::copy(p.hidden_bias.begin(), p.hidden_bias.end(), out.begin());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        auto w = p.weights.row(i);
        for (std::size_t j = 0; j < J; ++j) out[j] += w[j] * vi;
    }
}

void visible_probabilities(const RbmParams& p, std::span<const double> h, std::span<double> out) {
    for (std::size_t i = 0; i < p.visible_count(); ++i) {
        out[i] = sigmoid(p.visible_bias[i] + dot(p.weights.row(i), h));
    }
}

void hidden_probabilities(const RbmParams& p, std::span<const double> v, std::span<double> out) {
    hidden_preactivation(p, v, out);
    for (double& x : out) x = sigmoid(x);
}

void sample(std::span<const double> probs, std::span<double> out, Rng& rng) {
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = rng.bernoulli(probs[i]) ? 1.0 : 0.0;
}

// Adds scale * (v h^T, v, h) into g.
void accumulate(Gradient& g, std::span<const double> v, std::span<const double> h, double scale) {
    const std::size_t J = h.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
        g.visible_bias[i] += scale * v[i];
        if (v[i] == 0.0) continue;
        auto row = g.weights.row(i);
        const double sv = scale * v[i];
        for (std::size_t j = 0; j < J; ++j) row[j] += sv * h[j];
    }
    for (std::size_t j = 0; j < J; ++j) g.hidden_bias[j] += scale * h[j];
}

void check_batch(const RbmParams& params, const Matrix& batch) {
    require(batch.rows() > 0, ErrorCode::invalid_argument, "empty batch");
    if (batch.cols() != params.visible_count()) {
        fail(ErrorCode::dimension_mismatch, "visible axis: batch has " + std::to_string(batch.cols()) +
                                                " columns, model has " +
                                                std::to_string(params.visible_count()) + " visible units");
    }
}

}  // namespace

RbmParams::RbmParams(std::size_t visible_count, std::size_t hidden_count)
    : visible_bias(visible_count, 0.0), hidden_bias(hidden_count, 0.0), weights(visible_count, hidden_count) {}

RbmParams RbmParams::random(std::size_t visible_count, std::size_t hidden_count, Rng& rng, double stddev) {
    RbmParams p(visible_count, hidden_count);
    for (double& w : p.weights.data()) w = rng.normal(0.0, stddev);
    return p;
}

void RbmParams::validate() const {
    require(visible_count() > 0, ErrorCode::dimension_mismatch, "visible axis: RBM needs at least one visible unit");
    require(hidden_count() > 0, ErrorCode::dimension_mismatch, "hidden axis: RBM needs at least one hidden unit");
    require(weights.rows() == visible_count(), ErrorCode::dimension_mismatch,
            "visible axis: weight rows " + std::to_string(weights.rows()) + " != visible count " +
                std::to_string(visible_count()));
    require(weights.cols() == hidden_count(), ErrorCode::dimension_mismatch,
            "hidden axis: weight columns " + std::to_string(weights.cols()) + " != hidden count " +
                std::to_string(hidden_count()));
    auto finite = [](double x) { return std::isfinite(x); };
    require(std::all_of(visible_bias.begin(), visible_bias.end(), finite) &&
                std::all_of(hidden_bias.begin(), hidden_bias.end(), finite) &&
                std::all_of(weights.data().begin(), weights.data().end(), finite),
            ErrorCode::invalid_argument, "RBM parameters contain a non-finite value");
}

void BatchConfig::validate(std::size_t dataset_rows) const {
    require(batch_size > 0, ErrorCode::invalid_argument, "batch_size must be positive");
    require(batch_size <= dataset_rows, ErrorCode::invalid_argument,
            "batch_size " + std::to_string(batch_size) + " exceeds dataset size " + std::to_string(dataset_rows));
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::invalid_argument,
            "learning_rate must be a finite non-negative number");
    require(cd_steps > 0, ErrorCode::invalid_argument, "cd_steps must be positive");
}

double energy(const RbmParams& params, std::span<const double> v, std::span<const double> h) {
    check_length(v, params.visible_count(), "visible");
    check_length(h, params.hidden_count(), "hidden");
    double e = -dot(params.visible_bias, v) - dot(params.hidden_bias, h);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) continue;
        e -= v[i] * dot(params.weights.row(i), h);
    }
    return e;
}

double free_energy(const RbmParams& params, std::span<const double> v) {
    check_length(v, params.visible_count(), "visible");
    Vector pre(params.hidden_count());
    hidden_preactivation(params, v, pre);
    double f = -dot(params.visible_bias, v);
    for (double x : pre) f -= softplus(x);
    return f;
}

double log_partition_function(const RbmParams& params) {
    params.validate();
    check_enumerable(params);
    const std::size_t I = params.visible_count();
    const std::uint64_t states = std::uint64_t{1} << I;
    Vector v(I);
    std::vector<double> terms(states);
    double max_term = -std::numeric_limits<double>::infinity();
    for (std::uint64_t code = 0; code < states; ++code) {
        fill_binary(code, v);
        terms[code] = -free_energy(params, v);
        max_term = std::max(max_term, terms[code]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    return max_term + std::log(sum);
}

double partition_function(const RbmParams& params) {
    return std::exp(log_partition_function(params));
}

Vector hidden_conditional(const RbmParams& params, std::span<const double> v) {
    check_length(v, params.visible_count(), "visible");
    Vector out(params.hidden_count());
    hidden_probabilities(params, v, out);
    return out;
}

Vector visible_conditional(const RbmParams& params, std::span<const double> h) {
    check_length(h, params.hidden_count(), "hidden");
    Vector out(params.visible_count());
    visible_probabilities(params, h, out);
    return out;
}

Matrix hidden_conditional(const RbmParams& params, const Matrix& data) {
    if (data.cols() != params.visible_count()) {
        fail(ErrorCode::dimension_mismatch, "visible axis: data has " + std::to_string(data.cols()) +
                                                " columns, model has " +
                                                std::to_string(params.visible_count()) + " visible units");
    }
    Matrix out(data.rows(), params.hidden_count());
    for (std::size_t n = 0; n < data.rows(); ++n) hidden_probabilities(params, data.row(n), out.row(n));
    return out;
}

Gradient Gradient::zeros(std::size_t visible_count, std::size_t hidden_count) {
    return Gradient{Vector(visible_count, 0.0), Vector(hidden_count, 0.0), Matrix(visible_count, hidden_count)};
}

double Gradient::dot(const Gradient& other) const {
    return adbn::dot(visible_bias, other.visible_bias) + adbn::dot(hidden_bias, other.hidden_bias) +
           adbn::dot(weights.data(), other.weights.data());
}

double Gradient::norm() const { return std::sqrt(dot(*this)); }

CdResult cd_gradient(const RbmParams& params, const Matrix& batch, std::size_t k, Rng& rng) {
    require(k >= 1, ErrorCode::invalid_argument, "CD needs at least one Gibbs step");
    check_batch(params, batch);
    const std::size_t I = params.visible_count();
    const std::size_t J = params.hidden_count();
    const double scale = 1.0 / static_cast<double>(batch.rows());

    CdResult result{Gradient::zeros(I, J), Matrix(batch.rows(), J)};
    Vector h_sample(J), v_prob(I), v_sample(I), h_prob(J);

    for (std::size_t n = 0; n < batch.rows(); ++n) {
        auto v0 = batch.row(n);
        auto ph0 = result.hidden_probs.row(n);
        hidden_probabilities(params, v0, ph0);
        accumulate(result.gradient, v0, ph0, scale);

        sample(ph0, h_sample, rng);
        for (std::size_t step = 0; step < k; ++step) {
            visible_probabilities(params, h_sample, v_prob);
            sample(v_prob, v_sample, rng);
            hidden_probabilities(params, v_sample, h_prob);
            if (step + 1 < k) sample(h_prob, h_sample, rng);
        }
        accumulate(result.gradient, v_sample, h_prob, -scale);
    }
    return result;
}

Gradient exact_gradient(const RbmParams& params, const Matrix& batch) {
    check_batch(params, batch);
    params.validate();
    check_enumerable(params);
    const std::size_t I = params.visible_count();
    const std::size_t J = params.hidden_count();
    Gradient g = Gradient::zeros(I, J);

    Vector ph(J);
    const double data_scale = 1.0 / static_cast<double>(batch.rows());
    for (std::size_t n = 0; n < batch.rows(); ++n) {
        hidden_probabilities(params, batch.row(n), ph);
        accumulate(g, batch.row(n), ph, data_scale);
    }

    const double log_z = log_partition_function(params);
    const std::uint64_t states = std::uint64_t{1} << I;
    Vector v(I);
    for (std::uint64_t code = 0; code < states; ++code) {
        fill_binary(code, v);
        const double pv = std::exp(-free_energy(params, v) - log_z);
        hidden_probabilities(params, v, ph);
        accumulate(g, v, ph, -pv);
    }
    return g;
}

void apply_gradient(RbmParams& params, const Gradient& gradient, double learning_rate) {
    for (std::size_t i = 0; i < params.visible_count(); ++i)
        params.visible_bias[i] += learning_rate * gradient.visible_bias[i];
    for (std::size_t j = 0; j < params.hidden_count(); ++j)
        params.hidden_bias[j] += learning_rate * gradient.hidden_bias[j];
    auto w = params.weights.data();
    auto dw = gradient.weights.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += learning_rate * dw[k];
}

double reconstruction_error(const RbmParams& params, const Matrix& data) {
    check_batch(params, data);
    Vector ph(params.hidden_count()), pv(params.visible_count());
    double total = 0.0;
    for (std::size_t n = 0; n < data.rows(); ++n) {
        auto v = data.row(n);
        hidden_probabilities(params, v, ph);
        visible_probabilities(params, ph, pv);
        double err = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) err += (v[i] - pv[i]) * (v[i] - pv[i]);
        total += err / static_cast<double>(v.size());
    }
    return total / static_cast<double>(data.rows());
}

double mean_energy(const RbmParams& params, const Matrix& data) {
    check_batch(params, data);
    Vector ph(params.hidden_count());
    double total = 0.0;
    for (std::size_t n = 0; n < data.rows(); ++n) {
        hidden_probabilities(params, data.row(n), ph);
        total += energy(params, data.row(n), ph);
    }
    return total / static_cast<double>(data.rows());
}

EpochStats train_epoch(RbmParams& params, const Matrix& data, const BatchConfig& cfg, Rng& rng) {
    params.validate();
    check_batch(params, data);
    cfg.validate(data.rows());

    const Vector c_start = params.hidden_bias;
    const Matrix w_start = params.weights;

    const auto order = rng.permutation(data.rows());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const Matrix batch = data.select_rows(std::span(order).subspan(start, end - start));
        if (cfg.exact_gradient) {
            apply_gradient(params, exact_gradient(params, batch), cfg.learning_rate);
        } else {
            apply_gradient(params, cd_gradient(params, batch, cfg.cd_steps, rng).gradient, cfg.learning_rate);
        }
    }
    params.validate();

    const std::size_t J = params.hidden_count();
    EpochStats stats;
    stats.hidden_bias_delta.resize(J);
    stats.weight_distance.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        stats.hidden_bias_delta[j] = std::abs(params.hidden_bias[j] - c_start[j]);
        double d = 0.0;
        for (std::size_t i = 0; i < params.visible_count(); ++i) {
            const double diff = params.weights(i, j) - w_start(i, j);
            d += diff * diff;
        }
        stats.weight_distance[j] = std::sqrt(d);
    }
    stats.reconstruction_error = reconstruction_error(params, data);
    stats.mean_energy = mean_energy(params, data);
    return stats;
}

}  // namespace adbn
