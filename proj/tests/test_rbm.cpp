#include "adbn/error.hpp"
#include "adbn/rbm.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace adbn;

namespace {

Vector bits(std::size_t code, std::size_t n) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>((code >> i) & 1u);
    return v;
}

// Joint over every (v, h) built directly from the energy.
struct Joint {
    std::size_t I, J;
    std::vector<double> p;  // index v_code * 2^J + h_code
};

Joint enumerate_joint(const RbmParams& params) {
    const std::size_t I = params.visible_count(), J = params.hidden_count();
    Joint j{I, J, {}};
    double z = 0.0;
    for (std::size_t vc = 0; vc < (1u << I); ++vc) {
        for (std::size_t hc = 0; hc < (1u << J); ++hc) {
            const double w = std::exp(-energy(params, bits(vc, I), bits(hc, J)));
            j.p.push_back(w);
            z += w;
        }
    }
    for (auto& x : j.p) x /= z;
    return j;
}

RbmParams random_params(std::size_t I, std::size_t J, Rng& rng, double scale = 1.0) {
    RbmParams p(I, J);
    for (auto& x : p.visible_bias) x = rng.normal(0.0, scale);
    for (auto& x : p.hidden_bias) x = rng.normal(0.0, scale);
    for (auto& x : p.weights.data()) x = rng.normal(0.0, scale);
    return p;
}

double mean_log_likelihood(const RbmParams& params, const Matrix& data) {
    const double log_z = log_partition_function(params);
    double s = 0.0;
    for (std::size_t n = 0; n < data.rows(); ++n) s += -free_energy(params, data.row(n)) - log_z;
    return s / static_cast<double>(data.rows());
}

}  // namespace

TEST_CASE("energy of a hand-sized configuration") {
    RbmParams p(2, 1);
    p.visible_bias = {1.0, -1.0};
    p.hidden_bias = {0.5};
    p.weights(0, 0) = 2.0;
    p.weights(1, 0) = -1.0;
    const Vector v{1.0, 1.0}, h{1.0};
    CHECK(energy(p, v, h) == doctest::Approx(-1.5).epsilon(1e-15));
    const Vector v0{0.0, 0.0}, h0{0.0};
    CHECK(energy(p, v0, h0) == 0.0);
}

TEST_CASE("partition function equals the brute-force sum over states") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_params(3, 3, rng);
        double z = 0.0;
        for (std::size_t vc = 0; vc < 8; ++vc) {
            for (std::size_t hc = 0; hc < 8; ++hc) z += std::exp(-energy(p, bits(vc, 3), bits(hc, 3)));
        }
        CHECK(partition_function(p) == doctest::Approx(z).epsilon(1e-12));
        CHECK(log_partition_function(p) == doctest::Approx(std::log(z)).epsilon(1e-12));
    }
}

TEST_CASE("free energy marginalizes the hidden layer") {
    Rng rng(5);
    const auto p = random_params(4, 3, rng);
    for (std::size_t vc = 0; vc < 16; ++vc) {
        const auto v = bits(vc, 4);
        double s = 0.0;
        for (std::size_t hc = 0; hc < 8; ++hc) s += std::exp(-energy(p, v, bits(hc, 3)));
        CHECK(std::exp(-free_energy(p, v)) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("conditionals match marginals of the enumerated joint") {
    Rng rng(21);
    const auto p = random_params(4, 3, rng);
    const auto joint = enumerate_joint(p);
    for (std::size_t vc = 0; vc < 16; ++vc) {
        double pv = 0.0;
        Vector num(3, 0.0);
        for (std::size_t hc = 0; hc < 8; ++hc) {
            const double w = joint.p[vc * 8 + hc];
            pv += w;
            for (std::size_t j = 0; j < 3; ++j) num[j] += ((hc >> j) & 1u) ? w : 0.0;
        }
        const auto cond = hidden_conditional(p, bits(vc, 4));
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(cond[j] - num[j] / pv) < 1e-9);
    }
    for (std::size_t hc = 0; hc < 8; ++hc) {
        double ph = 0.0;
        Vector num(4, 0.0);
        for (std::size_t vc = 0; vc < 16; ++vc) {
            const double w = joint.p[vc * 8 + hc];
            ph += w;
            for (std::size_t i = 0; i < 4; ++i) num[i] += ((vc >> i) & 1u) ? w : 0.0;
        }
        const auto cond = visible_conditional(p, bits(hc, 3));
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(cond[i] - num[i] / ph) < 1e-9);
    }
}

TEST_CASE("matrix conditional matches the row-wise one") {
    Rng rng(2);
    const auto p = random_params(5, 4, rng);
    Matrix data(6, 5);
    for (auto& x : data.data()) x = rng.uniform();
    const auto all = hidden_conditional(p, data);
    for (std::size_t n = 0; n < 6; ++n) {
        const auto row = hidden_conditional(p, data.row(n));
        for (std::size_t j = 0; j < 4; ++j) CHECK(all(n, j) == doctest::Approx(row[j]).epsilon(1e-14));
    }
}

TEST_CASE("sigmoid saturates without overflow") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1000.0) == 1.0);
    CHECK(sigmoid(-1000.0) == 0.0);
    CHECK(sigmoid(-745.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(-1e308)));
}

TEST_CASE("exact gradient matches central finite differences of the log-likelihood") {
    Rng rng(8);
    auto p = random_params(3, 2, rng, 0.7);
    Matrix data(5, 3);
    for (auto& x : data.data()) x = rng.bernoulli(0.4) ? 1.0 : 0.0;
    const auto g = exact_gradient(p, data);
    const double h = 1e-6;
    auto probe = [&](double& slot) {
        const double keep = slot;
        slot = keep + h;
        const double up = mean_log_likelihood(p, data);
        slot = keep - h;
        const double down = mean_log_likelihood(p, data);
        slot = keep;
        return (up - down) / (2 * h);
    };
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.visible_bias[i] == doctest::Approx(probe(p.visible_bias[i])).epsilon(1e-6));
    for (std::size_t j = 0; j < 2; ++j) CHECK(g.hidden_bias[j] == doctest::Approx(probe(p.hidden_bias[j])).epsilon(1e-6));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(g.weights(i, j) == doctest::Approx(probe(p.weights(i, j))).epsilon(1e-6));
        }
    }
}

TEST_CASE("long-chain CD averaged over many draws approaches the exact gradient") {
    Rng rng(31);
    const auto p = random_params(3, 2, rng, 0.5);
    Matrix data(4, 3);
    for (auto& x : data.data()) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const auto exact = exact_gradient(p, data);
    auto acc = Gradient::zeros(3, 2);
    const int draws = 4000;
    for (int d = 0; d < draws; ++d) {
        const auto g = cd_gradient(p, data, 20, rng).gradient;
        for (std::size_t i = 0; i < 3; ++i) acc.visible_bias[i] += g.visible_bias[i] / draws;
        for (std::size_t j = 0; j < 2; ++j) acc.hidden_bias[j] += g.hidden_bias[j] / draws;
        for (std::size_t k = 0; k < 6; ++k) acc.weights.data()[k] += g.weights.data()[k] / draws;
    }
    const double cosine = acc.dot(exact) / (acc.norm() * exact.norm());
    CHECK(cosine > 0.98);
}

TEST_CASE("CD is deterministic for a fixed stream") {
    Rng init(4);
    const auto p = random_params(4, 3, init);
    Matrix data(3, 4, 1.0);
    Rng a(99), b(99);
    const auto ga = cd_gradient(p, data, 1, a);
    const auto gb = cd_gradient(p, data, 1, b);
    CHECK(ga.gradient.weights == gb.gradient.weights);
    CHECK(ga.gradient.hidden_bias == gb.gradient.hidden_bias);
    CHECK(ga.hidden_probs == hidden_conditional(p, data));
}

TEST_CASE("enumeration refuses oversized layers") {
    RbmParams p(20, 5);
    try {
        (void)partition_function(p);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::enumeration_limit);
    }
    Matrix data(1, 20);
    CHECK_THROWS_AS(exact_gradient(p, data), Error);
}

TEST_CASE("dimension errors name the axis") {
    RbmParams p(3, 2);
    const Vector v{1.0, 0.0};
    try {
        (void)hidden_conditional(p, v);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
        CHECK(std::string(e.what()).find("visible axis") != std::string::npos);
    }
    const Vector h{1.0, 0.0, 1.0};
    try {
        (void)visible_conditional(p, h);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("hidden axis") != std::string::npos);
    }
}

TEST_CASE("reconstruction error follows the mean-field definition") {
    Rng rng(3);
    const auto p = random_params(3, 2, rng);
    Matrix data(2, 3);
    for (auto& x : data.data()) x = rng.uniform();
    double oracle = 0.0;
    for (std::size_t n = 0; n < 2; ++n) {
        const auto h = hidden_conditional(p, data.row(n));
        const auto v = visible_conditional(p, h);
        for (std::size_t i = 0; i < 3; ++i) oracle += (v[i] - data(n, i)) * (v[i] - data(n, i)) / 3.0;
    }
    CHECK(reconstruction_error(p, data) == doctest::Approx(oracle / 2.0).epsilon(1e-13));
}

TEST_CASE("train_epoch with zero learning rate is a no-op") {
    Rng rng(1);
    auto p = RbmParams::random(6, 4, rng);
    const auto before = p;
    Matrix data(10, 6);
    for (auto& x : data.data()) x = rng.uniform();
    BatchConfig cfg;
    cfg.batch_size = 5;
    cfg.learning_rate = 0.0;
    Rng train(2);
    const auto stats = train_epoch(p, data, cfg, train);
    CHECK(p == before);
    for (double d : stats.hidden_bias_delta) CHECK(d == 0.0);
    for (double d : stats.weight_distance) CHECK(d == 0.0);
}

TEST_CASE("epoch statistics report per-neuron movement") {
    Rng rng(6);
    auto p = RbmParams::random(5, 3, rng, 0.1);
    const auto before = p;
    Matrix data(20, 5);
    for (auto& x : data.data()) x = rng.bernoulli(0.3) ? 1.0 : 0.0;
    BatchConfig cfg;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.1;
    Rng train(7);
    const auto stats = train_epoch(p, data, cfg, train);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(stats.hidden_bias_delta[j] == doctest::Approx(std::abs(p.hidden_bias[j] - before.hidden_bias[j])));
        CHECK(stats.weight_distance[j] ==
              doctest::Approx(euclidean_distance(p.weights.column(j), before.weights.column(j))));
    }
    CHECK(stats.reconstruction_error == doctest::Approx(reconstruction_error(p, data)));
    CHECK(stats.mean_energy == doctest::Approx(mean_energy(p, data)));
}

TEST_CASE("batch configuration is validated") {
    BatchConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(10), Error);
    cfg.batch_size = 11;
    CHECK_THROWS_AS(cfg.validate(10), Error);
    cfg.batch_size = 10;
    cfg.cd_steps = 0;
    CHECK_THROWS_AS(cfg.validate(10), Error);
    cfg.cd_steps = 1;
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(10), Error);
    cfg.learning_rate = 0.01;
    CHECK_NOTHROW(cfg.validate(10));
}

TEST_CASE("parameter validation rejects non-finite entries") {
    RbmParams p(2, 2);
    CHECK_NOTHROW(p.validate());
    p.weights(1, 1) = std::nan("");
    CHECK_THROWS_AS(p.validate(), Error);
}
