#include "adbn/error.hpp"
#include "adbn/finetune.hpp"

#include <cmath>

#include "doctest.h"

using namespace adbn;

namespace {

ActivationTrace trace(bool correct, std::vector<bool> fired) {
    ActivationTrace t;
    t.correct = correct;
    t.fired = {std::move(fired)};
    return t;
}

// One layer, two hidden units; h0 follows x0, h1 follows x1. The head reads h0.
DbnModel detector_model() {
    DbnModel m;
    RbmParams p(2, 2);
    p.weights(0, 0) = 12.0;
    p.weights(1, 1) = 12.0;
    p.hidden_bias = {-6.0, -6.0};
    m.layers.push_back(p);
    m.head.weights = Matrix(2, 2);
    m.head.weights(1, 0) = 8.0;
    m.head.weights(0, 1) = 0.0;
    m.head.bias = {4.0, 0.0};
    m.class_labels = {"neg", "pos"};
    return m;
}

}  // namespace

TEST_CASE("ratios count exclusive firing over all samples") {
    std::vector<ActivationTrace> ts;
    for (int i = 0; i < 8; ++i) ts.push_back(trace(true, {true, true}));
    for (int i = 0; i < 2; ++i) ts.push_back(trace(false, {false, i == 0}));
    const auto r = neuron_discrimination_ratios(ts, 0);
    CHECK(r.correct[0] == doctest::Approx(0.8));
    CHECK(r.wrong[0] == 0.0);
    CHECK(r.correct[1] == 0.0);
    CHECK(r.wrong[1] == 0.0);
}

TEST_CASE("ratios match a direct count on random traces") {
    Rng rng(3);
    std::vector<ActivationTrace> ts;
    for (int n = 0; n < 40; ++n) {
        std::vector<bool> f(6);
        for (std::size_t j = 0; j < 6; ++j) f[j] = rng.bernoulli(j < 3 ? 0.05 : 0.5);
        ts.push_back(trace(rng.bernoulli(0.7), f));
    }
    const auto r = neuron_discrimination_ratios(ts, 0);
    for (std::size_t j = 0; j < 6; ++j) {
        double t = 0, f = 0;
        for (const auto& s : ts) {
            if (s.fired[0][j]) (s.correct ? t : f) += 1;
        }
        CHECK(r.correct[j] == doctest::Approx(f == 0 ? t / 40 : 0.0));
        CHECK(r.wrong[j] == doctest::Approx(t == 0 ? f / 40 : 0.0));
        CHECK((r.correct[j] == 0.0 || r.wrong[j] == 0.0));
    }
    CHECK_THROWS_AS(neuron_discrimination_ratios(std::vector<ActivationTrace>{}, 0), Error);
}

TEST_CASE("traces agree with an independent forward recomputation") {
    const auto m = detector_model();
    const Matrix x = Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}, {0.5, 0.5}, {0.8, 0.8}});
    const std::vector<std::size_t> y{1, 0, 1, 0};
    const auto ts = trace_activations(m, x, y, 0.5);
    REQUIRE(ts.size() == 4);
    for (std::size_t n = 0; n < 4; ++n) {
        const auto fr = forward(m, x.row(n));
        CHECK(ts[n].sample == n);
        CHECK(ts[n].correct == (predict(m, x.row(n)).class_index == y[n]));
        for (std::size_t j = 0; j < 2; ++j) CHECK(ts[n].fired[0][j] == (fr.activations[1][j] >= 0.5));
    }
    // x = 0.5 gives an activation of exactly 0.5, which counts as fired.
    CHECK(ts[2].fired[0][0]);
    const std::vector<std::size_t> short_y{1};
    CHECK_THROWS_AS(trace_activations(m, x, short_y, 0.5), Error);
}

TEST_CASE("a perfect model has no wrong population") {
    const auto m = detector_model();
    const Matrix x = Matrix::from_rows({{0.9, 0.1}, {0.1, 0.2}});
    const std::vector<std::size_t> y{1, 0};
    for (const auto& t : trace_activations(m, x, y, 0.5)) CHECK(t.correct);
}

TEST_CASE("patching rewrites only qualifying incoming columns") {
    auto m = detector_model();
    const auto before = m;
    FineTuneConfig cfg;
    cfg.theta_t = 1.0;
    cfg.theta_f = 1.0;
    DiscriminationRatios none{{0.5, 0.0}, {0.0, 0.4}};
    CHECK(patch_layer(m, 0, none, cfg).empty());
    CHECK(m.layers == before.layers);

    cfg.theta_t = 0.3;
    cfg.w_correct = 1.0;
    DiscriminationRatios one{{0.5, 0.0}, {0.0, 0.2}};
    const auto patches = patch_layer(m, 0, one, cfg);
    REQUIRE(patches.size() == 1);
    CHECK(patches[0].neuron == 0);
    CHECK(patches[0].kind == PatchKind::correct);
    CHECK(patches[0].prior_norm == doctest::Approx(12.0));
    CHECK(m.layers[0].weights.column(0) == Vector{1.0, 1.0});
    CHECK(m.layers[0].weights.column(1) == before.layers[0].weights.column(1));
    CHECK(m.layers[0].hidden_bias == before.layers[0].hidden_bias);
    CHECK(m.layers[0].visible_bias == before.layers[0].visible_bias);

    cfg.theta_f = 0.3;
    DiscriminationRatios both{{0.5, 0.0}, {0.5, 0.0}};
    CHECK_THROWS_AS(patch_layer(m, 0, both, cfg), Error);
    cfg.layers_to_patch = {1};
    CHECK_THROWS_AS(patch_layer(m, 0, one, cfg), Error);
}

TEST_CASE("fine tuning silences a wrong-only detector") {
    auto m = detector_model();
    // h1 pushes towards class 0 while the label is x0 > 0.5; it fires only on wrong samples.
    m.head.weights(0, 1) = 20.0;
    Matrix x(40, 2);
    std::vector<std::size_t> y;
    Rng rng(1);
    for (std::size_t n = 0; n < 40; ++n) {
        x(n, 0) = n % 2 ? 0.9 : 0.1;
        x(n, 1) = n % 10 == 5 ? 0.95 : rng.uniform(0.0, 0.3);
        y.push_back(x(n, 0) > 0.5 ? 1 : 0);
    }
    FineTuneConfig cfg;
    cfg.theta_t = 1.0;
    cfg.theta_f = 0.05;
    cfg.w_wrong = 0.0;
    auto patched = m;
    const auto report = fine_tune(patched, x, y, cfg);
    bool silenced = false;
    for (const auto& p : report.patches) silenced |= p.neuron == 1 && p.kind == PatchKind::wrong;
    CHECK(silenced);
    CHECK(patched.layers[0].weights.column(1) == Vector{0.0, 0.0});
    CHECK(report.accuracy_after >= report.accuracy_before);
    CHECK(report.accuracy_before == doctest::Approx(accuracy(m, x, y)));

    auto replayed = m;
    apply_patches(replayed, report.patches);
    CHECK(replayed.layers == patched.layers);
    const auto back = PatchReport::from_json(report.to_json());
    CHECK(back.to_json() == report.to_json());
    CHECK(report.to_text().find("accuracy before") != std::string::npos);
}

TEST_CASE("fine-tune configuration is validated") {
    FineTuneConfig cfg;
    cfg.theta_t = 1.5;
    CHECK_THROWS_AS(cfg.validate(1), Error);
    cfg.theta_t = 0.5;
    cfg.firing_threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(1), Error);
    cfg.firing_threshold = 0.5;
    cfg.layers_to_patch = {3};
    CHECK_THROWS_AS(cfg.validate(2), Error);
}
