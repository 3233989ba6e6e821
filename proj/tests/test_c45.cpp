#include "adbn/c45.hpp"
#include "adbn/error.hpp"
#include "adbn/rng.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"

using namespace adbn;
using namespace adbn::c45;

namespace {

// Quinlan's weather table: outlook, temperature, humidity, windy -> play.
Table weather() {
    Table t;
    t.schema.attributes = {{"outlook", AttributeKind::categorical, {"sunny", "overcast", "rain"}},
                           {"temperature", AttributeKind::continuous, {}},
                           {"humidity", AttributeKind::continuous, {}},
                           {"windy", AttributeKind::categorical, {"false", "true"}}};
    t.class_names = {"no", "yes"};
    const double rows[14][5] = {{0, 85, 85, 0, 0}, {0, 80, 90, 1, 0}, {1, 83, 86, 0, 1}, {2, 70, 96, 0, 1},
                                {2, 68, 80, 0, 1}, {2, 65, 70, 1, 0}, {1, 64, 65, 1, 1}, {0, 72, 95, 0, 0},
                                {0, 69, 70, 0, 1}, {2, 75, 80, 0, 1}, {0, 75, 70, 1, 1}, {1, 72, 90, 1, 1},
                                {1, 81, 75, 0, 1}, {2, 71, 91, 1, 0}};
    t.x = Matrix(14, 4);
    for (std::size_t r = 0; r < 14; ++r) {
        for (std::size_t a = 0; a < 4; ++a) t.x(r, a) = rows[r][a];
        t.y.push_back(static_cast<std::size_t>(rows[r][4]));
    }
    return t;
}

double oracle_entropy(const std::vector<double>& counts) {
    double n = 0.0, h = 0.0;
    for (double c : counts) n += c;
    for (double c : counts) {
        if (c > 0) h -= c / n * std::log2(c / n);
    }
    return h;
}

// Gain ratio computed from scratch over an explicit branch assignment.
double oracle_ratio(const Table& t, const std::vector<int>& branch_of_row) {
    std::map<int, std::vector<double>> branches;
    std::vector<double> parent(t.class_count(), 0.0);
    for (std::size_t r = 0; r < t.y.size(); ++r) {
        auto& b = branches[branch_of_row[r]];
        b.resize(t.class_count(), 0.0);
        b[t.y[r]] += 1;
        parent[t.y[r]] += 1;
    }
    const double n = static_cast<double>(t.y.size());
    double remainder = 0.0, split_info = 0.0;
    for (auto& [_, counts] : branches) {
        double m = 0.0;
        for (double c : counts) m += c;
        remainder += m / n * oracle_entropy(counts);
        split_info -= m / n * std::log2(m / n);
    }
    return (oracle_entropy(parent) - remainder) / split_info;
}

std::vector<std::size_t> all(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

DecisionNode leaf(std::vector<double> counts) {
    DecisionNode n;
    n.counts = std::move(counts);
    n.majority = static_cast<std::size_t>(std::max_element(n.counts.begin(), n.counts.end()) - n.counts.begin());
    return n;
}

DecisionNode cut(std::size_t attribute, double threshold, DecisionNode left, DecisionNode right) {
    DecisionNode n;
    n.counts.assign(left.counts.size(), 0.0);
    for (std::size_t k = 0; k < n.counts.size(); ++k) n.counts[k] = left.counts[k] + right.counts[k];
    n.majority = static_cast<std::size_t>(std::max_element(n.counts.begin(), n.counts.end()) - n.counts.begin());
    n.split = Split{attribute, AttributeKind::continuous, threshold};
    n.children = {std::move(left), std::move(right)};
    return n;
}

Table random_table(Rng& rng, std::size_t rows) {
    Table t;
    t.schema.attributes = {{"a", AttributeKind::continuous, {}},
                           {"b", AttributeKind::categorical, {"p", "q", "r", "s"}},
                           {"c", AttributeKind::continuous, {}}};
    t.class_names = {"x", "y", "z"};
    t.x = Matrix(rows, 3);
    for (std::size_t r = 0; r < rows; ++r) {
        t.x(r, 0) = std::round(rng.uniform() * 20) / 2;
        t.x(r, 1) = static_cast<double>(rng.below(3));  // level s never occurs
        t.x(r, 2) = rng.uniform();
        std::size_t y = t.x(r, 0) > 5 ? 1 : 0;
        if (t.x(r, 1) == 2 && t.x(r, 2) > 0.5) y = 2;
        if (rng.bernoulli(0.1)) y = rng.below(3);
        t.y.push_back(y);
    }
    return t;
}

// Upper confidence bound on the error rate from the exact binomial tail.
double binomial_upper(double n, double e, double cf) {
    auto tail = [&](double p) {
        double s = 0.0;
        for (int k = 0; k <= static_cast<int>(e); ++k) {
            s += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) + k * std::log(p) +
                          (n - k) * std::log1p(-p));
        }
        return s;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = (lo + hi) / 2;
        (tail(mid) > cf ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

TEST_CASE("entropy of the weather class distribution") {
    const std::vector<double> counts{9, 5};
    CHECK(entropy(counts) == doctest::Approx(0.9403).epsilon(1e-4 / 0.9403));
    CHECK(std::abs(entropy(counts) - oracle_entropy(counts)) < 1e-12);
    const std::vector<double> pure{4, 0};
    CHECK(entropy(pure) == 0.0);
}

TEST_CASE("weather gain ratios match the brute-force oracle") {
    const auto t = weather();
    const auto rows = all(14);
    std::vector<int> by_outlook;
    for (std::size_t r = 0; r < 14; ++r) by_outlook.push_back(static_cast<int>(t.x(r, 0)));
    const auto outlook = evaluate_split(t, rows, {0, AttributeKind::categorical, 0.0});
    CHECK(std::abs(outlook.ratio - oracle_ratio(t, by_outlook)) < 1e-6);
    CHECK(outlook.gain == doctest::Approx(0.2467).epsilon(1e-3));
    CHECK(outlook.split_info == doctest::Approx(1.577).epsilon(1e-3));

    for (std::size_t a : {1u, 2u}) {
        std::set<double> values;
        for (std::size_t r = 0; r < 14; ++r) values.insert(t.x(r, a));
        std::vector<double> v(values.begin(), values.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double thr = (v[k] + v[k + 1]) / 2;
            std::vector<int> side;
            for (std::size_t r = 0; r < 14; ++r) side.push_back(t.x(r, a) <= thr ? 0 : 1);
            const double got = gain_ratio(t, rows, {a, AttributeKind::continuous, thr});
            CHECK(std::abs(got - oracle_ratio(t, side)) < 1e-6);
        }
    }
}

TEST_CASE("weather root split is outlook") {
    const auto t = weather();
    const auto rows = all(14);
    const auto best = best_split(t, rows);
    REQUIRE(best.has_value());
    CHECK(best->attribute == 0);
    const auto tree = build_tree(t);
    REQUIRE_FALSE(tree.is_leaf());
    CHECK(tree.split->attribute == 0);
    for (std::size_t r = 0; r < 14; ++r) CHECK(classify(tree, t.schema, t.x.row(r)).class_index == t.y[r]);
}

TEST_CASE("best split agrees with an exhaustive search under the mean-gain floor") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const auto t = random_table(rng, 60);
        const auto rows = all(60);
        struct Cand {
            Split s;
            SplitScore score;
        };
        std::vector<Cand> cands;
        cands.push_back({{1, AttributeKind::categorical, 0.0}, evaluate_split(t, rows, {1, AttributeKind::categorical, 0.0})});
        for (std::size_t a : {0u, 2u}) {
            std::set<double> values;
            for (std::size_t r = 0; r < 60; ++r) values.insert(t.x(r, a));
            std::vector<double> v(values.begin(), values.end());
            for (std::size_t k = 0; k + 1 < v.size(); ++k) {
                const Split s{a, AttributeKind::continuous, (v[k] + v[k + 1]) / 2};
                std::size_t left = 0;
                for (std::size_t r = 0; r < 60; ++r) left += t.x(r, a) <= s.threshold;
                if (left < 2 || 60 - left < 2) continue;
                cands.push_back({s, evaluate_split(t, rows, s)});
            }
        }
        double mean_gain = 0.0;
        for (const auto& c : cands) mean_gain += c.score.gain / cands.size();
        const Cand* best = nullptr;
        for (const auto& c : cands) {
            if (c.score.gain + 1e-12 < mean_gain) continue;
            if (!best || c.score.ratio > best->score.ratio + 1e-12) best = &c;
        }
        const auto got = best_split(t, rows);
        REQUIRE(got.has_value());
        CHECK(evaluate_split(t, rows, *got).ratio == doctest::Approx(best->score.ratio).epsilon(1e-9));
    }
}

TEST_CASE("continuous thresholds sit at midpoints and respect min_leaf") {
    Table t;
    t.schema.attributes = {{"v", AttributeKind::continuous, {}}};
    t.class_names = {"a", "b"};
    t.x = Matrix::from_rows({{1}, {2}, {3}, {10}, {11}, {12}});
    t.y = {0, 0, 0, 1, 1, 1};
    const auto s = best_split(t, all(6));
    REQUIRE(s.has_value());
    CHECK(s->threshold == 6.5);
    t.x = Matrix::from_rows({{1}, {2}, {3}});
    t.y = {1, 0, 0};
    CHECK_FALSE(best_split(t, all(3), 2).has_value());
    CHECK(best_split(t, all(3), 1).has_value());
}

TEST_CASE("C4.5 added errors") {
    CHECK(added_errors(6, 0, 0.25) == doctest::Approx(6 * (1 - std::pow(0.25, 1.0 / 6))).epsilon(1e-12));
    for (double n : {6.0, 16.0, 40.0, 200.0}) {
        CHECK(added_errors(n, 0, 0.25) == doctest::Approx(n * binomial_upper(n, 0, 0.25)).epsilon(1e-6));
        for (double e : {1.0, 3.0}) {
            const double exact = n * binomial_upper(n, e, 0.25) - e;
            CHECK(added_errors(n, e, 0.25) == doctest::Approx(exact).epsilon(0.08));
        }
    }
    const double half = added_errors(10, 0.5, 0.25);
    CHECK(half > added_errors(10, 0, 0.25));
    CHECK(half < added_errors(10, 1, 0.25));
    CHECK_THROWS_AS(added_errors(10, 1, 0.0), Error);
}

TEST_CASE("pruning never raises the pessimistic error estimate") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto t = random_table(rng, 150);
        const auto tree = build_tree(t);
        const auto pruned = prune_tree(tree, 0.25);
        CHECK(pessimistic_errors(pruned, 0.25) <= pessimistic_errors(tree, 0.25) + 1e-9);
        CHECK(node_count(pruned) <= node_count(tree));
        CHECK(leaf_count(pruned) >= 1);
    }
}

TEST_CASE("an unpruned tree fits consistent training data") {
    Rng rng(6);
    auto t = random_table(rng, 80);
    for (std::size_t r = 0; r < 80; ++r) t.y[r] = t.x(r, 0) > 5 ? 1 : (t.x(r, 2) > 0.5 ? 2 : 0);
    const auto tree = build_tree(t, 1, 25);
    for (std::size_t r = 0; r < 80; ++r) CHECK(classify(tree, t.schema, t.x.row(r)).class_index == t.y[r]);
    CHECK(depth(tree) <= 25);
    const auto shallow = build_tree(t, 1, 1);
    CHECK(depth(shallow) <= 1);
}

TEST_CASE("rules partition the input space and agree with the tree") {
    Rng rng(9);
    const auto t = random_table(rng, 200);
    const auto tree = build_tree(t);
    const auto rules = tree_to_rules(tree, t.schema, t.class_names);
    CHECK(rules.rules.size() >= leaf_count(tree));
    Rng probe(10);
    for (int k = 0; k < 500; ++k) {
        const Vector s{probe.uniform(-2, 12), static_cast<double>(probe.below(4)), probe.uniform(-0.2, 1.2)};
        std::size_t matched = 0;
        for (const auto& r : rules.rules) matched += r.matches(s);
        CHECK(matched == 1);
        CHECK(rules.classify(s).class_index == classify(tree, t.schema, s).class_index);
    }
}

TEST_CASE("continuous tests along a path collapse to one interval") {
    Table t;
    t.schema.attributes = {{"v", AttributeKind::continuous, {}}};
    t.class_names = {"a", "b"};
    auto tree = cut(0, 10, cut(0, 5, leaf({3, 0}), cut(0, 8, leaf({0, 3}), leaf({3, 0}))), leaf({0, 4}));
    const auto rules = tree_to_rules(tree, t.schema, t.class_names);
    REQUIRE(rules.rules.size() == 4);
    const auto& mid = rules.rules[1];
    REQUIRE(mid.conditions.size() == 2);
    CHECK(format_condition(mid.conditions[0], t.schema) == "v > 5");
    CHECK(format_condition(mid.conditions[1], t.schema) == "v <= 8");
}

TEST_CASE("rule sets survive a JSON round trip") {
    Rng rng(12);
    const auto t = random_table(rng, 120);
    const auto rules = tree_to_rules(build_tree(t), t.schema, t.class_names);
    const auto back = RuleSet::from_json(rules.to_json());
    CHECK(back.to_json() == rules.to_json());
    CHECK(back.mentioned_attributes() == rules.mentioned_attributes());
    const auto text = format_rules(rules);
    CHECK(text.find("IF ") != std::string::npos);
    CHECK(text.find("THEN ") != std::string::npos);
}

TEST_CASE("tree text follows the C4.5 listing layout") {
    AttributeSchema schema;
    schema.attributes = {{"gamma_gtp", AttributeKind::continuous, {}},
                         {"age", AttributeKind::continuous, {}},
                         {"plt", AttributeKind::continuous, {}}};
    const std::vector<std::string> classes{"3", "5", "6"};
    const auto right = cut(1, 50, leaf({0, 0, 10}), cut(2, 18, leaf({0, 3, 0}), leaf({13, 0, 0})));
    const auto tree = cut(0, 78, leaf({4, 1, 0}), right);
    const std::string expected =
        "gamma_gtp <= 78 : 3 (5.0/1.0)\n"
        "gamma_gtp > 78 :\n"
        "|   age <= 50 : 6 (10.0)\n"
        "|   age > 50 :\n"
        "|   |   plt <= 18 : 5 (3.0)\n"
        "|   |   plt > 18 : 3 (13.0)\n";
    CHECK(format_tree(tree, schema, classes) == expected);
}

TEST_CASE("samples encode by attribute name") {
    const auto t = weather();
    const auto v = encode_sample(t.schema, {{"outlook", "rain"}, {"temperature", "70"}, {"humidity", "96"}, {"windy", "false"}});
    CHECK(v == Vector{2, 70, 96, 0});
    CHECK_THROWS_AS(encode_sample(t.schema, {{"outlook", "fog"}, {"temperature", "70"}, {"humidity", "96"}, {"windy", "false"}}),
                    Error);
    CHECK_THROWS_AS(encode_sample(t.schema, {{"outlook", "rain"}}), Error);
}

TEST_CASE("a categorical level without a branch falls back to the node majority") {
    Rng rng(14);
    const auto t = random_table(rng, 200);
    const auto tree = build_tree(t);
    const Vector unseen{3.0, 3.0, 0.9};
    const auto c = classify(tree, t.schema, unseen);
    CHECK(c.class_index < 3);
}
