#include "adbn/c45.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace adbn::c45 {

namespace {

constexpr double kEps = 1e-12;

std::vector<double> class_counts(const Table& t, std::span<const std::size_t> rows) {
    std::vector<double> counts(t.class_count(), 0.0);
    for (auto r : rows) counts[t.y[r]] += 1.0;
    return counts;
}

std::size_t argmax(std::span<const double> counts) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[best]) best = k;
    }
    return best;
}

std::size_t nonzero_classes(std::span<const double> counts) {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
}

std::string format_value(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_count(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::vector<std::vector<double>> categorical_branches(const Table& t, std::span<const std::size_t> rows,
                                                      std::size_t attribute, std::vector<std::size_t>* levels) {
    std::map<std::size_t, std::vector<double>> by_level;
    for (auto r : rows) {
        const auto level = static_cast<std::size_t>(t.x(r, attribute));
        auto& counts = by_level[level];
        if (counts.empty()) counts.assign(t.class_count(), 0.0);
        counts[t.y[r]] += 1.0;
    }
    std::vector<std::vector<double>> out;
    for (auto& [level, counts] : by_level) {
        if (levels) levels->push_back(level);
        out.push_back(std::move(counts));
    }
    return out;
}

// Two-point interpolation table of normal deviates used by C4.5 for the
// pessimistic error bound.
double confidence_coefficient(double cf) {
    static constexpr double val[] = {0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00};
    static constexpr double dev[] = {4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00};
    std::size_t i = 0;
    while (i < std::size(val) - 1 && cf > val[i]) ++i;
    if (i == 0) return dev[0] * dev[0];
    const double z = dev[i - 1] + (dev[i] - dev[i - 1]) * (cf - val[i - 1]) / (val[i] - val[i - 1]);
    return z * z;
}

struct RowOrder {
    const Matrix* x;
    std::size_t attribute;
    bool operator()(std::size_t a, std::size_t b) const { return (*x)(a, attribute) < (*x)(b, attribute); }
};

}  // namespace

std::optional<std::size_t> AttributeSchema::index_of(const std::string& name) const {
    for (std::size_t a = 0; a < attributes.size(); ++a) {
        if (attributes[a].name == name) return a;
    }
    return std::nullopt;
}

void AttributeSchema::validate() const {
    std::set<std::string> names;
    for (const auto& a : attributes) {
        require(names.insert(a.name).second, ErrorCode::invalid_argument, "duplicate attribute name '" + a.name + "'");
        if (a.kind == AttributeKind::categorical) {
            require(!a.values.empty(), ErrorCode::invalid_argument,
                    "categorical attribute '" + a.name + "' has no values");
        }
    }
}

void Table::validate() const {
    schema.validate();
    require(x.cols() == schema.size(), ErrorCode::schema_mismatch,
            "table has " + std::to_string(x.cols()) + " columns but schema declares " +
                std::to_string(schema.size()) + " attributes");
    require(y.size() == x.rows(), ErrorCode::dimension_mismatch, "label count differs from row count");
    require(class_count() >= 1, ErrorCode::invalid_argument, "no class names");
    for (std::size_t r = 0; r < x.rows(); ++r) {
        require(y[r] < class_count(), ErrorCode::invalid_argument, "label out of range at row " + std::to_string(r));
        for (std::size_t a = 0; a < schema.size(); ++a) {
            if (schema.attributes[a].kind != AttributeKind::categorical) continue;
            const double v = x(r, a);
            require(v >= 0 && v < static_cast<double>(schema.attributes[a].values.size()) && v == std::floor(v),
                    ErrorCode::invalid_argument,
                    "row " + std::to_string(r) + ": invalid level index for '" + schema.attributes[a].name + "'");
        }
    }
}

double entropy(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
        require(c >= 0.0, ErrorCode::invalid_argument, "entropy: negative class count");
        total += c;
    }
    require(total > 0.0, ErrorCode::invalid_argument, "entropy: all class counts are zero");
    double h = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;
        const double p = c / total;
        h -= p * std::log2(p);
    }
    return h;
}

SplitScore score_partition(const std::vector<std::vector<double>>& branch_counts) {
    require(!branch_counts.empty(), ErrorCode::invalid_argument, "partition has no branches");
    std::vector<double> parent(branch_counts.front().size(), 0.0);
    std::vector<double> sizes;
    for (const auto& b : branch_counts) {
        require(b.size() == parent.size(), ErrorCode::dimension_mismatch, "branch class-count lengths differ");
        double n = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            parent[k] += b[k];
            n += b[k];
        }
        sizes.push_back(n);
    }
    const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    require(total > 0.0, ErrorCode::invalid_argument, "partition is empty");

    SplitScore s;
    double remainder = 0.0;
    for (std::size_t b = 0; b < branch_counts.size(); ++b) {
        if (sizes[b] <= 0.0) continue;
        const double w = sizes[b] / total;
        remainder += w * entropy(branch_counts[b]);
        s.split_info -= w * std::log2(w);
    }
    s.gain = std::max(0.0, entropy(parent) - remainder);
    s.ratio = s.split_info > kEps ? s.gain / s.split_info : 0.0;
    return s;
}

SplitScore evaluate_split(const Table& table, std::span<const std::size_t> rows, const Split& split) {
    require(split.attribute < table.schema.size(), ErrorCode::invalid_argument, "split attribute out of range");
    require(split.kind == table.schema.attributes[split.attribute].kind, ErrorCode::invalid_argument,
            "split kind does not match attribute '" + table.schema.attributes[split.attribute].name + "'");
    if (split.kind == AttributeKind::categorical) {
        return score_partition(categorical_branches(table, rows, split.attribute, nullptr));
    }
    std::vector<std::vector<double>> branches(2, std::vector<double>(table.class_count(), 0.0));
    for (auto r : rows) branches[table.x(r, split.attribute) <= split.threshold ? 0 : 1][table.y[r]] += 1.0;
    return score_partition(branches);
}

double gain_ratio(const Table& table, std::span<const std::size_t> rows, const Split& split) {
    return evaluate_split(table, rows, split).ratio;
}

std::optional<Split> best_split(const Table& table, std::span<const std::size_t> rows, std::size_t min_leaf,
                                const std::vector<bool>& used_categorical) {
    if (rows.empty()) return std::nullopt;
    const auto parent = class_counts(table, rows);
    if (nonzero_classes(parent) <= 1) return std::nullopt;
    const std::size_t floor_leaf = std::max<std::size_t>(min_leaf, 1);

    struct Candidate {
        Split split;
        SplitScore score;
    };
    std::vector<Candidate> candidates;

    for (std::size_t a = 0; a < table.schema.size(); ++a) {
        const auto& attr = table.schema.attributes[a];
        if (attr.kind == AttributeKind::categorical) {
            if (a < used_categorical.size() && used_categorical[a]) continue;
            auto branches = categorical_branches(table, rows, a, nullptr);
            const auto big = std::count_if(branches.begin(), branches.end(), [&](const auto& b) {
                return std::accumulate(b.begin(), b.end(), 0.0) >= static_cast<double>(floor_leaf);
            });
            if (big < 2) continue;
            candidates.push_back({{a, AttributeKind::categorical, 0.0}, score_partition(branches)});
            continue;
        }

        std::vector<std::size_t> order(rows.begin(), rows.end());
        std::stable_sort(order.begin(), order.end(), RowOrder{&table.x, a});
        std::vector<std::vector<double>> branches(2, parent);
        std::fill(branches[0].begin(), branches[0].end(), 0.0);
        const std::size_t n = order.size();
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto cls = table.y[order[k]];
            branches[0][cls] += 1.0;
            branches[1][cls] -= 1.0;
            const double here = table.x(order[k], a);
            const double next = table.x(order[k + 1], a);
            if (here == next) continue;
            if (k + 1 < floor_leaf || n - k - 1 < floor_leaf) continue;
            const double threshold = here + (next - here) / 2.0;
            candidates.push_back({{a, AttributeKind::continuous, threshold}, score_partition(branches)});
        }
    }
    if (candidates.empty()) return std::nullopt;

    double mean_gain = 0.0;
    for (const auto& c : candidates) mean_gain += c.score.gain;
    mean_gain /= static_cast<double>(candidates.size());

    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
        if (c.score.gain <= kEps || c.score.gain < mean_gain - kEps) continue;
        if (!best || c.score.ratio > best->score.ratio + kEps) best = &c;
    }
    if (!best) return std::nullopt;
    return best->split;
}

double DecisionNode::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

double DecisionNode::errors() const { return counts.empty() ? 0.0 : total() - counts[majority]; }

namespace {

DecisionNode grow(const Table& t, std::vector<std::size_t> rows, std::size_t depth_here, std::size_t min_leaf,
                  std::size_t max_depth, std::vector<bool> used) {
    DecisionNode node;
    node.counts = class_counts(t, rows);
    node.majority = argmax(node.counts);

    if (nonzero_classes(node.counts) <= 1 || depth_here >= max_depth || rows.size() < 2 * std::max<std::size_t>(min_leaf, 1)) {
        return node;
    }
    auto split = best_split(t, rows, min_leaf, used);
    if (!split) return node;

    node.split = split;
    if (split->kind == AttributeKind::continuous) {
        std::vector<std::size_t> left, right;
        for (auto r : rows) (t.x(r, split->attribute) <= split->threshold ? left : right).push_back(r);
        node.children.push_back(grow(t, std::move(left), depth_here + 1, min_leaf, max_depth, used));
        node.children.push_back(grow(t, std::move(right), depth_here + 1, min_leaf, max_depth, used));
    } else {
        used[split->attribute] = true;
        std::map<std::size_t, std::vector<std::size_t>> parts;
        for (auto r : rows) parts[static_cast<std::size_t>(t.x(r, split->attribute))].push_back(r);
        for (auto& [level, part] : parts) {
            node.branch_values.push_back(level);
            node.children.push_back(grow(t, std::move(part), depth_here + 1, min_leaf, max_depth, used));
        }
    }
    return node;
}

}  // namespace

DecisionNode build_tree(const Table& table, std::size_t min_leaf, std::size_t max_depth) {
    std::vector<std::size_t> rows(table.x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return build_tree(table, rows, min_leaf, max_depth);
}

DecisionNode build_tree(const Table& table, std::span<const std::size_t> rows, std::size_t min_leaf,
                        std::size_t max_depth) {
    table.validate();
    require(!rows.empty(), ErrorCode::invalid_argument, "cannot build a tree from zero rows");
    return grow(table, {rows.begin(), rows.end()}, 0, min_leaf, max_depth,
                std::vector<bool>(table.schema.size(), false));
}

double added_errors(double n, double e, double confidence) {
    require(confidence > 0.0 && confidence < 1.0, ErrorCode::invalid_argument,
            "pruning confidence must lie in (0, 1)");
    if (n <= 0.0) return 0.0;
    if (e < 1e-6) return n * (1.0 - std::exp(std::log(confidence) / n));
    if (e < 0.9999) {
        const double v0 = n * (1.0 - std::exp(std::log(confidence) / n));
        return v0 + e * (added_errors(n, 1.0, confidence) - v0);
    }
    if (e + 0.5 >= n) return 0.67 * (n - e);
    const double coeff = confidence_coefficient(confidence);
    const double pr = (e + 0.5 + coeff / 2.0 + std::sqrt(coeff * ((e + 0.5) * (1.0 - (e + 0.5) / n) + coeff / 4.0))) /
                      (n + coeff);
    return n * pr - e;
}

double pessimistic_errors(const DecisionNode& node, double confidence) {
    if (node.is_leaf()) return node.errors() + added_errors(node.total(), node.errors(), confidence);
    double sum = 0.0;
    for (const auto& child : node.children) sum += pessimistic_errors(child, confidence);
    return sum;
}

DecisionNode prune_tree(DecisionNode node, double confidence) {
    if (node.is_leaf()) return node;
    for (auto& child : node.children) child = prune_tree(std::move(child), confidence);
    const double as_leaf = node.errors() + added_errors(node.total(), node.errors(), confidence);
    if (as_leaf <= pessimistic_errors(node, confidence) + kEps) {
        node.split.reset();
        node.children.clear();
        node.branch_values.clear();
    }
    return node;
}

std::size_t node_count(const DecisionNode& node) {
    std::size_t n = 1;
    for (const auto& c : node.children) n += node_count(c);
    return n;
}

std::size_t leaf_count(const DecisionNode& node) {
    if (node.is_leaf()) return 1;
    std::size_t n = 0;
    for (const auto& c : node.children) n += leaf_count(c);
    return n;
}

std::size_t depth(const DecisionNode& node) {
    std::size_t d = 0;
    for (const auto& c : node.children) d = std::max(d, depth(c) + 1);
    return d;
}

Classification classify(const DecisionNode& tree, const AttributeSchema& schema, std::span<const double> sample) {
    require(sample.size() == schema.size(), ErrorCode::dimension_mismatch,
            "sample has " + std::to_string(sample.size()) + " attributes, schema has " + std::to_string(schema.size()));
    const DecisionNode* node = &tree;
    while (!node->is_leaf()) {
        const auto& s = *node->split;
        const double v = sample[s.attribute];
        if (s.kind == AttributeKind::continuous) {
            node = &node->children[v <= s.threshold ? 0 : 1];
            continue;
        }
        auto it = std::find(node->branch_values.begin(), node->branch_values.end(), static_cast<std::size_t>(v));
        if (it == node->branch_values.end() || v < 0) break;
        node = &node->children[static_cast<std::size_t>(it - node->branch_values.begin())];
    }
    const double total = node->total();
    return {node->majority, total > 0 ? node->counts[node->majority] / total : 0.0};
}

bool Condition::holds(std::span<const double> sample) const {
    const double v = sample[attribute];
    switch (op) {
    case Comparator::less_equal: return v <= value;
    case Comparator::greater: return v > value;
    case Comparator::equal: return v == value;
    case Comparator::not_in:
        return std::none_of(excluded.begin(), excluded.end(), [&](std::size_t l) { return v == static_cast<double>(l); });
    }
    return false;
}

bool Rule::matches(std::span<const double> sample) const {
    return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(sample); });
}

Classification RuleSet::classify(std::span<const double> sample) const {
    require(sample.size() == schema.size(), ErrorCode::dimension_mismatch,
            "sample has " + std::to_string(sample.size()) + " attributes, schema has " + std::to_string(schema.size()));
    for (const auto& r : rules) {
        if (r.matches(sample)) return {r.consequent, r.confidence};
    }
    fail(ErrorCode::invalid_argument, "no rule covers the sample");
}

std::vector<std::size_t> RuleSet::mentioned_attributes() const {
    std::set<std::size_t> out;
    for (const auto& r : rules)
        for (const auto& c : r.conditions) out.insert(c.attribute);
    return {out.begin(), out.end()};
}

namespace {

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct PathState {
    std::vector<std::size_t> order;  // attributes in first-test order
    std::map<std::size_t, Bounds> bounds;
    std::map<std::size_t, Condition> categorical;
};

std::vector<Condition> path_conditions(const PathState& path) {
    std::vector<Condition> out;
    for (auto a : path.order) {
        if (auto it = path.categorical.find(a); it != path.categorical.end()) {
            out.push_back(it->second);
            continue;
        }
        const auto& b = path.bounds.at(a);
        if (std::isfinite(b.lo)) out.push_back({a, Comparator::greater, b.lo, {}});
        if (std::isfinite(b.hi)) out.push_back({a, Comparator::less_equal, b.hi, {}});
    }
    return out;
}

void collect_rules(const DecisionNode& node, const AttributeSchema& schema, PathState path, std::vector<Rule>& out) {
    if (node.is_leaf()) {
        const double total = node.total();
        out.push_back({path_conditions(path), node.majority, total,
                       total > 0 ? node.counts[node.majority] / total : 0.0});
        return;
    }
    const auto& s = *node.split;
    const bool first = std::find(path.order.begin(), path.order.end(), s.attribute) == path.order.end();
    if (first) path.order.push_back(s.attribute);

    if (s.kind == AttributeKind::continuous) {
        PathState left = path, right = path;
        auto& lb = left.bounds[s.attribute];
        lb.hi = std::min(lb.hi, s.threshold);
        auto& rb = right.bounds[s.attribute];
        rb.lo = std::max(rb.lo, s.threshold);
        collect_rules(node.children[0], schema, std::move(left), out);
        collect_rules(node.children[1], schema, std::move(right), out);
        return;
    }
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        PathState branch = path;
        branch.categorical[s.attribute] = {s.attribute, Comparator::equal, static_cast<double>(node.branch_values[k]), {}};
        collect_rules(node.children[k], schema, std::move(branch), out);
    }
    if (node.branch_values.size() < schema.attributes[s.attribute].values.size()) {
        PathState rest = path;
        rest.categorical[s.attribute] = {s.attribute, Comparator::not_in, 0.0, node.branch_values};
        const double total = node.total();
        out.push_back({path_conditions(rest), node.majority, 0.0,
                       total > 0 ? node.counts[node.majority] / total : 0.0});
    }
}

}  // namespace

RuleSet tree_to_rules(const DecisionNode& tree, const AttributeSchema& schema,
                      const std::vector<std::string>& class_names) {
    RuleSet rs;
    rs.schema = schema;
    rs.class_names = class_names;
    collect_rules(tree, schema, {}, rs.rules);
    return rs;
}

std::string format_condition(const Condition& c, const AttributeSchema& schema) {
    const auto& attr = schema.attributes.at(c.attribute);
    switch (c.op) {
    case Comparator::less_equal: return attr.name + " <= " + format_value(c.value);
    case Comparator::greater: return attr.name + " > " + format_value(c.value);
    case Comparator::equal: return attr.name + " = " + attr.values.at(static_cast<std::size_t>(c.value));
    case Comparator::not_in: {
        std::string s = attr.name + " not in {";
        for (std::size_t k = 0; k < c.excluded.size(); ++k) s += (k ? ", " : "") + attr.values.at(c.excluded[k]);
        return s + "}";
    }
    }
    return {};
}

namespace {

std::string leaf_text(const DecisionNode& leaf, const std::vector<std::string>& class_names) {
    std::string s = class_names.at(leaf.majority) + " (" + format_count(leaf.total());
    if (leaf.errors() > 0) s += "/" + format_count(leaf.errors());
    return s + ")";
}

void write_tree(std::ostringstream& os, const DecisionNode& node, const AttributeSchema& schema,
                const std::vector<std::string>& class_names, std::size_t level) {
    const auto& s = *node.split;
    const auto& attr = schema.attributes[s.attribute];
    for (std::size_t k = 0; k < node.children.size(); ++k) {
        for (std::size_t l = 0; l < level; ++l) os << "|   ";
        if (s.kind == AttributeKind::continuous) {
            os << attr.name << (k == 0 ? " <= " : " > ") << format_value(s.threshold) << " :";
        } else {
            os << attr.name << " = " << attr.values.at(node.branch_values[k]) << " :";
        }
        const auto& child = node.children[k];
        if (child.is_leaf()) {
            os << ' ' << leaf_text(child, class_names) << '\n';
        } else {
            os << '\n';
            write_tree(os, child, schema, class_names, level + 1);
        }
    }
}

Comparator comparator_from(const std::string& s) {
    if (s == "<=") return Comparator::less_equal;
    if (s == ">") return Comparator::greater;
    if (s == "=") return Comparator::equal;
    if (s == "not_in") return Comparator::not_in;
    fail(ErrorCode::format_error, "unknown comparator '" + s + "'");
}

std::string comparator_name(Comparator c) {
    switch (c) {
    case Comparator::less_equal: return "<=";
    case Comparator::greater: return ">";
    case Comparator::equal: return "=";
    case Comparator::not_in: return "not_in";
    }
    return "?";
}

}  // namespace

std::string format_tree(const DecisionNode& tree, const AttributeSchema& schema,
                        const std::vector<std::string>& class_names) {
    if (tree.is_leaf()) return leaf_text(tree, class_names) + "\n";
    std::ostringstream os;
    write_tree(os, tree, schema, class_names, 0);
    return os.str();
}

std::string format_rules(const RuleSet& rules) {
    std::ostringstream os;
    for (std::size_t k = 0; k < rules.rules.size(); ++k) {
        const auto& r = rules.rules[k];
        os << "Rule " << (k + 1) << ":\n";
        if (r.conditions.empty()) {
            os << "    IF (always)\n";
        }
        for (std::size_t c = 0; c < r.conditions.size(); ++c) {
            os << (c == 0 ? "    IF " : "    AND ") << format_condition(r.conditions[c], rules.schema) << '\n';
        }
        char stats[96];
        std::snprintf(stats, sizeof(stats), "  [support %.0f, confidence %.3f]", r.support, r.confidence);
        os << "    THEN " << rules.class_names.at(r.consequent) << stats << "\n\n";
    }
    return os.str();
}

nlohmann::json RuleSet::to_json() const {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : schema.attributes) {
        nlohmann::json j{{"name", a.name}, {"kind", a.kind == AttributeKind::continuous ? "continuous" : "categorical"}};
        if (a.kind == AttributeKind::categorical) j["values"] = a.values;
        attrs.push_back(std::move(j));
    }
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rules) {
        nlohmann::json conds = nlohmann::json::array();
        for (const auto& c : r.conditions) {
            nlohmann::json cj{{"attribute", schema.attributes.at(c.attribute).name}, {"op", comparator_name(c.op)}};
            if (c.op == Comparator::not_in) {
                std::vector<std::string> names;
                for (auto l : c.excluded) names.push_back(schema.attributes[c.attribute].values.at(l));
                cj["values"] = names;
            } else if (c.op == Comparator::equal) {
                cj["value"] = schema.attributes[c.attribute].values.at(static_cast<std::size_t>(c.value));
            } else {
                cj["value"] = c.value;
            }
            conds.push_back(std::move(cj));
        }
        rs.push_back({{"conditions", conds}, {"class", class_names.at(r.consequent)},
                      {"support", r.support}, {"confidence", r.confidence}});
    }
    return {{"attributes", attrs}, {"classes", class_names}, {"rules", rs}};
}

RuleSet RuleSet::from_json(const nlohmann::json& j) {
    RuleSet out;
    try {
        for (const auto& aj : j.at("attributes")) {
            Attribute a;
            a.name = aj.at("name").get<std::string>();
            a.kind = aj.at("kind").get<std::string>() == "continuous" ? AttributeKind::continuous
                                                                      : AttributeKind::categorical;
            if (a.kind == AttributeKind::categorical) a.values = aj.at("values").get<std::vector<std::string>>();
            out.schema.attributes.push_back(std::move(a));
        }
        out.class_names = j.at("classes").get<std::vector<std::string>>();
        auto level_of = [&](std::size_t attr, const std::string& v) {
            const auto& vals = out.schema.attributes.at(attr).values;
            auto it = std::find(vals.begin(), vals.end(), v);
            require(it != vals.end(), ErrorCode::format_error, "rule refers to unknown level '" + v + "'");
            return static_cast<std::size_t>(it - vals.begin());
        };
        for (const auto& rj : j.at("rules")) {
            Rule r;
            for (const auto& cj : rj.at("conditions")) {
                Condition c;
                auto idx = out.schema.index_of(cj.at("attribute").get<std::string>());
                require(idx.has_value(), ErrorCode::format_error, "rule refers to unknown attribute");
                c.attribute = *idx;
                c.op = comparator_from(cj.at("op").get<std::string>());
                if (c.op == Comparator::not_in) {
                    for (const auto& v : cj.at("values")) c.excluded.push_back(level_of(c.attribute, v.get<std::string>()));
                } else if (c.op == Comparator::equal) {
                    c.value = static_cast<double>(level_of(c.attribute, cj.at("value").get<std::string>()));
                } else {
                    c.value = cj.at("value").get<double>();
                }
                r.conditions.push_back(std::move(c));
            }
            const auto cls = rj.at("class").get<std::string>();
            auto it = std::find(out.class_names.begin(), out.class_names.end(), cls);
            require(it != out.class_names.end(), ErrorCode::format_error, "rule refers to unknown class '" + cls + "'");
            r.consequent = static_cast<std::size_t>(it - out.class_names.begin());
            r.support = rj.at("support").get<double>();
            r.confidence = rj.at("confidence").get<double>();
            out.rules.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed ruleset: ") + e.what());
    }
    return out;
}

Vector encode_sample(const AttributeSchema& schema, const std::map<std::string, std::string>& cells) {
    for (const auto& [name, value] : cells) {
        require(schema.index_of(name).has_value(), ErrorCode::invalid_argument, "unknown attribute '" + name + "'");
    }
    Vector out(schema.size());
    for (std::size_t a = 0; a < schema.size(); ++a) {
        const auto& attr = schema.attributes[a];
        auto it = cells.find(attr.name);
        require(it != cells.end(), ErrorCode::invalid_argument, "sample lacks attribute '" + attr.name + "'");
        if (attr.kind == AttributeKind::continuous) {
            double v = 0.0;
            const auto& text = it->second;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::parse_error,
                    "attribute '" + attr.name + "': '" + text + "' is not a number");
            out[a] = v;
        } else {
            auto lv = std::find(attr.values.begin(), attr.values.end(), it->second);
            require(lv != attr.values.end(), ErrorCode::invalid_argument,
                    "attribute '" + attr.name + "': unknown value '" + it->second + "'");
            out[a] = static_cast<double>(lv - attr.values.begin());
        }
    }
    return out;
}

}  // namespace adbn::c45
