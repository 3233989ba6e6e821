#pragma once

#include "adbn/matrix.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace adbn::c45 {

enum class AttributeKind { continuous, categorical };

struct Attribute {
    std::string name;
    AttributeKind kind = AttributeKind::continuous;
    std::vector<std::string> values;  // categorical levels; cells hold the level index
};

struct AttributeSchema {
    std::vector<Attribute> attributes;

    std::size_t size() const noexcept { return attributes.size(); }
    std::optional<std::size_t> index_of(const std::string& name) const;
    void validate() const;
};

// Training table: one row per case, categorical cells store level indices.
struct Table {
    AttributeSchema schema;
    Matrix x;
    std::vector<std::size_t> y;
    std::vector<std::string> class_names;

    std::size_t class_count() const noexcept { return class_names.size(); }
    void validate() const;
};

// Entropy in bits of a class-count vector.
double entropy(std::span<const double> counts);

// Information gain from a parent partition into branches, each branch a
// class-count vector.
struct SplitScore {
    double gain = 0.0;
    double split_info = 0.0;
    double ratio = 0.0;
};

SplitScore score_partition(const std::vector<std::vector<double>>& branch_counts);

struct Split {
    std::size_t attribute = 0;
    AttributeKind kind = AttributeKind::continuous;
    double threshold = 0.0;  // continuous: left branch is x <= threshold

    bool operator==(const Split&) const = default;
};

double gain_ratio(const Table& table, std::span<const std::size_t> rows, const Split& split);
SplitScore evaluate_split(const Table& table, std::span<const std::size_t> rows, const Split& split);

// Candidates: every categorical attribute not yet used on the path and every
// midpoint between consecutive distinct values of a continuous attribute,
// with at least two branches holding min_leaf cases. The winner maximizes
// gain ratio among candidates whose gain reaches the mean candidate gain.
std::optional<Split> best_split(const Table& table, std::span<const std::size_t> rows,
                                std::size_t min_leaf = 2, const std::vector<bool>& used_categorical = {});

struct DecisionNode {
    std::vector<double> counts;  // class distribution of the training cases reaching this node
    std::size_t majority = 0;

    std::optional<Split> split;          // empty for a leaf
    std::vector<std::size_t> branch_values;  // categorical: level index of each child
    std::vector<DecisionNode> children;      // continuous: {<= threshold, > threshold}

    bool is_leaf() const noexcept { return !split.has_value(); }
    double total() const;
    double errors() const;  // training cases not of the majority class
};

struct TreeConfig {
    std::size_t min_leaf = 2;
    std::size_t max_depth = 25;
    double confidence = 0.25;
    bool prune = true;
};

DecisionNode build_tree(const Table& table, std::size_t min_leaf = 2, std::size_t max_depth = 25);
DecisionNode build_tree(const Table& table, std::span<const std::size_t> rows, std::size_t min_leaf,
                        std::size_t max_depth);

// C4.5 upper confidence limit on the error count of a leaf with n cases and
// e training errors, returned as the extra errors to add to e.
double added_errors(double n, double e, double confidence);
double pessimistic_errors(const DecisionNode& node, double confidence);

// Bottom-up: a subtree collapses to a leaf when the leaf's pessimistic error
// is no larger than the summed pessimistic error of its leaves.
DecisionNode prune_tree(DecisionNode node, double confidence = 0.25);

std::size_t node_count(const DecisionNode& node);
std::size_t leaf_count(const DecisionNode& node);
std::size_t depth(const DecisionNode& node);

struct Classification {
    std::size_t class_index = 0;
    double confidence = 0.0;
};

// A categorical level with no child routes to the node's majority class.
Classification classify(const DecisionNode& tree, const AttributeSchema& schema, std::span<const double> sample);

enum class Comparator { less_equal, greater, equal, not_in };

struct Condition {
    std::size_t attribute = 0;
    Comparator op = Comparator::less_equal;
    double value = 0.0;                 // threshold, or level index for equal
    std::vector<std::size_t> excluded;  // not_in: levels that have their own branch

    bool holds(std::span<const double> sample) const;
    bool operator==(const Condition&) const = default;
};

struct Rule {
    std::vector<Condition> conditions;
    std::size_t consequent = 0;
    double support = 0.0;     // training cases at the leaf
    double confidence = 0.0;  // majority fraction at the leaf

    bool matches(std::span<const double> sample) const;
};

struct RuleSet {
    AttributeSchema schema;
    std::vector<std::string> class_names;
    std::vector<Rule> rules;

    Classification classify(std::span<const double> sample) const;
    std::vector<std::size_t> mentioned_attributes() const;
    nlohmann::json to_json() const;
    static RuleSet from_json(const nlohmann::json& j);
};

// One rule per leaf; tests on a continuous attribute along a path collapse
// to the tightest interval. Categorical nodes missing some levels emit an
// extra not_in rule so the rules still partition the input space.
RuleSet tree_to_rules(const DecisionNode& tree, const AttributeSchema& schema,
                      const std::vector<std::string>& class_names);

// Indented text in C4.5's layout ("attr <= v :", "|   " per level,
// "class (n/errors)" at leaves).
std::string format_tree(const DecisionNode& tree, const AttributeSchema& schema,
                        const std::vector<std::string>& class_names);

std::string format_condition(const Condition& c, const AttributeSchema& schema);
std::string format_rules(const RuleSet& rules);

// Encodes a sample given as attribute name -> cell text.
Vector encode_sample(const AttributeSchema& schema, const std::map<std::string, std::string>& cells);

}  // namespace adbn::c45
