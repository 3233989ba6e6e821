#include "adbn/knowledge.hpp"
#include "adbn/error.hpp"
#include "adbn/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace adbn {

namespace {

std::string percent(double cut) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g%%", cut * 100.0);
    return buf;
}

double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    require(ec == std::errc{} && ptr == last && std::isfinite(v), ErrorCode::parse_error,
            "cannot parse '" + text + "' as a number (" + what + ")");
    return v;
}

}  // namespace

void ProbabilityBanding::validate() const {
    require(!cuts.empty(), ErrorCode::invalid_argument, "banding needs at least one cut point");
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        require(cuts[i] > 0.0 && cuts[i] < 1.0, ErrorCode::invalid_argument, "cut points must lie in (0, 1)");
        require(i == 0 || cuts[i] > cuts[i - 1], ErrorCode::invalid_argument, "cut points must be strictly increasing");
    }
    require(labels.empty() || labels.size() == band_count(), ErrorCode::invalid_argument,
            "banding needs one label per band");
}

std::size_t ProbabilityBanding::band_of(double probability) const {
    require(std::isfinite(probability), ErrorCode::invalid_argument, "probability must be finite");
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), probability) - cuts.begin());
}

std::vector<std::string> ProbabilityBanding::band_labels() const {
    if (!labels.empty()) return labels;
    std::vector<std::string> out;
    out.push_back("<" + percent(cuts.front()));
    for (std::size_t i = 1; i < cuts.size(); ++i) out.push_back(percent(cuts[i - 1]) + "-" + percent(cuts[i]));
    out.push_back(">=" + percent(cuts.back()));
    return out;
}

ProbabilityBanding ProbabilityBanding::parse(const std::string& text) {
    ProbabilityBanding b;
    b.cuts.clear();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto s = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        require(s != std::string::npos, ErrorCode::parse_error, "empty cut point in '" + text + "'");
        b.cuts.push_back(parse_number(item.substr(s, e - s + 1), "band cut"));
    }
    b.validate();
    return b;
}

nlohmann::json ProbabilityBanding::to_json() const {
    return {{"cuts", cuts}, {"labels", band_labels()}};
}

c45::AttributeSchema attribute_schema(const FeatureEncoder& encoder) {
    c45::AttributeSchema schema;
    for (const auto& f : encoder.features()) {
        c45::Attribute a;
        a.name = f.name;
        if (f.kind == FeatureKind::continuous) {
            a.kind = c45::AttributeKind::continuous;
        } else {
            a.kind = c45::AttributeKind::categorical;
            a.values = f.levels;
        }
        schema.attributes.push_back(std::move(a));
    }
    return schema;
}

c45::Table attribute_table(const FeatureEncoder& encoder, const std::vector<std::vector<std::string>>& cells) {
    c45::Table t;
    t.schema = attribute_schema(encoder);
    const std::size_t A = t.schema.size();
    t.x = Matrix(cells.size(), A);
    for (std::size_t r = 0; r < cells.size(); ++r) {
        require(cells[r].size() == A, ErrorCode::dimension_mismatch, "row " + std::to_string(r) + " has the wrong width");
        for (std::size_t a = 0; a < A; ++a) {
            const auto& attr = t.schema.attributes[a];
            if (attr.kind == c45::AttributeKind::continuous) {
                t.x(r, a) = parse_number(cells[r][a], attr.name);
            } else {
                auto it = std::find(attr.values.begin(), attr.values.end(), cells[r][a]);
                require(it != attr.values.end(), ErrorCode::schema_mismatch,
                        "unseen level '" + cells[r][a] + "' in column " + attr.name);
                t.x(r, a) = static_cast<double>(it - attr.values.begin());
            }
        }
    }
    return t;
}

std::size_t class_index(const DbnModel& model, const std::string& positive_class) {
    auto it = std::find(model.class_labels.begin(), model.class_labels.end(), positive_class);
    if (it == model.class_labels.end()) {
        std::string known;
        for (const auto& c : model.class_labels) known += (known.empty() ? "" : ", ") + c;
        fail(ErrorCode::invalid_argument, "unknown positive class '" + positive_class + "' (model classes: " + known + ")");
    }
    return static_cast<std::size_t>(it - model.class_labels.begin());
}

IoPairs generate_io_pairs(const DbnModel& model, const Dataset& data, std::span<const std::size_t> rows,
                          const std::string& positive_class, const ProbabilityBanding& banding, bool impute) {
    banding.validate();
    require(model.encoder.has_value(), ErrorCode::invalid_argument, "model carries no feature encoder");
    const auto& enc = *model.encoder;
    const std::size_t pos = class_index(model, positive_class);

    const Matrix x = enc.encode(data, rows, impute);
    IoPairs pairs;
    pairs.table = attribute_table(enc, enc.align(data, rows, impute));
    pairs.table.class_names = banding.band_labels();
    pairs.rows.assign(rows.begin(), rows.end());
    pairs.probabilities.resize(x.rows());
    pairs.table.y.resize(x.rows());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        const double p = forward(model, x.row(n)).probabilities[pos];
        pairs.probabilities[n] = p;
        pairs.table.y[n] = banding.band_of(p);
    }
    return pairs;
}

Extraction extract_rules(const DbnModel& model, const Dataset& data, std::span<const std::size_t> rows,
                         const std::string& positive_class, const ProbabilityBanding& banding,
                         const ExtractConfig& cfg) {
    require(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0, ErrorCode::invalid_argument,
            "hold-out fraction must lie in (0, 1)");
    Extraction out;
    out.pairs = generate_io_pairs(model, data, rows, positive_class, banding, cfg.impute);
    const auto& table = out.pairs.table;
    const std::size_t n = table.y.size();
    const std::size_t bands = banding.band_count();
    require(n >= 2, ErrorCode::degenerate_data, "rule extraction needs at least two rows");

    auto& fid = out.fidelity;
    fid.band_histogram.assign(bands, 0);
    for (auto b : table.y) ++fid.band_histogram[b];

    Rng rng(cfg.seed);
    auto order = rng.derive("extract-split").permutation(n);
    std::size_t held = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(n)));
    held = std::clamp<std::size_t>(held, 1, n - 1);
    std::vector<std::size_t> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    fid.train_count = train_rows.size();
    fid.heldout_count = test_rows.size();

    const auto present = std::count_if(fid.band_histogram.begin(), fid.band_histogram.end(),
                                       [](std::size_t c) { return c > 0; });
    if (present <= 1) {
        const std::size_t only = table.y.front();
        out.tree.counts.assign(bands, 0.0);
        out.tree.counts[only] = static_cast<double>(train_rows.size());
        out.tree.majority = only;
        out.rules.schema = table.schema;
        out.rules.class_names = table.class_names;
        out.rules.rules.push_back({{}, only, static_cast<double>(train_rows.size()), 1.0});
        fid.warnings.push_back("model output falls in a single band (" + table.class_names[only] +
                               "); emitting one unconditional rule");
    } else {
        out.tree = c45::build_tree(table, train_rows, cfg.tree.min_leaf, cfg.tree.max_depth);
        if (cfg.tree.prune) out.tree = c45::prune_tree(std::move(out.tree), cfg.tree.confidence);
        out.rules = c45::tree_to_rules(out.tree, table.schema, table.class_names);
    }
    fid.rule_count = out.rules.rules.size();

    fid.confusion.assign(bands, std::vector<std::size_t>(bands, 0));
    std::size_t agree = 0;
    for (auto r : test_rows) {
        const auto b = out.rules.classify(table.x.row(r)).class_index;
        ++fid.confusion[table.y[r]][b];
        if (b == table.y[r]) ++agree;
    }
    fid.agreement = static_cast<double>(agree) / static_cast<double>(test_rows.size());
    agree = 0;
    for (auto r : train_rows) {
        if (out.rules.classify(table.x.row(r)).class_index == table.y[r]) ++agree;
    }
    fid.train_agreement = static_cast<double>(agree) / static_cast<double>(train_rows.size());
    for (std::size_t b = 0; b < bands; ++b) {
        const bool has_rule = std::any_of(out.rules.rules.begin(), out.rules.rules.end(),
                                          [b](const c45::Rule& r) { return r.consequent == b; });
        if (fid.band_histogram[b] > 0 && !has_rule) {
            fid.warnings.push_back("no rule concludes band " + table.class_names[b]);
        }
    }
    return out;
}

nlohmann::json FidelityReport::to_json(const std::vector<std::string>& band_labels) const {
    return {{"agreement", agreement},        {"train_agreement", train_agreement},
            {"confusion", confusion},        {"band_histogram", band_histogram},
            {"band_labels", band_labels},    {"rule_count", rule_count},
            {"train_count", train_count},    {"heldout_count", heldout_count},
            {"warnings", warnings}};
}

std::string FidelityReport::to_text(const std::vector<std::string>& band_labels) const {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "fidelity (held-out): %.4f  (%zu rows)\nfidelity (train):    %.4f  (%zu rows)\nrules: %zu\n",
                  agreement, heldout_count, train_agreement, train_count, rule_count);
    os << line << "confusion (rows: model band, cols: rule band)\n";
    for (std::size_t b = 0; b < confusion.size(); ++b) {
        os << "  " << band_labels[b] << ':';
        for (auto c : confusion[b]) os << ' ' << c;
        os << '\n';
    }
    for (const auto& w : warnings) os << "warning: " << w << '\n';
    return os.str();
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), ErrorCode::dimension_mismatch, "one label per score required");
    std::size_t P = 0, N = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, ErrorCode::invalid_argument, "ROC labels must be 0 or 1");
        require(std::isfinite(scores[i]), ErrorCode::invalid_argument, "ROC scores must be finite");
        (labels[i] ? P : N) += 1;
    }
    require(P > 0 && N > 0, ErrorCode::degenerate_data, "ROC needs both positive and negative samples");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve c;
    c.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(N);
        const double tpr = static_cast<double>(tp) / static_cast<double>(P);
        const auto [px, py] = c.points.back();
        c.auc += (fpr - px) * (tpr + py) / 2.0;
        c.points.emplace_back(fpr, tpr);
    }
    return c;
}

std::string roc_to_csv(const RocCurve& curve) {
    std::string out = "fpr,tpr\n";
    char line[64];
    for (const auto& [x, y] : curve.points) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", x, y);
        out += line;
    }
    return out;
}

}  // namespace adbn
