#include "adbn/data.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace adbn {

namespace {

std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string trim_blanks(const std::string& f) {
    auto first = f.find_first_not_of(" \t");
    auto last = f.find_last_not_of(" \t");
    return first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    auto finish = [&] {
        fields.push_back(was_quoted ? std::move(field) : trim_blanks(field));
        field.clear();
        was_quoted = false;
    };
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && trim_blanks(field).empty() && !was_quoted) {
            field.clear();
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            finish();
        } else if (!was_quoted) {
            field.push_back(ch);
        }
    }
    if (quoted) fail(ErrorCode::parse_error, "row " + std::to_string(line_no) + ": unterminated quoted field");
    finish();
    return fields;
}

std::string quote_if_needed(const std::string& cell) {
    const bool padded = !cell.empty() && (cell.front() == ' ' || cell.back() == ' ');
    if (cell.find_first_of(",\"") == std::string::npos && !padded) return cell;
    std::string out = "\"";
    for (char ch : cell) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += '"';
    return out;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::continuous: return "continuous";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::ordinal: return "ordinal";
    }
    return "unknown";
}

FeatureKind feature_kind_from_string(std::string_view name) {
    for (auto k : {FeatureKind::continuous, FeatureKind::categorical, FeatureKind::ordinal}) {
        if (to_string(k) == name) return k;
    }
    fail(ErrorCode::format_error, "unknown feature kind '" + std::string(name) + "'");
}

std::optional<std::size_t> Dataset::feature_index(const std::string& name) const {
    for (std::size_t f = 0; f < features.size(); ++f) {
        if (features[f].name == name) return f;
    }
    return std::nullopt;
}

std::vector<std::size_t> Dataset::rows_with(SplitRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] == role) out.push_back(r);
    }
    return out;
}

std::vector<std::string> Dataset::class_labels() const {
    std::set<std::string> unique(labels.begin(), labels.end());
    return {unique.begin(), unique.end()};
}

std::vector<std::size_t> Dataset::label_indices(const std::vector<std::string>& classes) const {
    std::vector<std::size_t> out(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
        auto it = std::find(classes.begin(), classes.end(), labels[r]);
        require(it != classes.end(), ErrorCode::schema_mismatch,
                "label '" + labels[r] + "' at data row " + std::to_string(r + 1) + " is not a known class");
        out[r] = static_cast<std::size_t>(it - classes.begin());
    }
    return out;
}

double Dataset::numeric(std::size_t row, std::size_t feature) const {
    auto v = parse_number(rows.at(row).at(feature));
    if (!v) {
        fail(ErrorCode::parse_error, "row " + std::to_string(row + 2) + ", column '" + features[feature].name +
                                         "': '" + rows[row][feature] + "' is not a number");
    }
    return *v;
}

Dataset parse_csv(std::istream& in, const SchemaHints& hints, const std::string& provenance) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        header = split_csv_line(line, line_no);
        break;
    }
    require(!header.empty(), ErrorCode::parse_error, provenance + ": empty file (no header row)");
    {
        std::set<std::string> seen;
        for (const auto& h : header) {
            require(seen.insert(h).second, ErrorCode::parse_error, "duplicate column name '" + h + "'");
        }
    }

    std::optional<std::size_t> label_col;
    if (!hints.label_column.empty()) {
        auto it = std::find(header.begin(), header.end(), hints.label_column);
        require(it != header.end(), ErrorCode::schema_mismatch,
                "label column '" + hints.label_column + "' not found in " + provenance);
        label_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::size_t> feature_cols;
    Dataset ds;
    ds.provenance = provenance;
    ds.label_name = hints.label_column;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (label_col && c == *label_col) continue;
        if (std::find(hints.ignore.begin(), hints.ignore.end(), header[c]) != hints.ignore.end()) continue;
        feature_cols.push_back(c);
        ds.features.push_back({header[c], FeatureKind::continuous, {}});
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line, line_no);
        if (cells.size() != header.size()) {
            fail(ErrorCode::parse_error, "row " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, found " +
                                             std::to_string(cells.size()));
        }
        std::vector<std::string> row;
        row.reserve(feature_cols.size());
        for (auto c : feature_cols) row.push_back(cells[c]);
        ds.rows.push_back(std::move(row));
        if (label_col) ds.labels.push_back(cells[*label_col]);
    }
    require(!ds.rows.empty(), ErrorCode::parse_error, provenance + ": no data rows");

    // Cell errors below report file rows assuming no blank lines (data starts at row 2).
    for (std::size_t f = 0; f < ds.features.size(); ++f) {
        auto& col = ds.features[f];
        auto hint = hints.columns.find(col.name);
        if (hint != hints.columns.end()) {
            col.kind = hint->second.kind;
            col.levels = hint->second.levels;
        } else {
            const bool numeric = std::all_of(ds.rows.begin(), ds.rows.end(),
                                             [&](const auto& r) { return parse_number(r[f]).has_value(); });
            col.kind = numeric ? FeatureKind::continuous : FeatureKind::categorical;
        }
    }

    ds.stats.resize(ds.features.size());
    for (std::size_t f = 0; f < ds.features.size(); ++f) {
        std::set<std::string> distinct;
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t r = 0; r < ds.rows.size(); ++r) {
            distinct.insert(ds.rows[r][f]);
            if (ds.features[f].kind == FeatureKind::continuous) {
                auto v = parse_number(ds.rows[r][f]);
                if (!v) {
                    fail(ErrorCode::parse_error, "row " + std::to_string(r + 2) + ", column '" +
                                                     ds.features[f].name + "': '" + ds.rows[r][f] +
                                                     "' is not a number");
                }
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            } else if (ds.features[f].kind == FeatureKind::ordinal) {
                const auto& levels = ds.features[f].levels;
                require(std::find(levels.begin(), levels.end(), ds.rows[r][f]) != levels.end(),
                        ErrorCode::parse_error,
                        "row " + std::to_string(r + 2) + ", column '" + ds.features[f].name +
                            "': level '" + ds.rows[r][f] + "' is not in the ordinal hint");
            }
        }
        ds.stats[f].distinct = distinct.size();
        if (ds.features[f].kind == FeatureKind::continuous) {
            ds.stats[f].min = lo;
            ds.stats[f].max = hi;
        }
    }
    ds.assignment.assign(ds.rows.size(), SplitRole::unassigned);
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const SchemaHints& hints) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_error, "cannot open '" + path.string() + "'");
    return parse_csv(in, hints, path.string());
}

std::string to_csv(const Dataset& dataset) {
    std::ostringstream os;
    auto header_cell = [&](const std::string& s, bool first) { os << (first ? "" : ",") << quote_if_needed(s); };
    for (std::size_t f = 0; f < dataset.features.size(); ++f) header_cell(dataset.features[f].name, f == 0);
    const bool labelled = !dataset.labels.empty();
    if (labelled) header_cell(dataset.label_name, dataset.features.empty());
    os << '\n';
    for (std::size_t r = 0; r < dataset.rows.size(); ++r) {
        for (std::size_t f = 0; f < dataset.features.size(); ++f) header_cell(dataset.rows[r][f], f == 0);
        if (labelled) header_cell(dataset.labels[r], dataset.features.empty());
        os << '\n';
    }
    return os.str();
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io_error, "cannot write '" + path.string() + "'");
    out << to_csv(dataset);
    require(out.good(), ErrorCode::io_error, "write failed for '" + path.string() + "'");
}

FeatureEncoder FeatureEncoder::fit(const Dataset& dataset) {
    std::vector<std::size_t> rows(dataset.size());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return fit(dataset, rows);
}

FeatureEncoder FeatureEncoder::fit(const Dataset& dataset, std::span<const std::size_t> rows) {
    require(!rows.empty(), ErrorCode::invalid_argument, "cannot fit an encoder on zero rows");
    FeatureEncoder enc;
    for (std::size_t f = 0; f < dataset.features.size(); ++f) {
        const auto& col = dataset.features[f];
        Feature feat;
        feat.name = col.name;
        feat.kind = col.kind;
        if (col.kind == FeatureKind::continuous) {
            double lo = INFINITY, hi = -INFINITY, sum = 0.0;
            for (auto r : rows) {
                const double v = dataset.numeric(r, f);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            feat.min = lo;
            // A constant column encodes to 0 everywhere.
            feat.max = hi > lo ? hi : lo + 1.0;
            feat.mean = sum / static_cast<double>(rows.size());
        } else {
            std::map<std::string, std::size_t> counts;
            for (auto r : rows) ++counts[dataset.rows[r][f]];
            if (!col.levels.empty()) {
                feat.levels = col.levels;
                for (const auto& [level, n] : counts) {
                    require(std::find(feat.levels.begin(), feat.levels.end(), level) != feat.levels.end(),
                            ErrorCode::parse_error,
                            "column '" + col.name + "': level '" + level + "' is not in the hinted level list");
                }
            } else {
                for (const auto& [level, n] : counts) feat.levels.push_back(level);
            }
            std::size_t best = 0;
            for (const auto& level : feat.levels) {
                auto it = counts.find(level);
                if (it != counts.end() && it->second > best) {
                    best = it->second;
                    feat.mode = level;
                }
            }
        }
        enc.features_.push_back(std::move(feat));
    }
    return enc;
}

std::size_t FeatureEncoder::width() const {
    std::size_t w = 0;
    for (const auto& f : features_) w += f.kind == FeatureKind::categorical ? f.levels.size() : 1;
    return w;
}

Vector FeatureEncoder::encode_row(std::span<const std::string> cells) const {
    require(cells.size() == features_.size(), ErrorCode::dimension_mismatch,
            "feature axis: expected " + std::to_string(features_.size()) + " cells, got " +
                std::to_string(cells.size()));
    Vector out;
    out.reserve(width());
    for (std::size_t f = 0; f < features_.size(); ++f) {
        const auto& feat = features_[f];
        const auto& cell = cells[f];
        switch (feat.kind) {
        case FeatureKind::continuous: {
            auto v = parse_number(cell);
            require(v.has_value(), ErrorCode::parse_error,
                    "feature '" + feat.name + "': '" + cell + "' is not a number");
            out.push_back(std::clamp((*v - feat.min) / (feat.max - feat.min), 0.0, 1.0));
            break;
        }
        case FeatureKind::categorical: {
            auto it = std::find(feat.levels.begin(), feat.levels.end(), cell);
            if (it == feat.levels.end()) {
                fail(ErrorCode::schema_mismatch, "feature '" + feat.name + "': unseen level '" + cell + "'");
            }
            const auto k = static_cast<std::size_t>(it - feat.levels.begin());
            for (std::size_t l = 0; l < feat.levels.size(); ++l) out.push_back(l == k ? 1.0 : 0.0);
            break;
        }
        case FeatureKind::ordinal: {
            auto it = std::find(feat.levels.begin(), feat.levels.end(), cell);
            if (it == feat.levels.end()) {
                fail(ErrorCode::schema_mismatch, "feature '" + feat.name + "': unseen level '" + cell + "'");
            }
            const auto k = static_cast<double>(it - feat.levels.begin());
            out.push_back(feat.levels.size() > 1 ? k / static_cast<double>(feat.levels.size() - 1) : 0.0);
            break;
        }
        }
    }
    return out;
}

std::vector<std::vector<std::string>> FeatureEncoder::align(const Dataset& dataset,
                                                            std::span<const std::size_t> rows,
                                                            bool impute) const {
    std::vector<std::optional<std::size_t>> source(features_.size());
    for (std::size_t f = 0; f < features_.size(); ++f) {
        const auto& feat = features_[f];
        source[f] = dataset.feature_index(feat.name);
        if (!source[f] && !impute) {
            fail(ErrorCode::schema_mismatch, "model/data schema mismatch: column '" + feat.name + "' missing");
        }
        if (source[f] && dataset.features[*source[f]].kind != feat.kind) {
            fail(ErrorCode::schema_mismatch, "model/data schema mismatch: column '" + feat.name + "' is " +
                                                 std::string(to_string(dataset.features[*source[f]].kind)) +
                                                 ", model expects " + std::string(to_string(feat.kind)));
        }
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        std::vector<std::string> cells(features_.size());
        for (std::size_t f = 0; f < features_.size(); ++f) {
            if (source[f]) {
                cells[f] = dataset.rows.at(r)[*source[f]];
            } else {
                cells[f] = features_[f].kind == FeatureKind::continuous ? format_number(features_[f].mean)
                                                                        : features_[f].mode;
            }
        }
        out.push_back(std::move(cells));
    }
    return out;
}

Matrix FeatureEncoder::encode(const Dataset& dataset, std::span<const std::size_t> rows, bool impute) const {
    const auto cells = align(dataset, rows, impute);
    Matrix out(rows.size(), width());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        try {
            const Vector v = encode_row(cells[k]);
            std::copy(v.begin(), v.end(), out.row(k).begin());
        } catch (const Error& e) {
            throw Error(e.code(), "row " + std::to_string(rows[k] + 2) + ": " + e.what());
        }
    }
    return out;
}

Matrix FeatureEncoder::encode(const Dataset& dataset, bool impute) const {
    std::vector<std::size_t> rows(dataset.size());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return encode(dataset, rows, impute);
}

double FeatureEncoder::decode_continuous(std::size_t feature, double encoded) const {
    const auto& f = features_.at(feature);
    require(f.kind == FeatureKind::continuous, ErrorCode::invalid_argument,
            "feature '" + f.name + "' is not continuous");
    return f.min + encoded * (f.max - f.min);
}

SchemaHints FeatureEncoder::hints(const std::string& label_column) const {
    SchemaHints h;
    h.label_column = label_column;
    for (const auto& f : features_) {
        ColumnHint ch{f.kind, {}};
        if (f.kind == FeatureKind::ordinal) ch.levels = f.levels;
        h.columns[f.name] = ch;
    }
    return h;
}

std::string FeatureEncoder::schema_hash() const {
    std::string canon;
    for (const auto& f : features_) {
        canon += f.name;
        canon += '\x1f';
        canon += to_string(f.kind);
        for (const auto& l : f.levels) {
            canon += '\x1f';
            canon += l;
        }
        canon += '\x1e';
    }
    return hex64(fnv1a64(canon));
}

nlohmann::json FeatureEncoder::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : features_) {
        nlohmann::json j{{"name", f.name}, {"kind", to_string(f.kind)}};
        if (f.kind == FeatureKind::continuous) {
            j["min"] = f.min;
            j["max"] = f.max;
            j["mean"] = f.mean;
        } else {
            j["levels"] = f.levels;
            j["mode"] = f.mode;
        }
        arr.push_back(std::move(j));
    }
    return {{"features", arr}, {"schema_hash", schema_hash()}};
}

FeatureEncoder FeatureEncoder::from_json(const nlohmann::json& j) {
    FeatureEncoder enc;
    try {
        for (const auto& fj : j.at("features")) {
            Feature f;
            f.name = fj.at("name").get<std::string>();
            f.kind = feature_kind_from_string(fj.at("kind").get<std::string>());
            if (f.kind == FeatureKind::continuous) {
                f.min = fj.at("min").get<double>();
                f.max = fj.at("max").get<double>();
                f.mean = fj.at("mean").get<double>();
                require(f.min < f.max, ErrorCode::format_error, "encoder feature '" + f.name + "' has min >= max");
            } else {
                f.levels = fj.at("levels").get<std::vector<std::string>>();
                f.mode = fj.at("mode").get<std::string>();
            }
            enc.features_.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed encoder: ") + e.what());
    }
    if (j.contains("schema_hash")) {
        require(j["schema_hash"].get<std::string>() == enc.schema_hash(), ErrorCode::format_error,
                "encoder schema hash does not match its contents");
    }
    return enc;
}

void split(Dataset& dataset, double train_fraction, std::uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::invalid_argument,
            "train fraction must lie strictly between 0 and 1");
    require(dataset.labels.size() == dataset.size(), ErrorCode::invalid_argument,
            "stratified split needs a label for every row");
    Rng rng(seed);
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < dataset.size(); ++r) by_class[dataset.labels[r]].push_back(r);
    dataset.assignment.assign(dataset.size(), SplitRole::test);
    for (auto& [label, rows] : by_class) {
        require(rows.size() >= 2, ErrorCode::degenerate_data,
                "class '" + label + "' has a single sample; cannot place it in both splits");
        rng.shuffle(rows);
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
        for (std::size_t k = 0; k < n_train; ++k) dataset.assignment[rows[k]] = SplitRole::train;
    }
}

// ---------------------------------------------------------------------------
// Planted-rule generator

namespace {

bool holds(Comparison op, double x, double v) {
    switch (op) {
    case Comparison::less: return x < v;
    case Comparison::less_equal: return x <= v;
    case Comparison::greater: return x > v;
    case Comparison::greater_equal: return x >= v;
    }
    return false;
}

std::optional<Comparison> parse_comparison(std::string_view op) {
    if (op == "<") return Comparison::less;
    if (op == "<=") return Comparison::less_equal;
    if (op == ">") return Comparison::greater;
    if (op == ">=") return Comparison::greater_equal;
    return std::nullopt;
}

std::size_t parse_feature_ref(const std::string& token, std::size_t line_no) {
    std::string_view t = token;
    if (!t.empty() && t.front() == 'f') t.remove_prefix(1);
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        fail(ErrorCode::parse_error, "planted spec line " + std::to_string(line_no) + ": bad feature '" + token + "'");
    }
    return idx;
}

double parse_value(const std::string& token, std::size_t line_no) {
    auto v = parse_number(token);
    if (!v) fail(ErrorCode::parse_error, "planted spec line " + std::to_string(line_no) + ": bad number '" + token + "'");
    return *v;
}

}  // namespace

void PlantedSpec::validate() const {
    require(feature_count > 0, ErrorCode::invalid_argument, "planted spec needs at least one feature");
    require(rows > 0, ErrorCode::invalid_argument, "planted spec needs at least one row");
    require(noise >= 0.0 && noise < 0.5, ErrorCode::invalid_argument, "noise rate must lie in [0, 0.5)");
    require(!rules.empty(), ErrorCode::invalid_argument, "planted spec needs at least one rule");
    for (const auto& [f, range] : ranges) {
        require(f < feature_count, ErrorCode::invalid_argument, "range for undeclared feature f" + std::to_string(f));
        require(range.first < range.second, ErrorCode::invalid_argument,
                "range for f" + std::to_string(f) + " is empty");
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
        require(!rules[r].conditions.empty(), ErrorCode::invalid_argument,
                "rule " + std::to_string(r + 1) + " has no conditions");
        // Intersect each feature's admissible interval with its range.
        std::map<std::size_t, std::pair<double, double>> box;
        std::map<std::size_t, std::pair<bool, bool>> open;  // strict lower / strict upper
        for (const auto& c : rules[r].conditions) {
            require(c.feature < feature_count, ErrorCode::invalid_argument,
                    "rule " + std::to_string(r + 1) + " references undeclared feature f" + std::to_string(c.feature));
            if (!box.count(c.feature)) {
                auto it = ranges.find(c.feature);
                box[c.feature] = it != ranges.end() ? it->second : std::pair{0.0, 1.0};
                open[c.feature] = {false, true};
            }
            auto& [lo, hi] = box[c.feature];
            auto& [lo_open, hi_open] = open[c.feature];
            if (c.op == Comparison::greater || c.op == Comparison::greater_equal) {
                const bool strict = c.op == Comparison::greater;
                if (c.value > lo || (c.value == lo && strict)) {
                    lo = c.value;
                    lo_open = strict;
                }
            } else {
                const bool strict = c.op == Comparison::less;
                if (c.value < hi || (c.value == hi && strict)) {
                    hi = c.value;
                    hi_open = strict;
                }
            }
        }
        for (const auto& [f, interval] : box) {
            const auto [lo, hi] = interval;
            const bool empty = lo > hi || (lo == hi && (open[f].first || open[f].second));
            require(!empty, ErrorCode::invalid_argument,
                    "rule " + std::to_string(r + 1) + " is contradictory on feature f" + std::to_string(f));
        }
    }
}

std::vector<std::size_t> PlantedSpec::informative_features() const {
    std::set<std::size_t> out;
    for (const auto& rule : rules)
        for (const auto& c : rule.conditions) out.insert(c.feature);
    return {out.begin(), out.end()};
}

bool PlantedSpec::evaluate(std::span<const double> row) const {
    for (const auto& rule : rules) {
        bool all = true;
        for (const auto& c : rule.conditions) all = all && holds(c.op, row[c.feature], c.value);
        if (all) return true;
    }
    return false;
}

PlantedSpec parse_planted_spec(const std::string& text) {
    PlantedSpec spec;
    spec.rules.clear();
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const auto& key = tok[0];
        auto need = [&](std::size_t n) {
            require(tok.size() == n, ErrorCode::parse_error,
                    "planted spec line " + std::to_string(line_no) + ": '" + key + "' expects " +
                        std::to_string(n - 1) + " argument(s)");
        };
        if (key == "features") {
            need(2);
            spec.feature_count = static_cast<std::size_t>(parse_value(tok[1], line_no));
        } else if (key == "rows") {
            need(2);
            spec.rows = static_cast<std::size_t>(parse_value(tok[1], line_no));
        } else if (key == "noise") {
            need(2);
            spec.noise = parse_value(tok[1], line_no);
        } else if (key == "seed") {
            need(2);
            spec.seed = static_cast<std::uint64_t>(parse_value(tok[1], line_no));
        } else if (key == "range") {
            need(4);
            spec.ranges[parse_feature_ref(tok[1], line_no)] = {parse_value(tok[2], line_no),
                                                                parse_value(tok[3], line_no)};
        } else if (key == "rule") {
            PlantedRule rule;
            std::size_t k = 1;
            while (k < tok.size()) {
                require(k + 3 <= tok.size(), ErrorCode::parse_error,
                        "planted spec line " + std::to_string(line_no) + ": incomplete condition");
                auto op = parse_comparison(tok[k + 1]);
                require(op.has_value(), ErrorCode::parse_error,
                        "planted spec line " + std::to_string(line_no) + ": unknown comparator '" + tok[k + 1] + "'");
                rule.conditions.push_back({parse_feature_ref(tok[k], line_no), *op, parse_value(tok[k + 2], line_no)});
                k += 3;
                if (k < tok.size()) {
                    require(tok[k] == "and", ErrorCode::parse_error,
                            "planted spec line " + std::to_string(line_no) + ": expected 'and', got '" + tok[k] + "'");
                    ++k;
                    require(k < tok.size(), ErrorCode::parse_error,
                            "planted spec line " + std::to_string(line_no) + ": dangling 'and'");
                }
            }
            spec.rules.push_back(std::move(rule));
        } else {
            fail(ErrorCode::parse_error, "planted spec line " + std::to_string(line_no) + ": unknown directive '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

PlantedSpec load_planted_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_error, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_planted_spec(os.str());
}

PlantedDataset generate_planted(const PlantedSpec& spec) {
    spec.validate();
    PlantedDataset out;
    out.spec = spec;
    auto& ds = out.dataset;
    for (std::size_t f = 0; f < spec.feature_count; ++f) {
        ds.features.push_back({"f" + std::to_string(f), FeatureKind::continuous, {}});
    }
    ds.label_name = "label";
    ds.provenance = "planted:seed=" + std::to_string(spec.seed);

    Rng rng(spec.seed);
    Vector row(spec.feature_count);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        std::vector<std::string> cells(spec.feature_count);
        for (std::size_t f = 0; f < spec.feature_count; ++f) {
            auto it = spec.ranges.find(f);
            const auto [lo, hi] = it != spec.ranges.end() ? it->second : std::pair{0.0, 1.0};
            // Round-trip exactly through text so the CSV reproduces the rule values.
            cells[f] = format_number(rng.uniform(lo, hi));
            row[f] = *parse_number(cells[f]);
        }
        const bool truth = spec.evaluate(row);
        const bool flipped = rng.bernoulli(spec.noise);
        out.truth.push_back(truth);
        ds.labels.push_back((truth != flipped) ? "positive" : "negative");
        ds.rows.push_back(std::move(cells));
    }
    ds.stats.resize(spec.feature_count);
    ds.assignment.assign(ds.rows.size(), SplitRole::unassigned);
    return out;
}

}  // namespace adbn
