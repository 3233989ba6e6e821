#include "commands.hpp"

#include "adbn/c45.hpp"
#include "adbn/data.hpp"
#include "adbn/dbn.hpp"
#include "adbn/error.hpp"
#include "adbn/finetune.hpp"
#include "adbn/knowledge.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#ifndef ADBN_VERSION
#define ADBN_VERSION "0.1.0"
#endif

namespace adbn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const TrainConfig kTrainDefaults{};
const FineTuneConfig kFineTuneDefaults{};
const c45::TreeConfig kTreeDefaults{};
constexpr std::size_t kPaperInitialHidden = 400;

struct Options {
    std::string data, label, out, model, positive_class, manifest, spec;
    std::uint64_t seed = 1;
    bool impute = false;

    std::size_t features = 10;
    std::size_t rows = 1000;
    double noise = 0.0;
    std::string rules;

    double train_fraction = 0.8;
    std::size_t initial_hidden = kTrainDefaults.initial_hidden;
    bool paper_defaults = false;
    std::size_t epochs = kTrainDefaults.batch.epochs;
    std::size_t batch_size = kTrainDefaults.batch.batch_size;
    std::size_t cd_k = kTrainDefaults.batch.cd_steps;
    double lr = kTrainDefaults.batch.learning_rate;
    bool exact_grad = false;
    double theta_g = kTrainDefaults.adaptive.theta_g;
    double theta_a = kTrainDefaults.adaptive.theta_a;
    double theta_l1 = kTrainDefaults.adaptive.theta_l1;
    double theta_l2 = kTrainDefaults.adaptive.theta_l2;
    std::size_t max_layers = kTrainDefaults.adaptive.max_layers;
    std::size_t max_hidden = kTrainDefaults.adaptive.max_hidden;
    std::size_t warmup = kTrainDefaults.adaptive.warmup_epochs;
    bool no_generation = false;
    bool no_annihilation = false;
    std::size_t head_epochs = kTrainDefaults.head_epochs;
    double head_lr = kTrainDefaults.head_learning_rate;
    std::string categorical, ordinal, ignore;

    double theta_t = kFineTuneDefaults.theta_t;
    double theta_f = kFineTuneDefaults.theta_f;
    double w_correct = kFineTuneDefaults.w_correct;
    double w_wrong = kFineTuneDefaults.w_wrong;
    double firing_threshold = kFineTuneDefaults.firing_threshold;
    std::string layers;

    std::string bands = "0.2,0.35,0.5";
    bool no_prune = false;
    double confidence = kTreeDefaults.confidence;
    std::size_t min_leaf = kTreeDefaults.min_leaf;
    std::size_t max_depth = kTreeDefaults.max_depth;
    double holdout = 0.25;
};

// Everything a command produces, collected for the manifest.
struct Run {
    std::string command;
    fs::path dir;
    std::vector<std::string> outputs;
    json effective = json::object();
    std::ostream* out = nullptr;

    void emit(const std::string& name, std::string_view contents) {
        write_file_atomic(dir / name, contents);
        outputs.push_back(name);
    }
};

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto s = item.find_first_not_of(" \t");
        if (s == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(s, e - s + 1));
    }
    return out;
}

std::string fmt_fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string timestamp(const char* format) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), format, &tm);
    return buf;
}

fs::path default_run_dir(std::uint64_t seed) {
    const std::string base = timestamp("%Y%m%dT%H%M%SZ") + "-seed" + std::to_string(seed);
    fs::path dir = fs::path("runs") / base;
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path("runs") / (base + "-" + std::to_string(k));
    return dir;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return rows;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out = ds;
    out.rows.clear();
    out.labels.clear();
    for (auto r : rows) {
        out.rows.push_back(ds.rows[r]);
        if (!ds.labels.empty()) out.labels.push_back(ds.labels[r]);
    }
    out.assignment.assign(out.rows.size(), SplitRole::unassigned);
    return out;
}

SchemaHints training_hints(const Options& o) {
    SchemaHints h;
    h.label_column = o.label;
    for (const auto& name : split_list(o.categorical, ',')) h.columns[name] = {FeatureKind::categorical, {}};
    for (const auto& entry : split_list(o.ordinal, ';')) {
        const auto eq = entry.find('=');
        require(eq != std::string::npos && eq > 0, ErrorCode::parse_error,
                "ordinal hint '" + entry + "' must look like column=low|mid|high");
        auto levels = split_list(entry.substr(eq + 1), '|');
        require(levels.size() >= 2, ErrorCode::parse_error, "ordinal hint '" + entry + "' needs at least two levels");
        h.columns[entry.substr(0, eq)] = {FeatureKind::ordinal, std::move(levels)};
    }
    h.ignore = split_list(o.ignore, ',');
    return h;
}

const FeatureEncoder& encoder_of(const DbnModel& model) {
    require(model.encoder.has_value(), ErrorCode::invalid_argument, "model file carries no feature encoder");
    return *model.encoder;
}

// Loads a CSV for use with an existing model. Continuous columns are left to
// inference so that a text column surfaces as a kind mismatch.
Dataset load_for_model(const DbnModel& model, const Options& o, bool need_label) {
    const auto& enc = encoder_of(model);
    const std::string label = o.label.empty() ? model.label_name : o.label;
    SchemaHints hints = enc.hints(need_label ? label : std::string{});
    for (auto it = hints.columns.begin(); it != hints.columns.end();) {
        it = it->second.kind == FeatureKind::continuous ? hints.columns.erase(it) : std::next(it);
    }
    if (!need_label && !label.empty()) hints.ignore.push_back(label);
    require(!need_label || !label.empty(), ErrorCode::invalid_argument,
            "no label column known; pass --label");
    Dataset ds;
    try {
        ds = load_csv(o.data, hints);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::parse_error && std::string(e.what()).find("ordinal hint") != std::string::npos) {
            throw Error(ErrorCode::schema_mismatch, std::string("model/data schema mismatch: ") + e.what());
        }
        throw;
    }
    enc.align(ds, std::vector<std::size_t>{}, o.impute);
    spdlog::info("loaded {} rows from {} (model schema {})", ds.size(), o.data, enc.schema_hash());
    return ds;
}

std::vector<std::size_t> model_labels(const DbnModel& model, const Dataset& ds) {
    std::vector<std::size_t> y;
    y.reserve(ds.labels.size());
    for (const auto& l : ds.labels) {
        auto it = std::find(model.class_labels.begin(), model.class_labels.end(), l);
        require(it != model.class_labels.end(), ErrorCode::schema_mismatch,
                "model/data schema mismatch: label '" + l + "' is not a model class");
        y.push_back(static_cast<std::size_t>(it - model.class_labels.begin()));
    }
    return y;
}

std::string resolve_positive(const DbnModel& model, const std::string& requested) {
    if (!requested.empty()) {
        class_index(model, requested);
        return requested;
    }
    const auto& c = model.class_labels;
    return std::find(c.begin(), c.end(), "positive") != c.end() ? "positive" : c.back();
}

// ---- commands ----

void cmd_generate(const Options& o, bool seed_given, Run& run) {
    PlantedSpec spec;
    if (!o.spec.empty()) {
        spec = load_planted_spec(o.spec);
        if (seed_given) spec.seed = o.seed;
    } else {
        char head[160];
        std::snprintf(head, sizeof(head), "features %zu\nrows %zu\nnoise %.17g\nseed %llu\n", o.features, o.rows,
                      o.noise, static_cast<unsigned long long>(o.seed));
        std::string text = head;
        for (const auto& r : split_list(o.rules, ';')) text += "rule " + r + "\n";
        spec = parse_planted_spec(text);
    }
    require(!spec.rules.empty(), ErrorCode::invalid_argument, "no planted rules given (use --rule or --spec)");
    const auto gen = generate_planted(spec);
    run.emit("data.csv", to_csv(gen.dataset));
    std::string truth = "truth\n";
    std::size_t positives = 0;
    for (bool t : gen.truth) {
        truth += t ? "1\n" : "0\n";
        positives += t;
    }
    run.emit("truth.csv", truth);
    json informative = json::array();
    for (auto f : spec.informative_features()) informative.push_back("f" + std::to_string(f));
    const json summary = {{"features", spec.feature_count}, {"rows", spec.rows}, {"noise", spec.noise},
                          {"seed", spec.seed}, {"rule_count", spec.rules.size()}, {"informative", informative},
                          {"rule_positive_rows", positives}};
    run.emit("planted.json", summary.dump(2) + "\n");
    run.effective = summary;
    *run.out << "generated " << spec.rows << " rows x " << spec.feature_count << " features ("
             << positives << " rule-positive) -> " << (run.dir / "data.csv").string() << "\n";
}

void cmd_train(const Options& o, bool initial_hidden_given, Run& run) {
    require(!o.label.empty(), ErrorCode::invalid_argument, "--label is required");
    Dataset ds = load_csv(o.data, training_hints(o));
    spdlog::info("loaded {} rows, {} features from {}", ds.size(), ds.features.size(), o.data);
    split(ds, o.train_fraction, o.seed);
    const auto train_rows = ds.rows_with(SplitRole::train);
    const auto test_rows = ds.rows_with(SplitRole::test);
    const auto enc = FeatureEncoder::fit(ds, train_rows);
    const auto classes = ds.class_labels();
    const auto y_all = ds.label_indices(classes);
    std::vector<std::size_t> y_train, y_test;
    for (auto r : train_rows) y_train.push_back(y_all[r]);
    for (auto r : test_rows) y_test.push_back(y_all[r]);
    const Matrix x_train = enc.encode(ds, train_rows);
    const Matrix x_test = enc.encode(ds, test_rows);

    TrainConfig cfg;
    cfg.batch.batch_size = std::min(o.batch_size, train_rows.size());
    cfg.batch.learning_rate = o.lr;
    cfg.batch.cd_steps = o.cd_k;
    cfg.batch.epochs = o.epochs;
    cfg.batch.rng_seed = o.seed;
    cfg.batch.exact_gradient = o.exact_grad;
    cfg.adaptive.theta_g = o.theta_g;
    cfg.adaptive.theta_a = o.theta_a;
    cfg.adaptive.theta_l1 = o.theta_l1;
    cfg.adaptive.theta_l2 = o.theta_l2;
    cfg.adaptive.max_layers = o.max_layers;
    cfg.adaptive.max_hidden = o.max_hidden;
    cfg.adaptive.warmup_epochs = o.warmup;
    cfg.adaptive.enable_generation = !o.no_generation;
    cfg.adaptive.enable_annihilation = !o.no_annihilation;
    cfg.initial_hidden = o.paper_defaults && !initial_hidden_given ? kPaperInitialHidden : o.initial_hidden;
    cfg.head_epochs = o.head_epochs;
    cfg.head_learning_rate = o.head_lr;

    Rng rng = Rng(o.seed).derive("train");
    auto result = train_dbn(x_train, y_train, classes, cfg, rng);
    auto& model = result.model;
    model.encoder = enc;
    model.label_name = o.label;

    const double test_acc = accuracy(model, x_test, y_test);
    json report = result.report.to_json();
    report["test_accuracy"] = test_acc;
    report["train_rows"] = train_rows.size();
    report["test_rows"] = test_rows.size();
    report["class_labels"] = classes;
    report["schema_hash"] = enc.schema_hash();

    run.emit("model.adbn", serialize_model(model));
    run.emit("train_report.json", report.dump(2) + "\n");
    run.emit("events.jsonl", events_to_jsonl(model.events));
    run.emit("train.csv", to_csv(subset(ds, train_rows)));
    run.emit("test.csv", to_csv(subset(ds, test_rows)));
    run.effective = {{"train_config", cfg.to_json()}, {"schema_hash", enc.schema_hash()}};

    auto& out = *run.out;
    out << "layers: " << model.layers.size() << " (hidden";
    for (const auto& l : model.layers) out << ' ' << l.hidden_count();
    out << ")\n";
    out << "structural events: " << model.events.size() << "\n";
    out << "train accuracy: " << fmt_fixed(result.report.train_accuracy) << "\n";
    out << "test accuracy: " << fmt_fixed(test_acc) << "\n";
    out << "model: " << (run.dir / "model.adbn").string() << "\n";
}

void cmd_eval(const Options& o, Run& run) {
    const auto model = load_model(o.model);
    const auto ds = load_for_model(model, o, true);
    const Matrix x = encoder_of(model).encode(ds, o.impute);
    const auto y = model_labels(model, ds);
    const std::size_t M = model.class_labels.size();
    std::vector<std::vector<std::size_t>> confusion(M, std::vector<std::size_t>(M, 0));
    std::size_t hits = 0;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        const auto p = predict(model, x.row(n)).class_index;
        ++confusion[y[n]][p];
        hits += p == y[n];
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(x.rows());
    const json report = {{"accuracy", acc}, {"rows", x.rows()}, {"class_labels", model.class_labels},
                         {"confusion", confusion}};
    run.emit("eval_report.json", report.dump(2) + "\n");

    auto& out = *run.out;
    out << "accuracy: " << fmt_fixed(acc) << " (" << x.rows() << " rows)\n";
    out << "confusion (rows: true, cols: predicted)\n";
    for (std::size_t a = 0; a < M; ++a) {
        out << "  " << model.class_labels[a] << ':';
        for (auto c : confusion[a]) out << ' ' << c;
        out << '\n';
    }
}

void cmd_roc(const Options& o, Run& run) {
    const auto model = load_model(o.model);
    const auto ds = load_for_model(model, o, true);
    const Matrix x = encoder_of(model).encode(ds, o.impute);
    const auto y = model_labels(model, ds);
    const std::string positive = resolve_positive(model, o.positive_class);
    const std::size_t pos = class_index(model, positive);
    Vector scores(x.rows());
    std::vector<int> labels(x.rows());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        scores[n] = forward(model, x.row(n)).probabilities[pos];
        labels[n] = y[n] == pos ? 1 : 0;
    }
    const auto curve = roc_curve(scores, labels);
    run.emit("roc.csv", roc_to_csv(curve));
    const json summary = {{"auc", curve.auc}, {"positive_class", positive}, {"rows", x.rows()},
                          {"points", curve.points.size()}};
    run.emit("roc.json", summary.dump(2) + "\n");
    run.effective = {{"positive_class", positive}};
    *run.out << "AUC " << fmt_fixed(curve.auc) << " (positive class '" << positive << "', " << x.rows()
             << " rows)\n";
}

void cmd_finetune(const Options& o, Run& run) {
    auto model = load_model(o.model);
    const auto ds = load_for_model(model, o, true);
    const Matrix x = encoder_of(model).encode(ds, o.impute);
    const auto y = model_labels(model, ds);
    FineTuneConfig cfg;
    cfg.theta_t = o.theta_t;
    cfg.theta_f = o.theta_f;
    cfg.w_correct = o.w_correct;
    cfg.w_wrong = o.w_wrong;
    cfg.firing_threshold = o.firing_threshold;
    for (const auto& s : split_list(o.layers, ',')) {
        std::size_t l = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), l);
        require(ec == std::errc{} && p == s.data() + s.size(), ErrorCode::parse_error, "bad layer index '" + s + "'");
        cfg.layers_to_patch.push_back(l);
    }
    const auto report = fine_tune(model, x, y, cfg);
    json rj = report.to_json();
    rj["config"] = {{"theta_t", cfg.theta_t}, {"theta_f", cfg.theta_f}, {"w_correct", cfg.w_correct},
                    {"w_wrong", cfg.w_wrong}, {"firing_threshold", cfg.firing_threshold},
                    {"layers", cfg.layers_to_patch}};
    run.emit("model.adbn", serialize_model(model));
    run.emit("finetune_report.json", rj.dump(2) + "\n");
    run.emit("finetune_report.txt", report.to_text());
    *run.out << report.to_text();
}

void cmd_extract(const Options& o, Run& run) {
    const auto model = load_model(o.model);
    const auto ds = load_for_model(model, o, false);
    const std::string positive = resolve_positive(model, o.positive_class);
    const auto banding = ProbabilityBanding::parse(o.bands);
    ExtractConfig cfg;
    cfg.tree.min_leaf = o.min_leaf;
    cfg.tree.max_depth = o.max_depth;
    cfg.tree.confidence = o.confidence;
    cfg.tree.prune = !o.no_prune;
    cfg.holdout_fraction = o.holdout;
    cfg.seed = o.seed;
    cfg.impute = o.impute;
    const auto rows = all_rows(ds.size());
    const auto ex = extract_rules(model, ds, rows, positive, banding, cfg);
    const auto band_labels = banding.band_labels();

    run.emit("rules.txt", c45::format_rules(ex.rules));
    run.emit("rules.json", ex.rules.to_json().dump(2) + "\n");
    run.emit("tree.txt", c45::format_tree(ex.tree, ex.rules.schema, band_labels));
    json fid = ex.fidelity.to_json(band_labels);
    fid["positive_class"] = positive;
    fid["banding"] = banding.to_json();
    run.emit("fidelity.json", fid.dump(2) + "\n");

    const auto cells = encoder_of(model).align(ds, ex.pairs.rows, o.impute);
    Dataset pairs;
    for (const auto& f : encoder_of(model).features()) pairs.features.push_back({f.name, f.kind, {}});
    pairs.label_name = "band";
    pairs.rows = cells;
    for (auto b : ex.pairs.table.y) pairs.labels.push_back(band_labels[b]);
    run.emit("pairs.csv", to_csv(pairs));

    run.effective = {{"positive_class", positive}, {"banding", banding.to_json()}};
    *run.out << ex.fidelity.to_text(band_labels);
    *run.out << "rules: " << (run.dir / "rules.txt").string() << "\n";
}

// Long name -> resolved value for every option of `sub`, defaults included.
std::vector<std::pair<std::string, std::string>> resolved_options(const CLI::App& sub) {
    static const std::vector<std::string> kPaths{"data", "model", "spec", "manifest"};
    std::vector<std::pair<std::string, std::string>> out;
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help" || name == "out") continue;
        std::string value;
        if (opt->get_type_size() == 0) {
            value = opt->count() > 0 ? "true" : "false";
        } else if (opt->count() > 0) {
            value = opt->results().front();
        } else {
            value = opt->get_default_str();
        }
        if (!value.empty() && std::find(kPaths.begin(), kPaths.end(), name) != kPaths.end()) {
            value = fs::absolute(value).lexically_normal().string();
        }
        out.emplace_back(name, value);
    }
    return out;
}

std::vector<std::string> to_argv(const std::string& command,
                                 const std::vector<std::pair<std::string, std::string>>& options,
                                 const fs::path& dir) {
    std::vector<std::string> argv{command};
    for (const auto& [name, value] : options) {
        if (value == "true" || value == "false") {
            if (value == "true") argv.push_back("--" + name);
            continue;
        }
        if (value.empty()) continue;
        argv.push_back("--" + name);
        argv.push_back(value);
    }
    argv.push_back("--out");
    argv.push_back(dir.string());
    return argv;
}

void configure_logging() {
    static const auto logger = [] {
        auto l = std::make_shared<spdlog::logger>("adbn", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        l->set_pattern("[adbn %l] %v");
        return l;
    }();
    const char* env = std::getenv("ADBN_LOG");
    logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();
    Options o;
    CLI::App app{"Adaptive deep belief network toolkit: train, evaluate, fine-tune and extract rules", "adbn"};
    app.set_version_flag("--version", ADBN_VERSION);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    auto add_seed = [&](CLI::App* s) { return s->add_option("--seed", o.seed, "Seed for every random stream"); };
    auto add_out = [&](CLI::App* s) {
        s->add_option("--out", o.out, "Run directory (default: runs/<timestamp>-seed<seed>)");
    };
    auto add_model_inputs = [&](CLI::App* s) {
        s->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
        s->add_option("--data", o.data, "CSV data file")->required()->check(CLI::ExistingFile);
        s->add_option("--label", o.label, "Label column (default: the one used in training)");
        s->add_flag("--impute", o.impute, "Fill missing feature columns with training means / modes");
    };

    auto* gen = app.add_subcommand("generate", "Write a planted-rule synthetic dataset");
    gen->add_option("--spec", o.spec, "Planted-rule spec file")->check(CLI::ExistingFile);
    gen->add_option("--features", o.features, "Feature count");
    gen->add_option("--rows", o.rows, "Row count");
    gen->add_option("--noise", o.noise, "Label flip rate in [0, 0.5)");
    gen->add_option("--rule", o.rules, "Rules separated by ';', e.g. \"f0 > 0.6 and f1 <= 0.4\"");
    CLI::Option* gen_seed = add_seed(gen);
    add_out(gen);

    auto* train = app.add_subcommand("train", "Train an adaptive DBN on a CSV file");
    train->add_option("--data", o.data, "CSV data file")->required()->check(CLI::ExistingFile);
    train->add_option("--label", o.label, "Label column")->required();
    add_seed(train);
    add_out(train);
    train->add_option("--train-fraction", o.train_fraction, "Stratified training share");
    CLI::Option* ih = train->add_option("--initial-hidden", o.initial_hidden, "Hidden units of each new layer");
    train->add_flag("--paper-defaults", o.paper_defaults, "Use 400 initial hidden units");
    train->add_option("--epochs", o.epochs, "Epochs per layer");
    train->add_option("--batch-size", o.batch_size, "Minibatch size (clamped to the training rows)");
    train->add_option("--lr", o.lr, "Learning rate");
    train->add_option("--cd-k", o.cd_k, "Gibbs steps of contrastive divergence");
    train->add_flag("--exact-grad", o.exact_grad, "Enumerated log-likelihood gradient (tiny layers only)");
    train->add_option("--theta-g", o.theta_g, "Neuron generation threshold");
    train->add_option("--theta-a", o.theta_a, "Neuron annihilation threshold");
    train->add_option("--theta-l1", o.theta_l1, "Layer generation threshold on walking distance");
    train->add_option("--theta-l2", o.theta_l2, "Layer generation threshold on energy");
    train->add_option("--max-layers", o.max_layers, "Layer cap");
    train->add_option("--max-hidden", o.max_hidden, "Hidden unit cap per layer");
    train->add_option("--warmup", o.warmup, "Epochs before structural changes begin");
    train->add_flag("--no-generation", o.no_generation, "Disable neuron generation");
    train->add_flag("--no-annihilation", o.no_annihilation, "Disable neuron annihilation");
    train->add_option("--head-epochs", o.head_epochs, "Softmax head epochs");
    train->add_option("--head-lr", o.head_lr, "Softmax head learning rate");
    train->add_option("--categorical", o.categorical, "Comma-separated columns forced categorical");
    train->add_option("--ordinal", o.ordinal, "Ordinal columns, e.g. \"urine=(-)|(+-)|(1+);grade=low|high\"");
    train->add_option("--ignore", o.ignore, "Comma-separated columns to drop");

    auto* eval = app.add_subcommand("eval", "Accuracy and confusion matrix of a model on a CSV file");
    add_model_inputs(eval);
    add_out(eval);

    auto* roc = app.add_subcommand("roc", "ROC curve and AUC for one class");
    add_model_inputs(roc);
    roc->add_option("--positive-class", o.positive_class, "Class scored as positive");
    add_out(roc);

    auto* ft = app.add_subcommand("finetune", "Patch neurons that fire only for correct or only for wrong samples");
    add_model_inputs(ft);
    ft->add_option("--theta-t", o.theta_t, "Ratio threshold for correct-only neurons");
    ft->add_option("--theta-f", o.theta_f, "Ratio threshold for wrong-only neurons");
    ft->add_option("--w-correct", o.w_correct, "Weight written into correct-only neurons");
    ft->add_option("--w-wrong", o.w_wrong, "Weight written into wrong-only neurons");
    ft->add_option("--firing-threshold", o.firing_threshold, "Activation at which a neuron counts as fired");
    ft->add_option("--layers", o.layers, "Comma-separated layer indices (default: all)");
    add_out(ft);

    auto* ex = app.add_subcommand("extract", "Extract IF-THEN rules for banded model outputs with C4.5");
    add_model_inputs(ex);
    ex->add_option("--positive-class", o.positive_class, "Class whose probability is banded");
    ex->add_option("--bands", o.bands, "Ascending cut points in (0, 1)");
    add_seed(ex);
    ex->add_flag("--no-prune", o.no_prune, "Keep the unpruned tree");
    ex->add_option("--confidence", o.confidence, "Pruning confidence");
    ex->add_option("--min-leaf", o.min_leaf, "Minimum cases in two branches of a split");
    ex->add_option("--max-depth", o.max_depth, "Tree depth cap");
    ex->add_option("--holdout", o.holdout, "Held-out share of the pairs for fidelity");
    add_out(ex);

    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay->add_option("--manifest", o.manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
    add_out(replay);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "adbn: error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (replay->parsed()) {
            const json manifest = json::parse(read_file(o.manifest));
            auto argv = manifest.at("argv").get<std::vector<std::string>>();
            const fs::path dir = o.out.empty() ? default_run_dir(manifest.value("seed", std::uint64_t{0})) : fs::path(o.out);
            auto it = std::find(argv.begin(), argv.end(), "--out");
            require(it != argv.end() && std::next(it) != argv.end(), ErrorCode::format_error,
                    "manifest argv has no --out");
            *std::next(it) = fs::absolute(dir).lexically_normal().string();
            spdlog::info("replaying '{}' into {}", argv.front(), dir.string());
            return run_cli(argv, out, err);
        }

        const CLI::App* sub = app.get_subcommands().front();
        Run run;
        run.command = sub->get_name();
        run.out = &out;
        run.dir = fs::absolute(o.out.empty() ? default_run_dir(o.seed) : fs::path(o.out)).lexically_normal();
        fs::create_directories(run.dir);
        const auto options = resolved_options(*sub);
        const auto started = std::chrono::steady_clock::now();
        const std::string started_at = timestamp("%Y-%m-%dT%H:%M:%SZ");

        if (sub == gen) cmd_generate(o, gen_seed->count() > 0, run);
        else if (sub == train) cmd_train(o, ih->count() > 0, run);
        else if (sub == eval) cmd_eval(o, run);
        else if (sub == roc) cmd_roc(o, run);
        else if (sub == ft) cmd_finetune(o, run);
        else if (sub == ex) cmd_extract(o, run);

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json config = json::object();
        for (const auto& [k, v] : options) config[k] = v;
        json inputs = json::object();
        for (const char* k : {"data", "model", "spec"}) {
            if (config.contains(k) && !config[k].get<std::string>().empty()) inputs[k] = config[k];
        }
        const json manifest = {{"command", run.command},
                               {"argv", to_argv(run.command, options, run.dir)},
                               {"config", config},
                               {"effective", run.effective},
                               {"seed", config.contains("seed") ? std::stoull(config["seed"].get<std::string>()) : 0},
                               {"inputs", inputs},
                               {"run_dir", run.dir.string()},
                               {"outputs", run.outputs},
                               {"version", ADBN_VERSION},
                               {"started_at", started_at},
                               {"duration_seconds", seconds}};
        write_file_atomic(run.dir / "manifest.json", manifest.dump(2) + "\n");
        spdlog::info("{} finished in {:.3f} s; manifest at {}", run.command, seconds, (run.dir / "manifest.json").string());
        return 0;
    } catch (const Error& e) {
        err << "adbn: error: " << e.what() << "\n";
    } catch (const json::exception& e) {
        err << "adbn: error: malformed JSON: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "adbn: error: " << e.what() << "\n";
    }
    return 2;
}

}  // namespace adbn::cli
