#include "adbn/dbn.hpp"
#include "adbn/binary_io.hpp"
#include "adbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace adbn {

namespace {

constexpr std::string_view kMagic = "ADBNMODL";

void softmax_inplace(Vector& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

nlohmann::json batch_to_json(const BatchConfig& b) {
    return {{"batch_size", b.batch_size}, {"learning_rate", b.learning_rate}, {"cd_steps", b.cd_steps},
            {"epochs", b.epochs}, {"rng_seed", b.rng_seed}, {"exact_gradient", b.exact_gradient}};
}

nlohmann::json adaptive_to_json(const AdaptiveConfig& a) {
    return {{"theta_g", a.theta_g}, {"theta_a", a.theta_a}, {"theta_l1", a.theta_l1}, {"theta_l2", a.theta_l2},
            {"alpha_wd", a.alpha_wd}, {"alpha_e", a.alpha_e}, {"noise_mu", a.noise_mu},
            {"noise_sigma", a.noise_sigma}, {"gamma_c", a.gamma_c}, {"gamma_w", a.gamma_w},
            {"warmup_epochs", a.warmup_epochs}, {"max_hidden", a.max_hidden}, {"max_layers", a.max_layers},
            {"enable_generation", a.enable_generation}, {"enable_annihilation", a.enable_annihilation}};
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Vector SoftmaxHead::probabilities(std::span<const double> h) const {
    require(h.size() == input_count(), ErrorCode::dimension_mismatch,
            "hidden axis: head expects " + std::to_string(input_count()) + " inputs, got " + std::to_string(h.size()));
    Vector z(class_count());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = bias[k] + dot(weights.row(k), h);
    softmax_inplace(z);
    return z;
}

nlohmann::json TrainConfig::to_json() const {
    return {{"batch", batch_to_json(batch)}, {"adaptive", adaptive_to_json(adaptive)},
            {"initial_hidden", initial_hidden}, {"init_stddev", init_stddev}, {"head_epochs", head_epochs},
            {"head_learning_rate", head_learning_rate}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        if (j.contains("batch")) {
            const auto& b = j.at("batch");
            read_field(b, "batch_size", c.batch.batch_size);
            read_field(b, "learning_rate", c.batch.learning_rate);
            read_field(b, "cd_steps", c.batch.cd_steps);
            read_field(b, "epochs", c.batch.epochs);
            read_field(b, "rng_seed", c.batch.rng_seed);
            read_field(b, "exact_gradient", c.batch.exact_gradient);
        }
        if (j.contains("adaptive")) {
            const auto& a = j.at("adaptive");
            read_field(a, "theta_g", c.adaptive.theta_g);
            read_field(a, "theta_a", c.adaptive.theta_a);
            read_field(a, "theta_l1", c.adaptive.theta_l1);
            read_field(a, "theta_l2", c.adaptive.theta_l2);
            read_field(a, "alpha_wd", c.adaptive.alpha_wd);
            read_field(a, "alpha_e", c.adaptive.alpha_e);
            read_field(a, "noise_mu", c.adaptive.noise_mu);
            read_field(a, "noise_sigma", c.adaptive.noise_sigma);
            read_field(a, "gamma_c", c.adaptive.gamma_c);
            read_field(a, "gamma_w", c.adaptive.gamma_w);
            read_field(a, "warmup_epochs", c.adaptive.warmup_epochs);
            read_field(a, "max_hidden", c.adaptive.max_hidden);
            read_field(a, "max_layers", c.adaptive.max_layers);
            read_field(a, "enable_generation", c.adaptive.enable_generation);
            read_field(a, "enable_annihilation", c.adaptive.enable_annihilation);
        }
        read_field(j, "initial_hidden", c.initial_hidden);
        read_field(j, "init_stddev", c.init_stddev);
        read_field(j, "head_epochs", c.head_epochs);
        read_field(j, "head_learning_rate", c.head_learning_rate);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed training config: ") + e.what());
    }
    return c;
}

std::size_t DbnModel::input_count() const {
    require(!layers.empty(), ErrorCode::invalid_argument, "model has no layers");
    return layers.front().visible_count();
}

void DbnModel::validate() const {
    require(!layers.empty(), ErrorCode::invalid_argument, "model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].validate();
        if (l > 0) {
            require(layers[l].visible_count() == layers[l - 1].hidden_count(), ErrorCode::dimension_mismatch,
                    "layer axis: layer " + std::to_string(l) + " has " + std::to_string(layers[l].visible_count()) +
                        " visible units but layer " + std::to_string(l - 1) + " has " +
                        std::to_string(layers[l - 1].hidden_count()) + " hidden units");
        }
    }
    require(head.class_count() >= 2, ErrorCode::invalid_argument, "softmax head needs at least two classes");
    require(head.weights.rows() == head.class_count(), ErrorCode::dimension_mismatch,
            "class axis: head weight rows differ from bias length");
    require(head.input_count() == layers.back().hidden_count(), ErrorCode::dimension_mismatch,
            "hidden axis: head input " + std::to_string(head.input_count()) + " != top layer width " +
                std::to_string(layers.back().hidden_count()));
    require(class_labels.size() == head.class_count(), ErrorCode::dimension_mismatch,
            "class axis: label list length differs from head");
    if (encoder) {
        require(encoder->width() == input_count(), ErrorCode::dimension_mismatch,
                "visible axis: encoder width " + std::to_string(encoder->width()) + " != model input " +
                    std::to_string(input_count()));
    }
}

ForwardResult forward(const DbnModel& model, std::span<const double> x) {
    require(!model.layers.empty(), ErrorCode::invalid_argument, "model has no layers");
    if (x.size() != model.input_count()) {
        fail(ErrorCode::dimension_mismatch, "visible axis: expected " + std::to_string(model.input_count()) +
                                                " inputs, got " + std::to_string(x.size()));
    }
    ForwardResult out;
    out.activations.emplace_back(x.begin(), x.end());
    for (const auto& layer : model.layers) {
        out.activations.push_back(hidden_conditional(layer, out.activations.back()));
    }
    out.probabilities = model.head.probabilities(out.activations.back());
    return out;
}

Matrix propagate_layer(const RbmParams& layer, const Matrix& data) { return hidden_conditional(layer, data); }

Matrix propagate(const DbnModel& model, const Matrix& data) {
    Matrix rep = data;
    for (const auto& layer : model.layers) rep = propagate_layer(layer, rep);
    return rep;
}

Prediction predict(const DbnModel& model, std::span<const double> x) {
    auto fr = forward(model, x);
    std::size_t best = 0;
    for (std::size_t k = 1; k < fr.probabilities.size(); ++k) {
        if (fr.probabilities[k] > fr.probabilities[best]) best = k;
    }
    return {best, std::move(fr.probabilities)};
}

double accuracy(const DbnModel& model, const Matrix& data, std::span<const std::size_t> labels) {
    require(labels.size() == data.rows(), ErrorCode::dimension_mismatch, "label count differs from row count");
    require(data.rows() > 0, ErrorCode::invalid_argument, "accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t n = 0; n < data.rows(); ++n) hits += predict(model, data.row(n)).class_index == labels[n];
    return static_cast<double>(hits) / static_cast<double>(data.rows());
}

std::vector<double> train_head(SoftmaxHead& head, const Matrix& features, std::span<const std::size_t> labels,
                               std::size_t epochs, double learning_rate) {
    require(features.rows() == labels.size() && features.rows() > 0, ErrorCode::dimension_mismatch,
            "head training needs one label per feature row");
    require(features.cols() == head.input_count(), ErrorCode::dimension_mismatch, "hidden axis: head input mismatch");
    const std::size_t M = head.class_count();
    const std::size_t J = head.input_count();
    const std::size_t N = features.rows();
    const double scale = 1.0 / static_cast<double>(N);

    // Descent runs on standardized activations z = (h - mu) / sd and the
    // result is folded back into the head, so the model stays a plain
    // softmax over h.
    Vector mu(J, 0.0), sd(J, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < J; ++j) mu[j] += features(n, j) * scale;
    }
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < J; ++j) sd[j] += (features(n, j) - mu[j]) * (features(n, j) - mu[j]) * scale;
    }
    for (auto& s : sd) s = s > 1e-16 ? std::sqrt(s) : 1.0;
    Matrix z(N, J);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < J; ++j) z(n, j) = (features(n, j) - mu[j]) / sd[j];
    }
    SoftmaxHead zh{Matrix(M, J), head.bias};
    for (std::size_t k = 0; k < M; ++k) {
        for (std::size_t j = 0; j < J; ++j) {
            zh.weights(k, j) = head.weights(k, j) * sd[j];
            zh.bias[k] += head.weights(k, j) * mu[j];
        }
    }

    std::vector<double> losses;
    losses.reserve(epochs);
    Matrix grad_w(M, J);
    Vector grad_b(M);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            auto h = z.row(n);
            Vector p = zh.probabilities(h);
            loss -= std::log(std::max(p[labels[n]], 1e-300));
            p[labels[n]] -= 1.0;
            for (std::size_t k = 0; k < M; ++k) {
                grad_b[k] += p[k];
                auto gw = grad_w.row(k);
                for (std::size_t j = 0; j < J; ++j) gw[j] += p[k] * h[j];
            }
        }
        for (std::size_t k = 0; k < M; ++k) {
            zh.bias[k] -= learning_rate * scale * grad_b[k];
            auto w = zh.weights.row(k);
            auto gw = grad_w.row(k);
            for (std::size_t j = 0; j < J; ++j) w[j] -= learning_rate * scale * gw[j];
        }
        losses.push_back(loss * scale);
    }
    for (std::size_t k = 0; k < M; ++k) {
        head.bias[k] = zh.bias[k];
        for (std::size_t j = 0; j < J; ++j) {
            head.weights(k, j) = zh.weights(k, j) / sd[j];
            head.bias[k] -= head.weights(k, j) * mu[j];
        }
    }
    return losses;
}

TrainResult train_dbn(const Matrix& data, std::span<const std::size_t> labels,
                      const std::vector<std::string>& class_labels, const TrainConfig& cfg, Rng& rng) {
    require(data.rows() > 0, ErrorCode::invalid_argument, "training data is empty");
    require(labels.size() == data.rows(), ErrorCode::dimension_mismatch, "one label per data row required");
    require(class_labels.size() >= 2, ErrorCode::degenerate_data, "classification needs at least two classes");
    for (auto y : labels) {
        require(y < class_labels.size(), ErrorCode::invalid_argument, "label index out of range");
    }
    require(std::set<std::size_t>(labels.begin(), labels.end()).size() >= 2, ErrorCode::degenerate_data,
            "training labels contain a single class");
    require(cfg.initial_hidden > 0, ErrorCode::invalid_argument, "initial hidden count must be positive");
    cfg.adaptive.validate();
    cfg.batch.validate(data.rows());

    TrainResult result;
    DbnModel& model = result.model;
    model.class_labels = class_labels;
    model.train_config = cfg;

    Matrix rep = data;
    std::vector<double> wd_per_layer, energy_per_layer;
    for (std::size_t l = 0;; ++l) {
        Rng layer_rng = rng.derive("layer-" + std::to_string(l));
        Rng init_rng = layer_rng.derive("init");
        auto init = RbmParams::random(rep.cols(), cfg.initial_hidden, init_rng, cfg.init_stddev);
        auto trained = train_adaptive_rbm(std::move(init), rep, cfg.batch, cfg.adaptive, layer_rng, l);

        LayerSummary summary{cfg.initial_hidden, trained.params.hidden_count(), trained.wd_total, trained.energy_term};
        wd_per_layer.push_back(summary.wd_total);
        energy_per_layer.push_back(summary.energy_term);
        result.report.layer_epochs.push_back(std::move(trained.epochs));
        model.events.insert(model.events.end(), trained.events.begin(), trained.events.end());
        model.layer_summaries.push_back(summary);
        model.layers.push_back(std::move(trained.params));

        if (!check_layer_generation(wd_per_layer, energy_per_layer, cfg.adaptive)) break;
        double wd_sum = 0.0;
        for (double w : wd_per_layer) wd_sum += cfg.adaptive.alpha_wd * w;
        model.events.push_back({EventKind::layer_spawn, cfg.batch.epochs, l + 1, std::nullopt, wd_sum});
        rep = propagate_layer(model.layers.back(), rep);
    }
    rep = propagate_layer(model.layers.back(), rep);

    model.head.weights = Matrix(class_labels.size(), model.layers.back().hidden_count());
    model.head.bias.assign(class_labels.size(), 0.0);
    result.report.head_loss = train_head(model.head, rep, labels, cfg.head_epochs, cfg.head_learning_rate);
    model.validate();

    result.report.layers = model.layer_summaries;
    result.report.events = model.events;
    result.report.train_accuracy = accuracy(model, data, labels);
    return result;
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json layers_j = nlohmann::json::array();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        nlohmann::json epochs = nlohmann::json::array();
        if (l < layer_epochs.size()) {
            for (const auto& e : layer_epochs[l]) {
                epochs.push_back({{"reconstruction_error", e.reconstruction_error},
                                  {"mean_energy", e.mean_energy},
                                  {"hidden_count", e.hidden_bias_delta.size()}});
            }
        }
        layers_j.push_back({{"initial_hidden", layers[l].initial_hidden},
                            {"final_hidden", layers[l].final_hidden},
                            {"wd_total", layers[l].wd_total},
                            {"energy_term", layers[l].energy_term},
                            {"epochs", epochs}});
    }
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : events) ev.push_back(event_to_json(e));
    return {{"layers", layers_j}, {"events", ev}, {"head_loss_final", head_loss.empty() ? 0.0 : head_loss.back()},
            {"train_accuracy", train_accuracy}};
}

nlohmann::json event_to_json(const StructuralEvent& e) {
    nlohmann::json j{{"kind", to_string(e.kind)}, {"epoch", e.epoch}, {"layer", e.layer_index},
                     {"trigger_value", e.trigger_value}};
    j["neuron"] = e.neuron_index ? nlohmann::json(*e.neuron_index) : nlohmann::json(nullptr);
    return j;
}

StructuralEvent event_from_json(const nlohmann::json& j) {
    try {
        StructuralEvent e;
        e.kind = event_kind_from_string(j.at("kind").get<std::string>());
        e.epoch = j.at("epoch").get<std::size_t>();
        e.layer_index = j.at("layer").get<std::size_t>();
        e.trigger_value = j.at("trigger_value").get<double>();
        if (!j.at("neuron").is_null()) e.neuron_index = j.at("neuron").get<std::size_t>();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::format_error, std::string("malformed event: ") + ex.what());
    }
}

std::string events_to_jsonl(std::span<const StructuralEvent> events) {
    std::string out;
    for (const auto& e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<StructuralEvent> events_from_jsonl(const std::string& text) {
    std::vector<StructuralEvent> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            fail(ErrorCode::format_error, std::string("malformed event line: ") + ex.what());
        }
    }
    return out;
}

std::string serialize_model(const DbnModel& model) {
    model.validate();
    nlohmann::json meta;
    meta["class_labels"] = model.class_labels;
    meta["label_name"] = model.label_name;
    meta["encoder"] = model.encoder ? model.encoder->to_json() : nlohmann::json(nullptr);
    meta["train_config"] = model.train_config.to_json();
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& s : model.layer_summaries) {
        summaries.push_back({{"initial_hidden", s.initial_hidden}, {"final_hidden", s.final_hidden},
                             {"wd_total", s.wd_total}, {"energy_term", s.energy_term}});
    }
    meta["layer_summaries"] = summaries;
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : model.events) ev.push_back(event_to_json(e));
    meta["events"] = ev;
    const std::string meta_text = meta.dump();

    ByteWriter w;
    w.bytes(kMagic);
    w.u32(kModelFormatVersion);
    w.u64(meta_text.size());
    w.bytes(meta_text);
    w.u64(model.layers.size());
    for (const auto& layer : model.layers) {
        w.u64(layer.visible_count());
        w.u64(layer.hidden_count());
        w.f64s(layer.visible_bias);
        w.f64s(layer.hidden_bias);
        w.f64s(layer.weights.data());
    }
    w.u64(model.head.class_count());
    w.u64(model.head.input_count());
    w.f64s(model.head.weights.data());
    w.f64s(model.head.bias);
    w.u64(fnv1a64(w.buffer()));
    return w.buffer();
}

DbnModel deserialize_model(std::string_view bytes) {
    ByteReader r(bytes);
    require(bytes.size() >= kMagic.size() && r.bytes(kMagic.size()) == kMagic, ErrorCode::format_error,
            "not a model file (bad magic)");
    const auto version = r.u32();
    require(version == kModelFormatVersion, ErrorCode::format_error,
            "unsupported model format version " + std::to_string(version) + " (expected " +
                std::to_string(kModelFormatVersion) + ")");
    require(bytes.size() >= 8, ErrorCode::format_error, "model file truncated");
    const std::uint64_t stored = ByteReader(bytes.substr(bytes.size() - 8)).u64();
    require(stored == fnv1a64(bytes.substr(0, bytes.size() - 8)), ErrorCode::format_error,
            "model file checksum mismatch (truncated or corrupt)");

    DbnModel model;
    const auto meta_len = r.u64();
    require(meta_len <= r.remaining(), ErrorCode::format_error, "model metadata length exceeds file size");
    try {
        const auto meta = nlohmann::json::parse(r.bytes(meta_len));
        model.class_labels = meta.at("class_labels").get<std::vector<std::string>>();
        model.label_name = meta.value("label_name", std::string{});
        if (!meta.at("encoder").is_null()) model.encoder = FeatureEncoder::from_json(meta.at("encoder"));
        model.train_config = TrainConfig::from_json(meta.at("train_config"));
        for (const auto& s : meta.at("layer_summaries")) {
            model.layer_summaries.push_back({s.at("initial_hidden").get<std::size_t>(),
                                             s.at("final_hidden").get<std::size_t>(), s.at("wd_total").get<double>(),
                                             s.at("energy_term").get<double>()});
        }
        for (const auto& e : meta.at("events")) model.events.push_back(event_from_json(e));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed model metadata: ") + e.what());
    }

    auto dim = [&](std::uint64_t max_elements_hint) {
        const auto d = r.u64();
        require(d <= max_elements_hint, ErrorCode::format_error, "implausible dimension in model file");
        return static_cast<std::size_t>(d);
    };
    const std::size_t limit = bytes.size();
    const auto layer_count = dim(limit);
    for (std::size_t l = 0; l < layer_count; ++l) {
        const auto I = dim(limit), J = dim(limit);
        require(I * J <= limit, ErrorCode::format_error, "implausible layer size in model file");
        RbmParams p(I, J);
        r.f64s(p.visible_bias);
        r.f64s(p.hidden_bias);
        r.f64s(p.weights.data());
        model.layers.push_back(std::move(p));
    }
    const auto M = dim(limit), J = dim(limit);
    require(M * J <= limit, ErrorCode::format_error, "implausible head size in model file");
    model.head.weights = Matrix(M, J);
    model.head.bias.assign(M, 0.0);
    r.f64s(model.head.weights.data());
    r.f64s(model.head.bias);
    require(r.remaining() == 8, ErrorCode::format_error, "trailing bytes in model file");
    model.validate();
    return model;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCode::io_error, "cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        require(out.good(), ErrorCode::io_error, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorCode::io_error, "cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_error, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void save_model(const DbnModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

DbnModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace adbn
