#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "aquifer/learners.hpp"

namespace aquifer {

namespace {

constexpr int kModelVersion = 1;

using ordered_json = nlohmann::ordered_json;

class PayloadWriter {
public:
    explicit PayloadWriter(std::ofstream& out, const std::string& path) : out_(out), path_(path) {}
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed: " + path_);
    }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void f64s(const std::vector<double>& v) { raw(v.data(), v.size() * 8); }
    void i32(std::int32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }

private:
    std::ofstream& out_;
    const std::string& path_;
};

class PayloadReader {
public:
    explicit PayloadReader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError("model payload truncated: " + path_);
    }
    std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
    double f64() { double v; raw(&v, 8); return v; }
    void f64s(std::vector<double>& v, std::size_t n) { v.resize(n); raw(v.data(), n * 8); }
    std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
    float f32() { float v; raw(&v, 4); return v; }

private:
    std::ifstream& in_;
    const std::string& path_;
};

const char* class_weight_name(ClassWeight cw) {
    return cw == ClassWeight::Balanced ? "balanced" : "none";
}
ClassWeight class_weight_from(const std::string& s) {
    if (s == "balanced") return ClassWeight::Balanced;
    if (s == "none") return ClassWeight::None;
    throw FormatError("unknown class_weight: " + s);
}

ordered_json sgd_config_json(const SgdConfig& c) {
    ordered_json j;
    j["loss"] = c.loss == SgdLoss::Logistic ? "logistic" : "modified_huber";
    j["l2_alpha"] = c.l2_alpha;
    j["class_weight"] = class_weight_name(c.class_weight);
    j["epochs"] = c.epochs;
    j["eta0"] = c.eta0;
    j["seed"] = c.seed;
    j["default_threshold"] = c.default_threshold;
    return j;
}

SgdConfig sgd_config_from(const nlohmann::json& j) {
    SgdConfig c;
    const std::string loss = j.at("loss").get<std::string>();
    if (loss == "logistic") c.loss = SgdLoss::Logistic;
    else if (loss == "modified_huber") c.loss = SgdLoss::ModifiedHuber;
    else throw FormatError("unknown SGD loss: " + loss);
    c.l2_alpha = j.at("l2_alpha").get<double>();
    c.class_weight = class_weight_from(j.at("class_weight").get<std::string>());
    c.epochs = j.at("epochs").get<int>();
    c.eta0 = j.at("eta0").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.default_threshold = j.at("default_threshold").get<double>();
    return c;
}

ordered_json rf_config_json(const RfConfig& c) {
    ordered_json j;
    j["n_estimators"] = c.n_estimators;
    j["max_depth"] = c.max_depth;
    j["min_samples_leaf"] = c.min_samples_leaf;
    j["min_samples_split"] = c.min_samples_split;
    j["class_weight"] = class_weight_name(c.class_weight);
    j["bootstrap"] = c.bootstrap;
    j["seed"] = c.seed;
    j["default_threshold"] = c.default_threshold;
    return j;
}

RfConfig rf_config_from(const nlohmann::json& j) {
    RfConfig c;
    c.n_estimators = j.at("n_estimators").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    c.min_samples_split = j.at("min_samples_split").get<int>();
    c.class_weight = class_weight_from(j.at("class_weight").get<std::string>());
    c.bootstrap = j.at("bootstrap").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.default_threshold = j.at("default_threshold").get<double>();
    return c;
}

ordered_json mlp_config_json(const MlpConfig& c) {
    ordered_json j;
    j["hidden_layer_sizes"] = c.hidden_layer_sizes;
    j["max_iter"] = c.max_iter;
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_eps"] = c.adam_eps;
    j["batch_size"] = c.batch_size;
    j["early_stop_tol"] = c.early_stop_tol;
    j["patience"] = c.patience;
    j["class_weight"] = class_weight_name(c.class_weight);
    j["seed"] = c.seed;
    j["default_threshold"] = c.default_threshold;
    return j;
}

MlpConfig mlp_config_from(const nlohmann::json& j) {
    MlpConfig c;
    c.hidden_layer_sizes = j.at("hidden_layer_sizes").get<std::vector<int>>();
    c.max_iter = j.at("max_iter").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.early_stop_tol = j.at("early_stop_tol").get<double>();
    c.patience = j.at("patience").get<int>();
    c.class_weight = class_weight_from(j.at("class_weight").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.default_threshold = j.at("default_threshold").get<double>();
    return c;
}

void write_standardizer(PayloadWriter& w, const Standardizer& s) {
    w.u64(s.mean.size());
    w.f64s(s.mean);
    w.f64s(s.inv_std);
}

Standardizer read_standardizer(PayloadReader& r) {
    Standardizer s;
    const std::size_t d = r.u64();
    r.f64s(s.mean, d);
    r.f64s(s.inv_std, d);
    return s;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    ordered_json header;
    header["magic"] = "aquifer-model";
    header["version"] = kModelVersion;
    header["kind"] = model.kind();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);

    if (const auto* linear = dynamic_cast<const LinearModel*>(&model)) {
        header["config"] = sgd_config_json(linear->config);
        header["feature_dim"] = linear->weights.size();
        const std::string line = header.dump() + "\n";
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        PayloadWriter w(out, path);
        write_standardizer(w, linear->standardizer);
        w.f64s(linear->weights);
        w.f64(linear->bias);
    } else if (const auto* forest = dynamic_cast<const ForestModel*>(&model)) {
        header["config"] = rf_config_json(forest->config);
        header["feature_dim"] = forest->n_features;
        const std::string line = header.dump() + "\n";
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        PayloadWriter w(out, path);
        w.u64(forest->trees.size());
        for (const auto& tree : forest->trees) {
            w.u64(tree.size());
            for (const TreeNode& n : tree) {
                w.i32(n.feature);
                w.f32(n.threshold);
                w.i32(n.left);
                w.i32(n.right);
                w.f64(n.leaf_prob);
            }
        }
    } else if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
        header["config"] = mlp_config_json(mlp->config);
        header["feature_dim"] = mlp->input_dim;
        const std::string line = header.dump() + "\n";
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        PayloadWriter w(out, path);
        write_standardizer(w, mlp->standardizer);
        w.u64(mlp->weights.size());
        for (std::size_t l = 0; l < mlp->weights.size(); ++l) {
            w.u64(mlp->weights[l].size());
            w.f64s(mlp->weights[l]);
            w.u64(mlp->biases[l].size());
            w.f64s(mlp->biases[l]);
        }
    } else {
        throw FormatError("unknown model kind: " + model.kind());
    }
    if (!out) throw IoError("write failed: " + path);
}

std::unique_ptr<TrainedModel> load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing model header: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed model header in " + path + ": " + e.what());
    }
    if (header.value("magic", "") != "aquifer-model")
        throw FormatError("not a model file: " + path);
    if (header.value("version", -1) != kModelVersion)
        throw FormatError("unsupported model version in " + path);

    const std::string kind = header.at("kind").get<std::string>();
    PayloadReader r(in, path);
    const std::size_t feature_dim = header.at("feature_dim").get<std::size_t>();

    if (kind == "linear") {
        auto m = std::make_unique<LinearModel>();
        m->config = sgd_config_from(header.at("config"));
        m->standardizer = read_standardizer(r);
        r.f64s(m->weights, feature_dim);
        m->bias = r.f64();
        if (m->standardizer.mean.size() != feature_dim)
            throw FormatError("standardizer size mismatch: " + path);
        return m;
    }
    if (kind == "forest") {
        auto m = std::make_unique<ForestModel>();
        m->config = rf_config_from(header.at("config"));
        m->n_features = feature_dim;
        const std::size_t n_trees = r.u64();
        m->trees.resize(n_trees);
        for (auto& tree : m->trees) {
            const std::size_t n_nodes = r.u64();
            tree.resize(n_nodes);
            for (TreeNode& n : tree) {
                n.feature = r.i32();
                n.threshold = r.f32();
                n.left = r.i32();
                n.right = r.i32();
                n.leaf_prob = r.f64();
                if (n.feature >= static_cast<std::int32_t>(feature_dim))
                    throw FormatError("tree node feature index out of range: " + path);
            }
        }
        return m;
    }
    if (kind == "mlp") {
        auto m = std::make_unique<MlpModel>();
        m->config = mlp_config_from(header.at("config"));
        m->input_dim = feature_dim;
        m->standardizer = read_standardizer(r);
        const std::size_t layers = r.u64();
        m->weights.resize(layers);
        m->biases.resize(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            r.f64s(m->weights[l], r.u64());
            r.f64s(m->biases[l], r.u64());
        }
        return m;
    }
    throw FormatError("unknown model kind '" + kind + "' in " + path);
}

}  // namespace aquifer
