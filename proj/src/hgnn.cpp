#include "phgnn/hgnn.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "phgnn/error.hpp"

namespace phgnn {

namespace {

constexpr int kCheckpointVersion = 1;

Matrix glorot(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(in, out);
    for (double& x : w.values()) x = dist(rng);
    return w;
}

std::string_view activation_name(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::Relu;
    if (s == "identity") return Activation::Identity;
    fail(ErrorKind::Io, "checkpoint: unknown activation '" + std::string(s) + "'");
}

}  // namespace

HgnnStack::HgnnStack(const std::vector<std::size_t>& dims, Activation last, const std::string& prefix,
                     std::mt19937_64& rng) {
    require(dims.size() >= 2, "hgnn: a stack needs at least an input and an output dimension");
    for (std::size_t d : dims) require(d > 0, "hgnn: layer dimensions must be positive");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::string name = prefix + ".layer" + std::to_string(i);
        HgnnLayer layer{Parameter(name + ".weight", glorot(dims[i], dims[i + 1], rng)),
                        Parameter(name + ".bias", Matrix(1, dims[i + 1])),
                        i + 2 == dims.size() ? last : Activation::Relu};
        layers_.push_back(std::move(layer));
    }
}

HgnnStack::HgnnStack(std::vector<HgnnLayer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "hgnn: empty stack");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.value.rows() != 1 || l.bias.value.cols() != l.output_dim())
            fail(ErrorKind::Shape, "hgnn: bias of layer " + std::to_string(i) + " is " + l.bias.value.shape_string());
        if (i > 0 && layers_[i - 1].output_dim() != l.input_dim())
            fail(ErrorKind::Shape, "hgnn: layer " + std::to_string(i) + " input dim does not chain");
    }
}

std::size_t HgnnStack::input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }
std::size_t HgnnStack::output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }

void HgnnStack::set_frozen(bool frozen) {
    for (auto& l : layers_) {
        l.weight.trainable = !frozen;
        l.bias.trainable = !frozen;
    }
}

bool HgnnStack::frozen() const {
    return std::none_of(layers_.begin(), layers_.end(),
                        [](const HgnnLayer& l) { return l.weight.trainable || l.bias.trainable; });
}

std::vector<Parameter*> HgnnStack::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::size_t HgnnStack::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.count() + l.bias.count();
    return n;
}

Var HgnnStack::forward(Tape& tape, Var op, Var x) {
    if (op.rows() != x.rows() || op.cols() != x.rows())
        fail(ErrorKind::Shape, "hgnn_forward: operator " + op.value().shape_string() + " for " +
                                   std::to_string(x.rows()) + " node rows");
    if (x.cols() != input_dim())
        fail(ErrorKind::Shape, "hgnn_forward: feature dim " + std::to_string(x.cols()) + " but stack expects " +
                                   std::to_string(input_dim()));
    Var h = x;
    for (auto& layer : layers_) {
        Var w = tape.param(layer.weight);
        // Associate so the n x n product touches the narrower side.
        Var mixed = layer.input_dim() <= layer.output_dim() ? ad::matmul(ad::matmul(op, h), w)
                                                            : ad::matmul(op, ad::matmul(h, w));
        h = ad::activate(ad::add_row(mixed, tape.param(layer.bias)), layer.activation);
    }
    return h;
}

Matrix hgnn_forward(const Hypergraph& g, const Matrix& x, HgnnStack& stack) {
    if (x.rows() != g.num_nodes())
        fail(ErrorKind::Shape, "hgnn_forward: " + std::to_string(x.rows()) + " feature rows for " +
                                   std::to_string(g.num_nodes()) + " nodes");
    Tape tape;
    Var out = stack.forward(tape, tape.constant(propagation_operator(g)), tape.constant(x));
    return out.value();
}

ClassifierHead::ClassifierHead(std::size_t latent_dim, std::size_t classes, std::mt19937_64& rng)
    : weight("head.weight", glorot(latent_dim, classes, rng)), bias("head.bias", Matrix(1, classes)) {
    require(classes >= 2, "classifier: need at least two classes");
}

Var ClassifierHead::forward(Tape& tape, Var z) {
    if (z.cols() != weight.value.rows())
        fail(ErrorKind::Shape, "classify: latent " + z.value().shape_string() + " with head " + weight.value.shape_string());
    return ad::add_row(ad::matmul(z, tape.param(weight)), tape.param(bias));
}

Matrix classify(const Matrix& z, ClassifierHead& head) {
    Tape tape;
    return head.forward(tape, tape.constant(z)).value();
}

double cross_entropy_masked(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask) {
    Tape tape;
    return ad::softmax_cross_entropy(tape.constant(logits), labels, mask).value()(0, 0);
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : all_strategies())
        if (strategy_name(s) == name) return s;
    fail(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Finetune: return "finetune";
        case Strategy::LinearProbe: return "linear_probe";
        case Strategy::Phgnn: return "phgnn";
        case Strategy::PhgnnNoStructure: return "phgnn_no_structure";
        case Strategy::Gpf: return "gpf";
        case Strategy::GpfPlus: return "gpf_plus";
    }
    return "unknown";
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> kAll{Strategy::Finetune, Strategy::Gpf,    Strategy::GpfPlus,
                                            Strategy::LinearProbe, Strategy::PhgnnNoStructure, Strategy::Phgnn};
    return kAll;
}

TunableCount count_tunable_params(Strategy strategy, const ModelShape& shape) {
    require(!shape.encoder_dims.empty(), "count_tunable_params: encoder dims missing");
    TunableCount c;
    const std::size_t latent = shape.encoder_dims.back();
    c.head = latent * shape.classes + shape.classes;
    switch (strategy) {
        case Strategy::Finetune: {
            std::size_t in = shape.input_dim;
            for (std::size_t out : shape.encoder_dims) {
                c.encoder += in * out + out;
                in = out;
            }
            break;
        }
        case Strategy::LinearProbe: break;
        case Strategy::Phgnn:
        case Strategy::PhgnnNoStructure: c.prompt = shape.num_prompts * shape.input_dim; break;
        case Strategy::Gpf: c.prompt = shape.input_dim; break;
        case Strategy::GpfPlus: c.prompt = shape.gpf_plus_basis * shape.input_dim; break;
    }
    return c;
}

std::string encoder_checkpoint_text(const HgnnStack& encoder, const CheckpointMeta& meta) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : encoder.layers()) {
        layers.push_back({{"activation", activation_name(l.activation)},
                          {"input_dim", l.input_dim()},
                          {"output_dim", l.output_dim()},
                          {"weight", l.weight.value.storage()},
                          {"bias", l.bias.value.storage()}});
    }
    nlohmann::json doc{{"format", "phgnn-encoder-checkpoint"},
                       {"version", kCheckpointVersion},
                       {"seed", meta.seed},
                       {"config_digest", meta.config_digest},
                       {"layers", layers}};
    return doc.dump(1) + "\n";
}

HgnnStack parse_encoder_checkpoint(const std::string& text, CheckpointMeta* meta) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, std::string("checkpoint: malformed: ") + e.what());
    }
    try {
        if (doc.at("format") != "phgnn-encoder-checkpoint") fail(ErrorKind::Io, "checkpoint: wrong format tag");
        if (doc.at("version").get<int>() != kCheckpointVersion)
            fail(ErrorKind::Io, "checkpoint: unsupported version " + doc.at("version").dump());
        std::vector<HgnnLayer> layers;
        for (const auto& l : doc.at("layers")) {
            const auto in = l.at("input_dim").get<std::size_t>();
            const auto out = l.at("output_dim").get<std::size_t>();
            const std::string name = "encoder.layer" + std::to_string(layers.size());
            layers.push_back(HgnnLayer{Parameter(name + ".weight", Matrix(in, out, l.at("weight").get<std::vector<double>>())),
                                       Parameter(name + ".bias", Matrix(1, out, l.at("bias").get<std::vector<double>>())),
                                       parse_activation(l.at("activation").get<std::string>())});
        }
        if (meta) {
            meta->seed = doc.at("seed").get<std::uint64_t>();
            meta->config_digest = doc.at("config_digest").get<std::string>();
        }
        return HgnnStack(std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Io, std::string("checkpoint: ") + e.what());
    }
}

}  // namespace phgnn
