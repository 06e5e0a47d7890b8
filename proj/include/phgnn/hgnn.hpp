#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "phgnn/autodiff.hpp"
#include "phgnn/hypergraph.hpp"

namespace phgnn {

/// One hypergraph convolution: act(Op * X * weight + bias).
struct HgnnLayer {
    Parameter weight;
    Parameter bias;
    Activation activation = Activation::Relu;

    std::size_t input_dim() const { return weight.value.rows(); }
    std::size_t output_dim() const { return weight.value.cols(); }
};

class HgnnStack {
public:
    HgnnStack() = default;
    /// Layers chain dims[0] -> dims[1] -> ... ; relu on every layer but the
    /// last, which uses `last`. Weights are Glorot-uniform from `rng`, biases 0.
    HgnnStack(const std::vector<std::size_t>& dims, Activation last, const std::string& prefix, std::mt19937_64& rng);
    explicit HgnnStack(std::vector<HgnnLayer> layers);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t num_layers() const noexcept { return layers_.size(); }
    const std::vector<HgnnLayer>& layers() const noexcept { return layers_; }
    std::vector<HgnnLayer>& layers() noexcept { return layers_; }

    void set_frozen(bool frozen);
    bool frozen() const;

    std::vector<Parameter*> parameters();
    std::size_t parameter_count() const;

    /// Records the stack on a tape; `op` is the |V|x|V| propagation operator.
    Var forward(Tape& tape, Var op, Var x);

private:
    std::vector<HgnnLayer> layers_;
};

Matrix hgnn_forward(const Hypergraph& g, const Matrix& x, HgnnStack& stack);

struct ClassifierHead {
    ClassifierHead() = default;
    ClassifierHead(std::size_t latent_dim, std::size_t classes, std::mt19937_64& rng);

    Parameter weight;
    Parameter bias;

    std::size_t parameter_count() const { return weight.count() + bias.count(); }
    std::vector<Parameter*> parameters() { return {&weight, &bias}; }
    Var forward(Tape& tape, Var z);
};

/// logits = Z * W + bias.
Matrix classify(const Matrix& z, ClassifierHead& head);

/// Mean softmax cross-entropy over the masked rows.
double cross_entropy_masked(const Matrix& logits, std::span<const int> labels, const std::vector<bool>& mask);

enum class Strategy { Finetune, LinearProbe, Phgnn, PhgnnNoStructure, Gpf, GpfPlus };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);
const std::vector<Strategy>& all_strategies();

/// Dimensions that determine every strategy's trainable set.
struct ModelShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> encoder_dims;  // hidden..., latent
    std::size_t classes = 2;
    std::size_t num_prompts = 16;
    std::size_t gpf_plus_basis = 32;
};

struct TunableCount {
    std::size_t encoder = 0;
    std::size_t head = 0;
    std::size_t prompt = 0;
    std::size_t total() const { return encoder + head + prompt; }
};

TunableCount count_tunable_params(Strategy strategy, const ModelShape& shape);

/// Versioned structured-text encoder checkpoint. Values serialize with
/// shortest round-trip formatting, so write/read is bit-exact.
struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_digest;
};

std::string encoder_checkpoint_text(const HgnnStack& encoder, const CheckpointMeta& meta);
HgnnStack parse_encoder_checkpoint(const std::string& text, CheckpointMeta* meta = nullptr);

}  // namespace phgnn
