#include "phgnn/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phgnn/error.hpp"
#include "phgnn/optim.hpp"

namespace phgnn {

namespace {

void check_rows(std::size_t n, std::span<const std::size_t> rows, const char* op) {
    for (std::size_t r : rows)
        if (r >= n)
            fail(ErrorKind::InvalidArgument, std::string(op) + ": row index " + std::to_string(r) + " out of range for " +
                                                 std::to_string(n) + " rows");
}

Matrix replace(const Matrix& x, std::span<const std::size_t> rows, const Matrix& token, const char* op) {
    check_rows(x.rows(), rows, op);
    if (token.rows() != 1 || token.cols() != x.cols())
        fail(ErrorKind::Shape, std::string(op) + ": token " + token.shape_string() + " for rows of width " +
                                   std::to_string(x.cols()));
    Matrix out = x;
    for (std::size_t r : rows) std::copy(token.values().begin(), token.values().end(), out.row(r).begin());
    return out;
}

std::vector<bool> row_mask(std::size_t n, std::span<const std::size_t> rows) {
    std::vector<bool> mask(n, false);
    for (std::size_t r : rows) mask[r] = true;
    return mask;
}

}  // namespace

std::vector<std::size_t> sample_mask(std::size_t num_nodes, double mask_ratio, std::mt19937_64& rng) {
    require(mask_ratio >= 0.0 && mask_ratio < 1.0, "sample_mask: mask ratio must lie in [0, 1)");
    const auto count = static_cast<std::size_t>(std::floor(mask_ratio * static_cast<double>(num_nodes)));
    std::vector<std::size_t> all(num_nodes);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> out;
    out.reserve(count);
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
    return out;
}

Matrix apply_input_mask(const Matrix& x, std::span<const std::size_t> rows, const Matrix& token) {
    return replace(x, rows, token, "apply_input_mask");
}

Matrix remask_latent(const Matrix& z, std::span<const std::size_t> rows, const Matrix& token) {
    return replace(z, rows, token, "remask_latent");
}

Var replace_rows(Tape& tape, Var x, std::span<const std::size_t> rows, Var token) {
    const std::size_t n = x.rows();
    check_rows(n, rows, "replace_rows");
    if (token.rows() != 1 || token.cols() != x.cols())
        fail(ErrorKind::Shape, "replace_rows: token " + token.value().shape_string() + " for rows of width " +
                                   std::to_string(x.cols()));
    Matrix keep = Matrix::identity(n);
    Matrix select(n, 1);
    for (std::size_t r : rows) {
        keep(r, r) = 0.0;
        select(r, 0) = 1.0;
    }
    return ad::add(ad::matmul(tape.constant(std::move(keep)), x), ad::matmul(tape.constant(std::move(select)), token));
}

Var sce_loss(Tape& tape, Var original, Var reconstructed, std::span<const std::size_t> rows, double gamma) {
    if (rows.empty()) fail(ErrorKind::InvalidArgument, "sce_loss: no masked nodes: loss undefined");
    require(gamma >= 1.0, "sce_loss: gamma must be at least 1");
    check_rows(original.rows(), rows, "sce_loss");
    Var cos = ad::row_cosine(original, reconstructed);
    Var distance = ad::add(tape.constant(Matrix(cos.rows(), 1, 1.0)), ad::scale(cos, -1.0));
    return ad::masked_mean(ad::power(distance, gamma), row_mask(original.rows(), rows));
}

double sce_loss(const Matrix& original, const Matrix& reconstructed, std::span<const std::size_t> rows, double gamma) {
    Tape tape;
    return sce_loss(tape, tape.constant(original), tape.constant(reconstructed), rows, gamma).value()(0, 0);
}

PretrainResult pretrain(const Hypergraph& g, const Matrix& x, const PretrainConfig& config) {
    if (x.rows() != g.num_nodes())
        fail(ErrorKind::Shape, "pretrain: " + std::to_string(x.rows()) + " feature rows for " +
                                   std::to_string(g.num_nodes()) + " nodes");
    require(!config.encoder_dims.empty(), "pretrain: encoder dims missing");
    require(config.mask_ratio > 0.0 && config.mask_ratio < 1.0,
            "pretrain: mask ratio must lie in (0, 1); with no masked nodes the loss is undefined");
    require(static_cast<std::size_t>(std::floor(config.mask_ratio * static_cast<double>(x.rows()))) >= 1,
            "pretrain: mask ratio selects no nodes for this graph size");
    require(config.gamma >= 1.0, "pretrain: gamma must be at least 1");

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> dims{x.cols()};
    dims.insert(dims.end(), config.encoder_dims.begin(), config.encoder_dims.end());
    const std::size_t latent = dims.back();

    PretrainResult result{HgnnStack(dims, Activation::Identity, "encoder", rng),
                          HgnnStack({latent, x.cols()}, Activation::Identity, "decoder", rng),
                          MaskTokens{Parameter("mask.input_token", Matrix(1, x.cols())),
                                     Parameter("mask.latent_token", Matrix(1, latent))},
                          {}};

    std::vector<Parameter*> params = result.encoder.parameters();
    for (Parameter* p : result.decoder.parameters()) params.push_back(p);
    params.push_back(&result.tokens.input_token);
    params.push_back(&result.tokens.latent_token);

    const Matrix op = propagation_operator(g);
    AdamWState state;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<std::size_t> masked = sample_mask(x.rows(), config.mask_ratio, rng);
        Tape tape;
        Var op_v = tape.constant(op);
        Var features = tape.constant(x);
        Var masked_in = replace_rows(tape, features, masked, tape.param(result.tokens.input_token));
        Var z = result.encoder.forward(tape, op_v, masked_in);
        Var z_masked = replace_rows(tape, z, masked, tape.param(result.tokens.latent_token));
        Var recon = result.decoder.forward(tape, op_v, z_masked);
        Var loss = sce_loss(tape, features, recon, masked, config.gamma);
        result.loss_curve.push_back(tape.backward(loss));
        adamw_step(params, state, config.lr, config.weight_decay);
    }
    return result;
}

}  // namespace phgnn
