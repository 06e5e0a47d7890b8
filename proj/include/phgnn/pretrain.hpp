#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "phgnn/hgnn.hpp"

namespace phgnn {

/// Learnable replacements for masked input rows and re-masked latent rows.
struct MaskTokens {
    Parameter input_token;   // 1 x d
    Parameter latent_token;  // 1 x d_z
};

struct PretrainConfig {
    double mask_ratio = 0.75;
    double gamma = 2.0;
    std::size_t epochs = 200;
    double lr = 3e-4;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    std::vector<std::size_t> encoder_dims{128, 64};  // hidden..., latent
};

struct PretrainResult {
    HgnnStack encoder;
    HgnnStack decoder;
    MaskTokens tokens;
    std::vector<double> loss_curve;  // one SCE value per epoch, before that epoch's update
};

/// floor(mask_ratio * num_nodes) distinct node indices drawn uniformly without
/// replacement, returned in ascending order.
std::vector<std::size_t> sample_mask(std::size_t num_nodes, double mask_ratio, std::mt19937_64& rng);

/// Rows listed in `rows` are replaced by `token`; every other row is copied.
Matrix apply_input_mask(const Matrix& x, std::span<const std::size_t> rows, const Matrix& token);
Matrix remask_latent(const Matrix& z, std::span<const std::size_t> rows, const Matrix& token);

/// Differentiable row replacement: keep * x + sel * token, where keep is the
/// diagonal of unmasked rows and sel the indicator column of masked rows.
Var replace_rows(Tape& tape, Var x, std::span<const std::size_t> rows, Var token);

/// Mean over `rows` of (1 - cos(x_i, x'_i))^gamma.
double sce_loss(const Matrix& original, const Matrix& reconstructed, std::span<const std::size_t> rows, double gamma);
Var sce_loss(Tape& tape, Var original, Var reconstructed, std::span<const std::size_t> rows, double gamma);

PretrainResult pretrain(const Hypergraph& g, const Matrix& x, const PretrainConfig& config);

}  // namespace phgnn
