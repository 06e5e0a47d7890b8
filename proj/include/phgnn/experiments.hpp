#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phgnn/config.hpp"
#include "phgnn/data.hpp"
#include "phgnn/eval.hpp"
#include "phgnn/hgnn.hpp"
#include "phgnn/prompt.hpp"

namespace phgnn {

struct PretrainArtifacts {
    HgnnStack encoder;
    std::vector<double> loss_curve;
    std::string checkpoint;       // encoder checkpoint text
    std::string loss_curve_text;  // "epoch loss" per line, one line per epoch
};

/// Fused hypergraph over the selected modalities, then masked-autoencoder pretraining.
PretrainArtifacts run_pretrain(const MultimodalDataset& dataset, const RunConfig& config,
                               std::span<const std::size_t> modality_subset = {});

/// One strategy evaluated on every fold with identical splits and seeds.
struct CrossValidation {
    std::string label;
    Strategy strategy = Strategy::Phgnn;
    std::size_t num_prompts = 0;
    MetricsReport metrics;
    std::size_t tunable_count = 0;
    std::vector<TuneResult> folds;
};

CrossValidation cross_validate(const FusedGraph& fused, std::span<const int> labels, const HgnnStack& encoder,
                               const RunConfig& config, Strategy strategy, std::size_t num_prompts);

struct Report {
    std::vector<CrossValidation> rows;
    std::string text;       // aligned plain-text table
    std::string json;       // machine-readable table
    std::string snapshots;  // best tunable-parameter snapshot per fold (tune only)
};

Report run_tune(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config);
Report run_ablate_prompts(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config);
Report run_ablate_modalities(const MultimodalDataset& dataset, const RunConfig& config);
Report run_compare_strategies(const MultimodalDataset& dataset, const HgnnStack& encoder, const RunConfig& config);

}  // namespace phgnn
