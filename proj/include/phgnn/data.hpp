#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phgnn/hypergraph.hpp"

namespace phgnn {

struct Modality {
    Matrix features;            // |V| x d_i; rows of absent subjects are all zero
    std::vector<bool> present;  // length |V|
};

struct MultimodalDataset {
    std::string name;
    std::vector<Modality> modalities;
    std::vector<int> labels;  // 0/1, class 1 is positive

    std::size_t num_nodes() const noexcept { return labels.size(); }
    std::size_t num_modalities() const noexcept { return modalities.size(); }
    std::vector<std::size_t> dims() const;

    /// Throws if modalities disagree on |V|, labels are not binary, values are
    /// non-finite, or some subject has no modality present.
    void validate() const;
};

struct SyntheticConfig {
    std::size_t n = 200;
    std::vector<std::size_t> dims{16, 16, 16};
    double class_sep = 3.0;  // centroid distance in units of noise_std
    double missing_rate = 0.0;
    double noise_std = 1.0;
    std::uint64_t seed = 0;
    std::string name = "synthetic";
};

/// Two Gaussian classes per modality. Each modality has a random base point;
/// the class centroids sit at base +/- (class_sep * noise_std / 2) along a
/// random unit direction. Labels are balanced and randomly ordered.
MultimodalDataset generate_synthetic(const SyntheticConfig& config);

/// Dataset directory: meta (JSON), modality_<i>.csv, present_<i>.csv, labels.csv
/// with i counted from 0. Floats use shortest round-trip formatting.
void save_dataset(const MultimodalDataset& dataset, const std::filesystem::path& dir);
MultimodalDataset load_dataset(const std::filesystem::path& dir);

struct FusedGraph {
    Hypergraph graph;
    Matrix features;
};

/// Per-modality k-NN hypergraphs over the subjects present in that modality,
/// concatenated in modality order, together with the concatenated features.
/// An empty `modality_subset` selects every modality.
FusedGraph build_fused_hypergraph(const MultimodalDataset& dataset, std::size_t k, bool pairwise = false,
                                  std::span<const std::size_t> modality_subset = {});

struct FoldSplit {
    std::size_t k_folds = 0;
    std::vector<std::size_t> fold_of;  // validation fold of each node

    std::vector<bool> train_mask(std::size_t fold) const;
    std::vector<bool> validation_mask(std::size_t fold) const;
};

/// Stratified assignment: within each class, a seeded shuffle is dealt
/// round-robin across folds, continuing where the previous class stopped.
FoldSplit split_folds(std::span<const int> labels, std::size_t k_folds, std::uint64_t seed);

}  // namespace phgnn
