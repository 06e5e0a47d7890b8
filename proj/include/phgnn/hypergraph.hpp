#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phgnn/matrix.hpp"

namespace phgnn {

/// Undirected hypergraph over num_nodes() nodes stored as a dense binary
/// node-by-hyperedge incidence matrix with one positive weight per hyperedge.
class Hypergraph {
public:
    Hypergraph() = default;
    /// Validates: entries in {0,1}, every column non-empty, weights positive.
    Hypergraph(Matrix incidence, std::vector<double> edge_weights);
    explicit Hypergraph(Matrix incidence);

    /// A hypergraph with nodes but no hyperedges.
    static Hypergraph edgeless(std::size_t num_nodes);

    std::size_t num_nodes() const noexcept { return incidence_.rows(); }
    std::size_t num_edges() const noexcept { return incidence_.cols(); }
    const Matrix& incidence() const noexcept { return incidence_; }
    const std::vector<double>& edge_weights() const noexcept { return weights_; }

    std::size_t edge_size(std::size_t e) const;
    std::vector<std::size_t> members(std::size_t e) const;

    friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

private:
    Matrix incidence_;
    std::vector<double> weights_;
};

/// k-NN hyperedges by Euclidean distance, ties broken by lower node index.
///
/// Non-pairwise mode creates one hyperedge per node holding that node and its
/// k nearest neighbours (cardinality k+1). Pairwise mode creates k two-node
/// hyperedges per node instead, which makes the hypergraph behave as a k-NN
/// graph.
Hypergraph knn_hyperedges(const Matrix& features, std::size_t k, bool pairwise = false);

/// As knn_hyperedges, restricted to the nodes flagged in `present`: only they
/// get a centroid hyperedge and only they are neighbour candidates. Nodes not
/// present have all-zero incidence rows.
Hypergraph knn_hyperedges_subset(const Matrix& features, const std::vector<bool>& present, std::size_t k,
                                 bool pairwise = false);

/// Column-wise concatenation of incidence matrices over a shared node set.
Hypergraph coequal_fuse(std::span<const Hypergraph> parts);

/// Column-wise concatenation of per-modality feature matrices.
Matrix fuse_features(std::span<const Matrix> modality_features);

/// D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}. Isolated nodes give zero rows.
Matrix propagation_operator(const Hypergraph& g);

}  // namespace phgnn
