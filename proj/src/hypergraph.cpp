#include "phgnn/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "phgnn/error.hpp"

namespace phgnn {

Hypergraph::Hypergraph(Matrix incidence, std::vector<double> edge_weights)
    : incidence_(std::move(incidence)), weights_(std::move(edge_weights)) {
    if (weights_.size() != incidence_.cols())
        fail(ErrorKind::Shape, "hypergraph: " + std::to_string(weights_.size()) + " weights for " +
                                   std::to_string(incidence_.cols()) + " hyperedges");
    for (double x : incidence_.values())
        if (x != 0.0 && x != 1.0) fail(ErrorKind::InvalidArgument, "hypergraph: incidence entries must be 0 or 1");
    for (std::size_t e = 0; e < num_edges(); ++e) {
        if (edge_size(e) == 0) fail(ErrorKind::InvalidArgument, "hypergraph: hyperedge " + std::to_string(e) + " is empty");
        if (!(weights_[e] > 0.0) || !std::isfinite(weights_[e]))
            fail(ErrorKind::InvalidArgument, "hypergraph: hyperedge " + std::to_string(e) + " has non-positive weight");
    }
}

Hypergraph::Hypergraph(Matrix incidence) : Hypergraph(incidence, std::vector<double>(incidence.cols(), 1.0)) {}

Hypergraph Hypergraph::edgeless(std::size_t num_nodes) { return Hypergraph(Matrix(num_nodes, 0), {}); }

std::size_t Hypergraph::edge_size(std::size_t e) const {
    std::size_t n = 0;
    for (std::size_t v = 0; v < num_nodes(); ++v) n += incidence_(v, e) != 0.0;
    return n;
}

std::vector<std::size_t> Hypergraph::members(std::size_t e) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < num_nodes(); ++v)
        if (incidence_(v, e) != 0.0) out.push_back(v);
    return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

Hypergraph knn_hyperedges_subset(const Matrix& features, const std::vector<bool>& present, std::size_t k, bool pairwise) {
    const std::size_t n = features.rows();
    if (n == 0 || features.cols() == 0) fail(ErrorKind::InvalidArgument, "knn_hyperedges: empty feature matrix");
    if (present.size() != n) fail(ErrorKind::Shape, "knn_hyperedges: presence vector length mismatch");
    if (!features.all_finite()) fail(ErrorKind::InvalidArgument, "knn_hyperedges: non-finite feature values");

    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < n; ++i)
        if (present[i]) nodes.push_back(i);
    if (k >= nodes.size())
        fail(ErrorKind::InvalidArgument, "knn_hyperedges: k = " + std::to_string(k) + " requires more than " +
                                             std::to_string(k) + " nodes, have " + std::to_string(nodes.size()));

    const std::size_t edges = pairwise ? k * nodes.size() : nodes.size();
    Matrix h(n, edges);
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(nodes.size());
    std::size_t col = 0;
    for (std::size_t centre : nodes) {
        ranked.clear();
        for (std::size_t j : nodes)
            if (j != centre) ranked.emplace_back(squared_distance(features.row(centre), features.row(j)), j);
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
        if (pairwise) {
            for (std::size_t q = 0; q < k; ++q, ++col) {
                h(centre, col) = 1.0;
                h(ranked[q].second, col) = 1.0;
            }
        } else {
            h(centre, col) = 1.0;
            for (std::size_t q = 0; q < k; ++q) h(ranked[q].second, col) = 1.0;
            ++col;
        }
    }
    return Hypergraph(std::move(h));
}

Hypergraph knn_hyperedges(const Matrix& features, std::size_t k, bool pairwise) {
    return knn_hyperedges_subset(features, std::vector<bool>(features.rows(), true), k, pairwise);
}

Hypergraph coequal_fuse(std::span<const Hypergraph> parts) {
    require(!parts.empty(), "coequal_fuse: no hypergraphs given");
    const std::size_t n = parts.front().num_nodes();
    std::vector<Matrix> incidences;
    std::vector<double> weights;
    for (const auto& p : parts) {
        if (p.num_nodes() != n)
            fail(ErrorKind::Shape, "coequal_fuse: node counts differ (" + std::to_string(p.num_nodes()) + " vs " +
                                       std::to_string(n) + ")");
        incidences.push_back(p.incidence());
        weights.insert(weights.end(), p.edge_weights().begin(), p.edge_weights().end());
    }
    Matrix h = hconcat(incidences);
    if (h.rows() != n) h = Matrix(n, 0);
    return Hypergraph(std::move(h), std::move(weights));
}

Matrix fuse_features(std::span<const Matrix> modality_features) {
    require(!modality_features.empty(), "fuse_features: no modalities given");
    const std::size_t n = modality_features.front().rows();
    for (const auto& m : modality_features)
        if (m.rows() != n)
            fail(ErrorKind::Shape, "fuse_features: row counts differ (" + std::to_string(m.rows()) + " vs " +
                                       std::to_string(n) + ")");
    return hconcat(modality_features);
}

Matrix propagation_operator(const Hypergraph& g) {
    const std::size_t n = g.num_nodes();
    const Matrix& h = g.incidence();
    std::vector<double> node_degree(n, 0.0);
    Matrix op(n, n);
    std::vector<std::size_t> members;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        members.clear();
        for (std::size_t v = 0; v < n; ++v)
            if (h(v, e) != 0.0) members.push_back(v);
        const double w = g.edge_weights()[e];
        const double c = w / static_cast<double>(members.size());
        for (std::size_t i : members) {
            node_degree[i] += w;
            for (std::size_t j : members) op(i, j) += c;
        }
    }
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        if (node_degree[v] > 0.0) inv_sqrt[v] = 1.0 / std::sqrt(node_degree[v]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) op(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    return op;
}

}  // namespace phgnn
