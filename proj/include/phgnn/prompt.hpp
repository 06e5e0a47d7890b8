#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phgnn/eval.hpp"
#include "phgnn/hgnn.hpp"

namespace phgnn {

/// k-NN hyperedges among prompt tokens; zero hyperedges when unstructured.
Hypergraph build_prompt_structure(const Matrix& tokens, std::size_t k_p, bool structured = true);

struct PromptedGraph {
    Hypergraph graph;  // N + |P| nodes
    Matrix features;   // X stacked over the token rows
};

/// Manipulated hypergraph: E, then E_p shifted onto the token nodes, then one
/// hyperedge per token linking it to all N data nodes.
PromptedGraph insert_prompt(const Hypergraph& g, const Matrix& x, const Hypergraph& prompt_structure, const Matrix& tokens);

/// Incidence-only part of insert_prompt, for callers that supply features separately.
Hypergraph insert_prompt_structure(const Hypergraph& g, const Hypergraph& prompt_structure);

struct TuneConfig {
    Strategy strategy = Strategy::Phgnn;
    std::size_t epochs = 200;
    double lr = 3e-4;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    std::size_t num_prompts = 16;
    std::optional<std::size_t> prompt_k;  // default min(3, |P| - 1)
    std::size_t gpf_plus_basis = 32;
    std::size_t classes = 2;

    std::size_t effective_prompt_k() const;
};

/// Values of the tunable parameters plus the prompt structure that was in use
/// when they were evaluated.
struct TuneSnapshot {
    std::vector<Matrix> values;
    Hypergraph prompt_structure;
};

struct TuneResult {
    Strategy strategy = Strategy::Phgnn;
    TuneSnapshot best;
    Metrics best_metrics;
    std::size_t best_epoch = 0;  // 1-based; 0 means the initial state
    std::vector<double> train_loss;
    std::vector<double> validation_bacc;
    std::size_t tunable_count = 0;
    std::vector<std::string> warnings;
};

/// Owns one tuning run: the graph, labels, masks, a private copy of the
/// encoder, the head, and whatever prompt parameters the strategy adds.
class Tuner {
public:
    Tuner(Hypergraph g, Matrix x, std::vector<int> labels, std::vector<bool> train_mask,
          std::vector<bool> validation_mask, HgnnStack encoder, TuneConfig config);

    TuneResult run();

    std::vector<Parameter*> tunable();
    TuneSnapshot snapshot(const Hypergraph& structure);
    void restore(const TuneSnapshot& s);
    /// Validation metrics of the current parameters under `structure`.
    Metrics evaluate(const Hypergraph& structure);
    double train_loss(const Hypergraph& structure);
    Var loss(Tape& tape, const Hypergraph& structure);
    /// Logits for every node of the graph the encoder sees (N + |P| for prompts).
    Matrix logits(const Hypergraph& structure);
    Hypergraph current_structure() const;

    HgnnStack& encoder() noexcept { return encoder_; }
    ClassifierHead& head() noexcept { return head_; }
    Parameter& prompts() noexcept { return prompts_; }
    const TuneConfig& config() const noexcept { return config_; }

private:
    Var forward(Tape& tape, const Hypergraph& structure);
    bool uses_prompt_nodes() const;

    Hypergraph graph_;
    Matrix features_;
    std::vector<int> labels_;
    std::vector<bool> train_;
    std::vector<bool> validation_;
    HgnnStack encoder_;
    TuneConfig config_;
    ClassifierHead head_;
    Parameter prompts_;  // |P| x d, 1 x d for gpf, b x d basis for gpf_plus
    Matrix base_operator_;
    std::vector<std::string> warnings_;
};

/// Prompt tuning over a frozen encoder; an encoder with trainable parameters
/// is rejected. `config.strategy` must be phgnn or phgnn_no_structure.
TuneResult prompt_tune(const Hypergraph& g, const Matrix& x, std::span<const int> labels,
                       const std::vector<bool>& train_mask, const std::vector<bool>& validation_mask,
                       const HgnnStack& frozen_encoder, const TuneConfig& config);

/// Runs `strategy` from a copy of the pretrained encoder; the caller's encoder
/// is never modified. Only finetune unfreezes the copy.
TuneResult tune_with_strategy(Strategy strategy, const Hypergraph& g, const Matrix& x, std::span<const int> labels,
                              const std::vector<bool>& train_mask, const std::vector<bool>& validation_mask,
                              const HgnnStack& pretrained_encoder, TuneConfig config);

}  // namespace phgnn
