#include "phgnn/prompt.hpp"

#include <algorithm>
#include <random>

#include "phgnn/error.hpp"
#include "phgnn/optim.hpp"

namespace phgnn {

Hypergraph build_prompt_structure(const Matrix& tokens, std::size_t k_p, bool structured) {
    if (k_p >= tokens.rows() && tokens.rows() > 0)
        fail(ErrorKind::InvalidArgument, "build_prompt_structure: k_p = " + std::to_string(k_p) + " needs more than " +
                                             std::to_string(k_p) + " tokens, have " + std::to_string(tokens.rows()));
    if (!structured || tokens.rows() == 0) return Hypergraph::edgeless(tokens.rows());
    return knn_hyperedges(tokens, k_p);
}

Hypergraph insert_prompt_structure(const Hypergraph& g, const Hypergraph& prompt_structure) {
    const std::size_t n = g.num_nodes();
    const std::size_t p = prompt_structure.num_nodes();
    if (p == 0) return g;
    const std::size_t e = g.num_edges();
    const std::size_t ep = prompt_structure.num_edges();
    Matrix h(n + p, e + ep + p);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < e; ++c) h(v, c) = g.incidence()(v, c);
    for (std::size_t v = 0; v < p; ++v)
        for (std::size_t c = 0; c < ep; ++c) h(n + v, e + c) = prompt_structure.incidence()(v, c);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t v = 0; v < n; ++v) h(v, e + ep + i) = 1.0;
        h(n + i, e + ep + i) = 1.0;
    }
    std::vector<double> weights = g.edge_weights();
    weights.insert(weights.end(), prompt_structure.edge_weights().begin(), prompt_structure.edge_weights().end());
    weights.resize(e + ep + p, 1.0);
    return Hypergraph(std::move(h), std::move(weights));
}

PromptedGraph insert_prompt(const Hypergraph& g, const Matrix& x, const Hypergraph& prompt_structure, const Matrix& tokens) {
    if (x.rows() != g.num_nodes())
        fail(ErrorKind::Shape, "insert_prompt: " + std::to_string(x.rows()) + " feature rows for " +
                                   std::to_string(g.num_nodes()) + " nodes");
    if (tokens.rows() != prompt_structure.num_nodes())
        fail(ErrorKind::Shape, "insert_prompt: " + std::to_string(tokens.rows()) + " tokens for a prompt structure of " +
                                   std::to_string(prompt_structure.num_nodes()) + " nodes");
    if (tokens.rows() > 0 && tokens.cols() != x.cols())
        fail(ErrorKind::Shape, "insert_prompt: token dim " + std::to_string(tokens.cols()) + " != feature dim " +
                                   std::to_string(x.cols()));
    return {insert_prompt_structure(g, prompt_structure), vconcat(x, tokens)};
}

std::size_t TuneConfig::effective_prompt_k() const {
    if (prompt_k) return *prompt_k;
    return num_prompts == 0 ? 0 : std::min<std::size_t>(3, num_prompts - 1);
}

namespace {

bool is_prompt_strategy(Strategy s) { return s == Strategy::Phgnn || s == Strategy::PhgnnNoStructure; }

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = dist(rng);
    return m;
}

}  // namespace

Tuner::Tuner(Hypergraph g, Matrix x, std::vector<int> labels, std::vector<bool> train_mask,
             std::vector<bool> validation_mask, HgnnStack encoder, TuneConfig config)
    : graph_(std::move(g)),
      features_(std::move(x)),
      labels_(std::move(labels)),
      train_(std::move(train_mask)),
      validation_(std::move(validation_mask)),
      encoder_(std::move(encoder)),
      config_(config) {
    const std::size_t n = graph_.num_nodes();
    if (features_.rows() != n)
        fail(ErrorKind::Shape, "tune: " + std::to_string(features_.rows()) + " feature rows for " + std::to_string(n) + " nodes");
    if (labels_.size() != n || train_.size() != n || validation_.size() != n)
        fail(ErrorKind::Shape, "tune: labels and masks must have one entry per node");
    if (encoder_.input_dim() != features_.cols())
        fail(ErrorKind::Shape, "tune: encoder expects " + std::to_string(encoder_.input_dim()) + " features, data has " +
                                   std::to_string(features_.cols()));
    bool any_train = false, any_val = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (train_[i] && validation_[i]) fail(ErrorKind::InvalidArgument, "tune: node " + std::to_string(i) + " is in both masks");
        any_train |= train_[i];
        any_val |= validation_[i];
    }
    if (!any_train) fail(ErrorKind::InvalidArgument, "tune: training mask is empty");
    if (!any_val) fail(ErrorKind::InvalidArgument, "tune: validation mask is empty");
    require(config_.lr > 0.0, "tune: learning rate must be positive");
    require(config_.weight_decay >= 0.0, "tune: weight decay must be non-negative");

    encoder_.set_frozen(config_.strategy != Strategy::Finetune);
    std::mt19937_64 rng(config_.seed);
    head_ = ClassifierHead(encoder_.output_dim(), config_.classes, rng);
    head_.weight.value.fill(0.0);

    const std::size_t d = features_.cols();
    switch (config_.strategy) {
        case Strategy::Phgnn:
        case Strategy::PhgnnNoStructure: {
            const std::size_t p = config_.num_prompts;
            require(p >= 1, "tune: prompt strategies need at least one prompt token");
            if (config_.effective_prompt_k() >= p)
                fail(ErrorKind::InvalidArgument, "tune: prompt k = " + std::to_string(config_.effective_prompt_k()) +
                                                     " must be below |P| = " + std::to_string(p));
            if (p >= n) warnings_.push_back("|P| = " + std::to_string(p) + " is not much smaller than N = " + std::to_string(n));
            if (p >= encoder_.output_dim())
                warnings_.push_back("|P| = " + std::to_string(p) + " is not below the latent size " +
                                    std::to_string(encoder_.output_dim()));
            prompts_ = Parameter("prompt.tokens", gaussian(p, d, 0.02, rng));
            break;
        }
        case Strategy::Gpf: prompts_ = Parameter("gpf.prompt", gaussian(1, d, 0.02, rng)); break;
        case Strategy::GpfPlus:
            require(config_.gpf_plus_basis >= 1, "tune: gpf_plus needs at least one basis vector");
            prompts_ = Parameter("gpf_plus.basis", gaussian(config_.gpf_plus_basis, d, 0.02, rng));
            break;
        case Strategy::Finetune:
        case Strategy::LinearProbe: prompts_ = Parameter("unused", Matrix(), false); break;
    }
    base_operator_ = propagation_operator(graph_);
}

bool Tuner::uses_prompt_nodes() const { return is_prompt_strategy(config_.strategy); }

std::vector<Parameter*> Tuner::tunable() {
    std::vector<Parameter*> out;
    if (config_.strategy == Strategy::Finetune) out = encoder_.parameters();
    else if (config_.strategy != Strategy::LinearProbe) out.push_back(&prompts_);
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
}

Hypergraph Tuner::current_structure() const {
    if (!uses_prompt_nodes()) return Hypergraph::edgeless(0);
    return build_prompt_structure(prompts_.value, config_.effective_prompt_k(), config_.strategy == Strategy::Phgnn);
}

Var Tuner::forward(Tape& tape, const Hypergraph& structure) {
    Var x = tape.constant(features_);
    Matrix op;
    switch (config_.strategy) {
        case Strategy::Phgnn:
        case Strategy::PhgnnNoStructure: {
            if (structure.num_nodes() != prompts_.value.rows())
                fail(ErrorKind::Shape, "tune: prompt structure has " + std::to_string(structure.num_nodes()) + " nodes for " +
                                           std::to_string(prompts_.value.rows()) + " tokens");
            const std::size_t n = features_.rows();
            const std::size_t p = prompts_.value.rows();
            Matrix placement(n + p, p);
            for (std::size_t i = 0; i < p; ++i) placement(n + i, i) = 1.0;
            x = ad::add(tape.constant(vconcat(features_, Matrix(p, features_.cols()))),
                        ad::matmul(tape.constant(std::move(placement)), tape.param(prompts_)));
            op = propagation_operator(insert_prompt_structure(graph_, structure));
            break;
        }
        case Strategy::Gpf: x = ad::add_row(x, tape.param(prompts_)); break;
        case Strategy::GpfPlus: {
            Var basis = tape.param(prompts_);
            Var attention = ad::row_softmax(ad::matmul(x, ad::transpose(basis)));
            x = ad::add(x, ad::matmul(attention, basis));
            break;
        }
        case Strategy::Finetune:
        case Strategy::LinearProbe: break;
    }
    Var op_v = tape.constant(op.empty() ? base_operator_ : std::move(op));
    return head_.forward(tape, encoder_.forward(tape, op_v, x));
}

Var Tuner::loss(Tape& tape, const Hypergraph& structure) {
    Var logits = forward(tape, structure);
    std::vector<int> labels = labels_;
    std::vector<bool> mask = train_;
    labels.resize(logits.rows(), 0);
    mask.resize(logits.rows(), false);
    return ad::softmax_cross_entropy(logits, labels, mask);
}

double Tuner::train_loss(const Hypergraph& structure) {
    Tape tape;
    return loss(tape, structure).value()(0, 0);
}

Matrix Tuner::logits(const Hypergraph& structure) {
    Tape tape;
    return forward(tape, structure).value();
}

Metrics Tuner::evaluate(const Hypergraph& structure) { return evaluate_logits(logits(structure), labels_, validation_); }

TuneSnapshot Tuner::snapshot(const Hypergraph& structure) {
    TuneSnapshot s{{}, structure};
    for (Parameter* p : tunable()) s.values.push_back(p->value);
    return s;
}

void Tuner::restore(const TuneSnapshot& s) {
    auto params = tunable();
    if (params.size() != s.values.size()) fail(ErrorKind::InvalidArgument, "tune: snapshot does not match strategy");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->value.rows() != s.values[i].rows() || params[i]->value.cols() != s.values[i].cols())
            fail(ErrorKind::Shape, "tune: snapshot shape mismatch for '" + params[i]->name + "'");
        params[i]->value = s.values[i];
    }
}

TuneResult Tuner::run() {
    TuneResult r;
    r.strategy = config_.strategy;
    r.warnings = warnings_;
    const auto params = tunable();
    for (const Parameter* p : params) r.tunable_count += p->count();

    if (config_.epochs == 0) {
        const Hypergraph structure = current_structure();
        r.best = snapshot(structure);
        r.best_metrics = evaluate(structure);
        return r;
    }

    AdamWState state;
    double best = -1.0;
    for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
        const Hypergraph structure = current_structure();
        {
            Tape tape;
            r.train_loss.push_back(tape.backward(loss(tape, structure)));
        }
        adamw_step(params, state, config_.lr, config_.weight_decay);
        const Metrics m = evaluate(structure);
        r.validation_bacc.push_back(m.bacc);
        if (m.bacc > best) {
            best = m.bacc;
            r.best = snapshot(structure);
            r.best_metrics = m;
            r.best_epoch = epoch;
        }
    }
    return r;
}

TuneResult prompt_tune(const Hypergraph& g, const Matrix& x, std::span<const int> labels,
                       const std::vector<bool>& train_mask, const std::vector<bool>& validation_mask,
                       const HgnnStack& frozen_encoder, const TuneConfig& config) {
    if (!frozen_encoder.frozen()) fail(ErrorKind::InvalidArgument, "prompt_tune: encoder must be frozen");
    require(is_prompt_strategy(config.strategy), "prompt_tune: strategy must be phgnn or phgnn_no_structure");
    Tuner tuner(g, x, std::vector<int>(labels.begin(), labels.end()), train_mask, validation_mask, frozen_encoder, config);
    return tuner.run();
}

TuneResult tune_with_strategy(Strategy strategy, const Hypergraph& g, const Matrix& x, std::span<const int> labels,
                              const std::vector<bool>& train_mask, const std::vector<bool>& validation_mask,
                              const HgnnStack& pretrained_encoder, TuneConfig config) {
    config.strategy = strategy;
    HgnnStack encoder = pretrained_encoder;
    encoder.set_frozen(strategy != Strategy::Finetune);
    if (is_prompt_strategy(strategy)) return prompt_tune(g, x, labels, train_mask, validation_mask, encoder, config);
    Tuner tuner(g, x, std::vector<int>(labels.begin(), labels.end()), train_mask, validation_mask, std::move(encoder), config);
    return tuner.run();
}

}  // namespace phgnn
