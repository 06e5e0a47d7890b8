#include <algorithm>
#include <random>

#include "doctest.h"
#include "phgnn/error.hpp"
#include "phgnn/prompt.hpp"

using namespace phgnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Matrix m(r, c);
    for (double& v : m.values()) v = z(rng);
    return m;
}

double column_sum(const Matrix& h, std::size_t c) {
    double s = 0;
    for (std::size_t r = 0; r < h.rows(); ++r) s += h(r, c);
    return s;
}

// Two separated clusters with labels, a k-NN graph, and alternating masks.
struct Toy {
    Hypergraph g;
    Matrix x;
    std::vector<int> labels;
    std::vector<bool> train, validation;
    HgnnStack encoder;
};

Toy make_toy(std::size_t n, std::size_t d, std::size_t latent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Toy t;
    t.x = random_matrix(n, d, rng);
    for (std::size_t i = 0; i < n; ++i) {
        t.labels.push_back(static_cast<int>(i % 2));
        t.x(i, 0) += i % 2 ? 2.0 : -2.0;
        t.train.push_back(i % 4 < 2);
        t.validation.push_back(i % 4 >= 2);
    }
    t.g = knn_hyperedges(t.x, 3);
    t.encoder = HgnnStack({d, 10, latent}, Activation::Identity, "enc", rng);
    t.encoder.set_frozen(true);
    return t;
}

}  // namespace

TEST_CASE("prompt structure") {
    std::mt19937_64 rng(1);
    Matrix tokens = random_matrix(5, 3, rng);
    Hypergraph flat = build_prompt_structure(tokens, 2, false);
    CHECK(flat.num_nodes() == 5);
    CHECK(flat.num_edges() == 0);

    Hypergraph two = build_prompt_structure(Matrix{{0, 0}, {1, 1}}, 1);
    CHECK(two.incidence() == Matrix{{1, 1}, {1, 1}});

    Matrix four = random_matrix(4, 3, rng);
    Hypergraph g = build_prompt_structure(four, 2);
    CHECK(g.num_edges() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < 3; ++c) s += (four(i, c) - four(j, c)) * (four(i, c) - four(j, c));
            d.emplace_back(s, j);
        }
        std::sort(d.begin(), d.end());
        std::vector<std::size_t> expect{d[0].second, d[1].second, d[2].second};
        std::sort(expect.begin(), expect.end());
        CHECK(g.members(i) == expect);
    }
    CHECK(build_prompt_structure(four, 2) == g);
    CHECK_THROWS_AS(build_prompt_structure(four, 4), Error);
}

TEST_CASE("insert prompt") {
    Hypergraph g(Matrix{{1, 0, 1}, {1, 1, 0}, {0, 1, 1}});
    Matrix x{{1, 2}, {3, 4}, {5, 6}};

    PromptedGraph same = insert_prompt(g, x, Hypergraph::edgeless(0), Matrix(0, 2));
    CHECK(same.graph == g);
    CHECK(same.features == x);

    Matrix tokens{{0.1, 0.2}, {0.3, 0.4}};
    Hypergraph gp = build_prompt_structure(tokens, 1);
    PromptedGraph m = insert_prompt(g, x, gp, tokens);
    CHECK(m.graph.num_nodes() == 5);
    CHECK(m.graph.num_edges() == 7);
    CHECK(column_sum(m.graph.incidence(), 5) == 4.0);
    CHECK(column_sum(m.graph.incidence(), 6) == 4.0);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(m.graph.incidence()(r, c) == g.incidence()(r, c));
    for (std::size_t r = 3; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(m.graph.incidence()(r, c) == 0.0);
    CHECK(m.features == Matrix{{1, 2}, {3, 4}, {5, 6}, {0.1, 0.2}, {0.3, 0.4}});
    CHECK(x == Matrix{{1, 2}, {3, 4}, {5, 6}});
    CHECK(g.incidence() == Matrix{{1, 0, 1}, {1, 1, 0}, {0, 1, 1}});
    CHECK_THROWS_AS(insert_prompt(g, x, build_prompt_structure(Matrix{{1, 2, 3}, {4, 5, 6}}, 1), Matrix{{1, 2, 3}, {4, 5, 6}}),
                    Error);
}

TEST_CASE("insert prompt counts on random instances") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 6 + trial % 5, p = 2 + trial % 4;
        Matrix x = random_matrix(n, 3, rng);
        Hypergraph g = knn_hyperedges(x, 2);
        Matrix tokens = random_matrix(p, 3, rng);
        const bool structured = trial % 2 == 0;
        Hypergraph gp = build_prompt_structure(tokens, 1, structured);
        PromptedGraph m = insert_prompt(g, x, gp, tokens);
        CHECK(m.graph.num_edges() == g.num_edges() + gp.num_edges() + p);
        for (std::size_t i = 0; i < p; ++i) CHECK(column_sum(m.graph.incidence(), g.num_edges() + gp.num_edges() + i) == n + 1.0);
    }
}

TEST_CASE("full prompt loss passes the finite-difference check") {
    Toy t = make_toy(20, 12, 8, 3);
    TuneConfig cfg;
    cfg.num_prompts = 4;
    cfg.seed = 5;
    Tuner tuner(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
    std::mt19937_64 rng(6);
    tuner.head().weight.value = random_matrix(8, 2, rng, 0.5);
    tuner.prompts().value = random_matrix(4, 12, rng);
    const Hypergraph structure = tuner.current_structure();
    auto params = tuner.tunable();
    CHECK(finite_difference_check([&](Tape& tape) { return tuner.loss(tape, structure); }, params, 1e-6) <= 1e-4);
}

TEST_CASE("gpf and gpf_plus losses pass the finite-difference check") {
    Toy t = make_toy(16, 6, 4, 4);
    for (Strategy s : {Strategy::Gpf, Strategy::GpfPlus, Strategy::Finetune}) {
        TuneConfig cfg;
        cfg.strategy = s;
        cfg.gpf_plus_basis = 3;
        HgnnStack enc = t.encoder;
        enc.set_frozen(s != Strategy::Finetune);
        Tuner tuner(t.g, t.x, t.labels, t.train, t.validation, enc, cfg);
        std::mt19937_64 rng(7);
        tuner.head().weight.value = random_matrix(4, 2, rng, 0.5);
        if (s != Strategy::Finetune) tuner.prompts().value = random_matrix(tuner.prompts().value.rows(), 6, rng, 0.5);
        auto params = tuner.tunable();
        const Hypergraph structure = tuner.current_structure();
        CHECK(finite_difference_check([&](Tape& tape) { return tuner.loss(tape, structure); }, params, 1e-6) <= 1e-4);
    }
}

TEST_CASE("zero epochs returns the initial snapshot") {
    Toy t = make_toy(20, 5, 4, 8);
    TuneConfig cfg;
    cfg.epochs = 0;
    cfg.num_prompts = 4;
    TuneResult r = prompt_tune(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
    CHECK(r.train_loss.empty());
    CHECK(r.validation_bacc.empty());
    CHECK(r.best_epoch == 0);
    Tuner fresh(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
    CHECK(r.best.values[0] == fresh.prompts().value);
}

TEST_CASE("frozen encoder stays bit-identical and snapshots restore exactly") {
    Toy t = make_toy(24, 5, 4, 9);
    const HgnnStack before = t.encoder;
    for (Strategy s : {Strategy::Phgnn, Strategy::PhgnnNoStructure, Strategy::Gpf, Strategy::GpfPlus, Strategy::LinearProbe}) {
        TuneConfig cfg;
        cfg.strategy = s;
        cfg.epochs = 50;
        cfg.lr = 1e-2;
        cfg.num_prompts = 4;
        cfg.gpf_plus_basis = 3;
        TuneResult r = tune_with_strategy(s, t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
        CHECK(r.train_loss.size() == 50);
        CHECK(r.validation_bacc.size() == 50);
        for (std::size_t l = 0; l < before.num_layers(); ++l) {
            CHECK(t.encoder.layers()[l].weight.value == before.layers()[l].weight.value);
            CHECK(t.encoder.layers()[l].bias.value == before.layers()[l].bias.value);
        }
        // The best metrics are the first maximum of the validation curve.
        const auto best = std::max_element(r.validation_bacc.begin(), r.validation_bacc.end());
        CHECK(r.best_epoch == static_cast<std::size_t>(best - r.validation_bacc.begin()) + 1);
        CHECK(r.best_metrics.bacc == *best);

        HgnnStack enc = t.encoder;
        Tuner tuner(t.g, t.x, t.labels, t.train, t.validation, enc, cfg);
        tuner.restore(r.best);
        CHECK(tuner.evaluate(r.best.prompt_structure) == r.best_metrics);
    }
}

TEST_CASE("finetune moves the private encoder copy only") {
    Toy t = make_toy(20, 5, 4, 10);
    t.encoder.set_frozen(false);
    const HgnnStack before = t.encoder;
    TuneConfig cfg;
    cfg.epochs = 5;
    cfg.lr = 1e-2;
    TuneResult r = tune_with_strategy(Strategy::Finetune, t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
    CHECK(t.encoder.layers()[0].weight.value == before.layers()[0].weight.value);
    CHECK(r.tunable_count == before.parameter_count() + 4 * 2 + 2);
    CHECK(r.best.values[0] != before.layers()[0].weight.value);
}

TEST_CASE("tunable counts follow each strategy's trainable set") {
    Toy t = make_toy(20, 12, 8, 11);
    ModelShape shape{12, {10, 8}, 2, 4, 3};
    for (Strategy s : all_strategies()) {
        TuneConfig cfg;
        cfg.strategy = s;
        cfg.epochs = 1;
        cfg.num_prompts = 4;
        cfg.gpf_plus_basis = 3;
        TuneResult r = tune_with_strategy(s, t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
        CHECK(r.tunable_count == count_tunable_params(s, shape).total());
    }
    CHECK(count_tunable_params(Strategy::LinearProbe, shape).total() == 8 * 2 + 2);
}

TEST_CASE("tuning errors and warnings") {
    Toy t = make_toy(20, 5, 4, 12);
    TuneConfig cfg;
    cfg.num_prompts = 4;
    const std::vector<bool> none(20, false);
    CHECK_THROWS_AS(prompt_tune(t.g, t.x, t.labels, none, t.validation, t.encoder, cfg), Error);
    CHECK_THROWS_AS(prompt_tune(t.g, t.x, t.labels, t.train, none, t.encoder, cfg), Error);
    HgnnStack live = t.encoder;
    live.set_frozen(false);
    CHECK_THROWS_AS(prompt_tune(t.g, t.x, t.labels, t.train, t.validation, live, cfg), Error);
    cfg.strategy = Strategy::Gpf;
    CHECK_THROWS_AS(prompt_tune(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg), Error);
    cfg.strategy = Strategy::Phgnn;
    cfg.prompt_k = 4;
    CHECK_THROWS_AS(prompt_tune(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg), Error);
    cfg.prompt_k.reset();
    cfg.epochs = 0;
    cfg.num_prompts = 6;
    TuneResult r = prompt_tune(t.g, t.x, t.labels, t.train, t.validation, t.encoder, cfg);
    CHECK(r.warnings.size() == 1);  // |P| >= d_z
    CHECK(TuneConfig{}.effective_prompt_k() == 3);
    TuneConfig two;
    two.num_prompts = 2;
    CHECK(two.effective_prompt_k() == 1);
}
