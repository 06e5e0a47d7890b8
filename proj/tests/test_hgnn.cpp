#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "phgnn/error.hpp"
#include "phgnn/hgnn.hpp"

using namespace phgnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Matrix m(r, c);
    for (double& v : m.values()) v = z(rng);
    return m;
}

HgnnStack identity_stack(std::size_t d) {
    HgnnLayer layer{Parameter("w", Matrix::identity(d)), Parameter("b", Matrix(1, d)), Activation::Identity};
    return HgnnStack(std::vector<HgnnLayer>{layer});
}

}  // namespace

TEST_CASE("identity pipeline returns its input") {
    std::mt19937_64 rng(1);
    Matrix x = random_matrix(4, 3, rng);
    HgnnStack s = identity_stack(3);
    CHECK(hgnn_forward(Hypergraph(Matrix::identity(4)), x, s) == x);
}

TEST_CASE("two nodes in one hyperedge average their features") {
    HgnnStack s = identity_stack(2);
    Matrix out = hgnn_forward(Hypergraph(Matrix{{1}, {1}}), Matrix{{1, 0}, {0, 1}}, s);
    CHECK(max_abs_diff(out, Matrix{{0.5, 0.5}, {0.5, 0.5}}) <= 1e-15);
}

TEST_CASE("stack construction and dimension errors") {
    std::mt19937_64 rng(2);
    HgnnStack s({5, 7, 3}, Activation::Identity, "enc", rng);
    CHECK(s.num_layers() == 2);
    CHECK(s.input_dim() == 5);
    CHECK(s.output_dim() == 3);
    CHECK(s.layers()[0].activation == Activation::Relu);
    CHECK(s.layers()[1].activation == Activation::Identity);
    CHECK(s.parameter_count() == 5 * 7 + 7 + 7 * 3 + 3);
    const double bound = std::sqrt(6.0 / 12.0);
    for (double w : s.layers()[0].weight.value.values()) CHECK(std::abs(w) <= bound);
    for (double b : s.layers()[0].bias.value.values()) CHECK(b == 0.0);
    s.set_frozen(true);
    CHECK(s.frozen());
    for (Parameter* p : s.parameters()) CHECK_FALSE(p->trainable);
    Hypergraph g(Matrix::identity(4));
    CHECK_THROWS_AS(hgnn_forward(g, Matrix(4, 6), s), Error);
    CHECK_THROWS_AS(hgnn_forward(g, Matrix(3, 5), s), Error);
}

TEST_CASE("hgnn forward is permutation-equivariant") {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution coin(0.4);
    HgnnStack s({4, 6, 3}, Activation::Identity, "enc", rng);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix h(8, 5);
        for (std::size_t e = 0; e < 5; ++e) {
            h(e, e) = 1.0;
            for (std::size_t v = 0; v < 8; ++v)
                if (coin(rng)) h(v, e) = 1.0;
        }
        Matrix x = random_matrix(8, 4, rng);
        std::vector<std::size_t> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix out = hgnn_forward(Hypergraph(h), x, s);
        Matrix pout = hgnn_forward(Hypergraph(select_rows(h, perm)), select_rows(x, perm), s);
        CHECK(max_abs_diff(pout, select_rows(out, perm)) <= 1e-12);
    }
}

TEST_CASE("hgnn gradients pass the finite-difference check") {
    std::mt19937_64 rng(4);
    Matrix x = random_matrix(6, 4, rng);
    Hypergraph g(Matrix{{1, 0, 1}, {1, 1, 0}, {0, 1, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 1}});
    HgnnStack s({4, 5, 3}, Activation::Identity, "enc", rng);
    for (auto& layer : s.layers()) layer.bias.value = random_matrix(1, layer.output_dim(), rng);
    const Matrix op = propagation_operator(g);
    const Matrix weights = random_matrix(6, 3, rng);
    auto params = s.parameters();
    const double err = finite_difference_check(
        [&](Tape& t) { return ad::sum(ad::hadamard(s.forward(t, t.constant(op), t.constant(x)), t.constant(weights))); },
        params, 1e-6);
    CHECK(err <= 1e-4);
}

TEST_CASE("classify") {
    std::mt19937_64 rng(3);
    ClassifierHead head(4, 2, rng);
    head.weight.value.fill(0.0);
    CHECK(classify(random_matrix(5, 4, rng), head) == Matrix(5, 2));

    ClassifierHead id(2, 2, rng);
    id.weight.value = Matrix::identity(2);
    Matrix z{{1, 0}, {0, 1}, {3, -2}};
    CHECK(classify(z, id) == z);

    std::mt19937_64 r3(3);
    Matrix zz = random_matrix(6, 4, r3);
    ClassifierHead h3(4, 3, r3);
    h3.bias.value = random_matrix(1, 3, r3);
    Matrix logits = classify(zz, h3);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
            double s = h3.bias.value(0, c);
            for (std::size_t k = 0; k < 4; ++k) s += zz(i, k) * h3.weight.value(k, c);
            CHECK(std::abs(logits(i, c) - s) <= 1e-12);
        }
    CHECK_THROWS_AS(classify(Matrix(2, 3), head), Error);
    CHECK_THROWS_AS(ClassifierHead(4, 1, rng), Error);
}

TEST_CASE("cross entropy fixtures") {
    const std::vector<bool> one{true};
    const std::vector<int> zero{0}, first{1};
    CHECK(cross_entropy_masked(Matrix{{0, 0}}, zero, one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cross_entropy_masked(Matrix{{50, -50}}, zero, one) < 1e-20);
    CHECK(cross_entropy_masked(Matrix{{1, 2}}, first, one) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-14));
    CHECK(cross_entropy_masked(Matrix{{1, 2}}, first, one) == doctest::Approx(0.313262).epsilon(1e-6));
    CHECK_THROWS_AS(cross_entropy_masked(Matrix{{1, 2}}, first, std::vector<bool>{false}), Error);
    CHECK_THROWS_AS(cross_entropy_masked(Matrix{{1, 2}}, std::vector<int>{2}, one), Error);
}

TEST_CASE("cross entropy is invariant to per-row shifts") {
    std::mt19937_64 rng(8);
    Matrix logits = random_matrix(10, 2, rng);
    Matrix shifted = logits;
    std::uniform_real_distribution<double> u(-20, 20);
    for (std::size_t r = 0; r < 10; ++r) {
        const double c = u(rng);
        shifted(r, 0) += c;
        shifted(r, 1) += c;
    }
    std::vector<int> labels{0, 1, 1, 0, 1, 0, 0, 1, 1, 0};
    std::vector<bool> mask{true, true, false, true, true, true, false, true, true, true};
    CHECK(std::abs(cross_entropy_masked(logits, labels, mask) - cross_entropy_masked(shifted, labels, mask)) <= 1e-10);
}

TEST_CASE("tunable parameter counts") {
    ModelShape shape{128, {128, 64}, 2, 16, 32};
    CHECK(count_tunable_params(Strategy::LinearProbe, shape).total() == 130);
    CHECK(count_tunable_params(Strategy::Phgnn, shape).total() == 2178);
    CHECK(count_tunable_params(Strategy::PhgnnNoStructure, shape).total() == 2178);
    CHECK(count_tunable_params(Strategy::Gpf, shape).total() == 258);
    CHECK(count_tunable_params(Strategy::GpfPlus, shape).total() == 32 * 128 + 130);
    CHECK(count_tunable_params(Strategy::Finetune, shape).total() == 128 * 128 + 128 + 128 * 64 + 64 + 130);

    ModelShape toy{48, {128, 64}, 2, 16, 32};
    const auto phgnn = count_tunable_params(Strategy::Phgnn, toy).total();
    const auto gpf_plus = count_tunable_params(Strategy::GpfPlus, toy).total();
    const auto finetune = count_tunable_params(Strategy::Finetune, toy).total();
    CHECK(phgnn * 10 <= finetune);
    CHECK(phgnn < gpf_plus);
    CHECK(gpf_plus < finetune);

    CHECK_THROWS_AS(parse_strategy("lora"), Error);
    for (Strategy s : all_strategies()) CHECK(parse_strategy(strategy_name(s)) == s);
    CHECK(all_strategies().size() == 6);
}

TEST_CASE("finetune count equals the model's parameter count") {
    std::mt19937_64 rng(1);
    HgnnStack enc({20, 9, 5}, Activation::Identity, "enc", rng);
    ClassifierHead head(5, 2, rng);
    ModelShape shape{20, {9, 5}, 2, 4, 3};
    CHECK(count_tunable_params(Strategy::Finetune, shape).total() == enc.parameter_count() + head.parameter_count());
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    std::mt19937_64 rng(6);
    HgnnStack enc({7, 5, 3}, Activation::Identity, "enc", rng);
    enc.layers()[0].bias.value = random_matrix(1, 5, rng);
    const std::string text = encoder_checkpoint_text(enc, CheckpointMeta{42, "0123456789abcdef"});
    CheckpointMeta meta;
    HgnnStack back = parse_encoder_checkpoint(text, &meta);
    CHECK(meta.seed == 42);
    CHECK(meta.config_digest == "0123456789abcdef");
    REQUIRE(back.num_layers() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(back.layers()[l].weight.value == enc.layers()[l].weight.value);
        CHECK(back.layers()[l].bias.value == enc.layers()[l].bias.value);
        CHECK(back.layers()[l].activation == enc.layers()[l].activation);
    }
    CHECK(encoder_checkpoint_text(back, meta) == text);
    CHECK_THROWS_AS(parse_encoder_checkpoint("{}"), Error);
    CHECK_THROWS_AS(parse_encoder_checkpoint("not json"), Error);
}
