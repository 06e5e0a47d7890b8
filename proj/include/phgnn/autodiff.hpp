#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phgnn/matrix.hpp"

namespace phgnn {

/// A named, optionally trainable matrix with its gradient buffer.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name, Matrix value, bool trainable = true);

    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;
    bool grad_ready = false;  // set by Tape::backward, cleared by zero_grad

    void zero_grad();
    std::size_t count() const noexcept { return value.size(); }
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

enum class Activation { Identity, Relu };

/// Expression graph recorded in evaluation order. Nodes are appended by the
/// free functions below, so every node's inputs precede it.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var param(Parameter& p);

    /// Runs reverse accumulation from a 1x1 root. Every trainable Parameter
    /// recorded on this tape has its gradient overwritten with d(root)/d(value).
    double backward(Var root);

    std::size_t size() const noexcept { return nodes_.size(); }
    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    const std::string& op_name(std::size_t id) const { return nodes_[id].op; }

    // Used by primitive implementations.
    Var push(std::string op, Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);
    Matrix& grad(std::size_t id);
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

private:
    struct Node {
        std::string op;
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> inputs;
        bool needs_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

// Primitive operations. Anything else the pipeline needs is composed from these.
namespace ad {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// a (n x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
Var transpose(Var a);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var activate(Var a, Activation act);
/// Elementwise a^p.
Var power(Var a, double p);
/// Each row divided by max(||row||, 1e-12).
Var row_l2_normalize(Var a);
/// n x 1 column of per-row cosine similarities, clamped to [-1, 1].
Var row_cosine(Var a, Var b);
Var row_softmax(Var a);
/// Mean over masked rows of -log softmax(logits)[label]; 1x1.
Var softmax_cross_entropy(Var logits, std::span<const int> labels, const std::vector<bool>& mask);
/// Mean of a column vector over masked rows; 1x1.
Var masked_mean(Var column, const std::vector<bool>& mask);
Var sum(Var a);

}  // namespace ad

/// Builds a scalar loss on a fresh tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/// Evaluates the loss and fills gradients of trainable parameters.
double forward_backward(const LossBuilder& build);

/// Largest relative disagreement between reverse-mode gradients and central
/// differences over every coordinate of every trainable parameter.
double finite_difference_check(const LossBuilder& build, std::span<Parameter* const> params, double eps);

}  // namespace phgnn
