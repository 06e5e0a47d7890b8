#include "phgnn/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "phgnn/error.hpp"

namespace phgnn {

namespace {

constexpr double kNormFloor = 1e-12;

void accumulate(Matrix& dst, const Matrix& src) {
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

[[noreturn]] void shape_error(const std::string& op, const Matrix& a, const Matrix& b) {
    fail(ErrorKind::Shape, op + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void same_tape(Var a, Var b, const char* op) {
    if (a.tape != b.tape || a.tape == nullptr) fail(ErrorKind::InvalidArgument, std::string(op) + ": operands on different tapes");
}

std::size_t mask_count(const std::vector<bool>& mask) {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

}  // namespace

Parameter::Parameter(std::string n, Matrix v, bool t)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()), trainable(t) {}

void Parameter::zero_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) grad = Matrix(value.rows(), value.cols());
    grad.fill(0.0);
    grad_ready = false;
}

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
    Node n;
    n.op = "constant";
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
    Node n;
    n.op = "param:" + p.name;
    n.value = p.value;
    n.needs_grad = p.trainable;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::push(std::string op, Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
    if (!value.all_finite()) fail(ErrorKind::Runtime, op + ": produced non-finite values");
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].needs_grad; });
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return n.grad;
}

double Tape::backward(Var root) {
    if (root.tape != this) fail(ErrorKind::InvalidArgument, "backward: root belongs to another tape");
    const Matrix& out = nodes_[root.id].value;
    if (out.rows() != 1 || out.cols() != 1)
        fail(ErrorKind::Shape, "backward: root '" + nodes_[root.id].op + "' is " + out.shape_string() + ", not scalar");

    for (auto& n : nodes_) {
        if (n.param && n.param->trainable) {
            n.param->zero_grad();
            n.param->grad_ready = true;
        }
        n.grad = Matrix();
    }
    if (!nodes_[root.id].needs_grad) return out(0, 0);

    grad(root.id)(0, 0) = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.param) {
            accumulate(n.param->grad, n.grad);
        } else if (n.backward) {
            n.backward(*this, i);
        }
    }
    return out(0, 0);
}

namespace ad {

Var matmul(Var a, Var b) {
    same_tape(a, b, "matmul");
    if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
    Tape& t = *a.tape;
    return t.push("matmul", phgnn::matmul(a.value(), b.value()), {a.id, b.id}, [](Tape& t, std::size_t self) {
        const auto& in = t.inputs(self);
        const Matrix& g = t.grad(self);
        if (t.needs_grad(in[0])) accumulate(t.grad(in[0]), phgnn::matmul(g, transpose(t.value(in[1]))));
        if (t.needs_grad(in[1])) accumulate(t.grad(in[1]), phgnn::matmul(transpose(t.value(in[0])), g));
    });
}

Var add(Var a, Var b) {
    same_tape(a, b, "add");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("add", av, bv);
    Matrix out = av;
    accumulate(out, bv);
    return a.tape->push("add", std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
        for (std::size_t in : t.inputs(self))
            if (t.needs_grad(in)) accumulate(t.grad(in), t.grad(self));
    });
}

Var add_row(Var a, Var row) {
    same_tape(a, row, "add_row");
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_row", av, rv);
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
    return a.tape->push("add_row", std::move(out), {a.id, row.id}, [](Tape& t, std::size_t self) {
        const auto& in = t.inputs(self);
        const Matrix& g = t.grad(self);
        if (t.needs_grad(in[0])) accumulate(t.grad(in[0]), g);
        if (t.needs_grad(in[1])) {
            Matrix& gr = t.grad(in[1]);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
        }
    });
}

Var transpose(Var a) {
    return a.tape->push("transpose", phgnn::transpose(a.value()), {a.id}, [](Tape& t, std::size_t self) {
        accumulate(t.grad(t.inputs(self)[0]), phgnn::transpose(t.grad(self)));
    });
}

Var scale(Var a, double s) {
    Matrix out = a.value();
    for (double& x : out.values()) x *= s;
    return a.tape->push("scale", std::move(out), {a.id}, [s](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Matrix& ga = t.grad(t.inputs(self)[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += s * g.values()[i];
    });
}

Var hadamard(Var a, Var b) {
    same_tape(a, b, "hadamard");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("hadamard", av, bv);
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= bv.values()[i];
    return a.tape->push("hadamard", std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
        const auto& in = t.inputs(self);
        const Matrix& g = t.grad(self);
        for (int k = 0; k < 2; ++k) {
            if (!t.needs_grad(in[k])) continue;
            const Matrix& other = t.value(in[1 - k]);
            Matrix& gk = t.grad(in[k]);
            for (std::size_t i = 0; i < g.size(); ++i) gk.values()[i] += g.values()[i] * other.values()[i];
        }
    });
}

Var activate(Var a, Activation act) {
    if (act == Activation::Identity) return a;
    Matrix out = a.value();
    for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
    return a.tape->push("relu", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& ga = t.grad(t.inputs(self)[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (y.values()[i] > 0.0) ga.values()[i] += g.values()[i];
    });
}

Var power(Var a, double p) {
    Matrix out = a.value();
    for (double& x : out.values()) x = std::pow(x, p);
    return a.tape->push("power", std::move(out), {a.id}, [p](Tape& t, std::size_t self) {
        const std::size_t in = t.inputs(self)[0];
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(in);
        Matrix& ga = t.grad(in);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.values()[i] += g.values()[i] * p * std::pow(x.values()[i], p - 1.0);
    });
}

Var row_l2_normalize(Var a) {
    const Matrix& av = a.value();
    Matrix out = av;
    std::vector<double> norms(av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double s = 0.0;
        for (double x : av.row(r)) s += x * x;
        norms[r] = std::max(std::sqrt(s), kNormFloor);
        for (double& x : out.row(r)) x /= norms[r];
    }
    return a.tape->push("row_l2_normalize", std::move(out), {a.id}, [norms](Tape& t, std::size_t self) {
        const std::size_t in = t.inputs(self)[0];
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        const Matrix& x = t.value(in);
        Matrix& ga = t.grad(in);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            double s = 0.0;
            for (double v : x.row(r)) s += v * v;
            const bool floored = std::sqrt(s) <= kNormFloor;
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += y(r, c) * g(r, c);
            for (std::size_t c = 0; c < g.cols(); ++c)
                ga(r, c) += floored ? g(r, c) / norms[r] : (g(r, c) - y(r, c) * dot) / norms[r];
        }
    });
}

Var row_cosine(Var a, Var b) {
    same_tape(a, b, "row_cosine");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("row_cosine", av, bv);
    Matrix out(av.rows(), 1);
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double dot = 0.0, sa = 0.0, sb = 0.0;
        for (std::size_t c = 0; c < av.cols(); ++c) {
            dot += av(r, c) * bv(r, c);
            sa += av(r, c) * av(r, c);
            sb += bv(r, c) * bv(r, c);
        }
        const double na = std::max(std::sqrt(sa), kNormFloor);
        const double nb = std::max(std::sqrt(sb), kNormFloor);
        out(r, 0) = std::clamp(dot / (na * nb), -1.0, 1.0);
    }
    return a.tape->push("row_cosine", std::move(out), {a.id, b.id}, [](Tape& t, std::size_t self) {
        const auto& in = t.inputs(self);
        const Matrix& g = t.grad(self);
        const Matrix& x = t.value(in[0]);
        const Matrix& y = t.value(in[1]);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double dot = 0.0, sa = 0.0, sb = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                dot += x(r, c) * y(r, c);
                sa += x(r, c) * x(r, c);
                sb += y(r, c) * y(r, c);
            }
            const double ra = std::sqrt(sa), rb = std::sqrt(sb);
            const double na = std::max(ra, kNormFloor), nb = std::max(rb, kNormFloor);
            const double cos = dot / (na * nb);
            const double gr = g(r, 0);
            if (t.needs_grad(in[0])) {
                Matrix& gx = t.grad(in[0]);
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    double d = y(r, c) / (na * nb);
                    if (ra > kNormFloor) d -= cos * x(r, c) / (na * na);
                    gx(r, c) += gr * d;
                }
            }
            if (t.needs_grad(in[1])) {
                Matrix& gy = t.grad(in[1]);
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    double d = x(r, c) / (na * nb);
                    if (rb > kNormFloor) d -= cos * y(r, c) / (nb * nb);
                    gy(r, c) += gr * d;
                }
            }
        }
    });
}

Var row_softmax(Var a) {
    Matrix out = a.value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double& x : row) s += (x = std::exp(x - mx));
        for (double& x : row) x /= s;
    }
    return a.tape->push("row_softmax", std::move(out), {a.id}, [](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& ga = t.grad(t.inputs(self)[0]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
        }
    });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, const std::vector<bool>& mask) {
    const Matrix& z = logits.value();
    if (labels.size() != z.rows() || mask.size() != z.rows())
        fail(ErrorKind::Shape, "softmax_cross_entropy: " + std::to_string(z.rows()) + " logit rows, " +
                                   std::to_string(labels.size()) + " labels, " + std::to_string(mask.size()) +
                                   " mask entries");
    const std::size_t count = mask_count(mask);
    if (count == 0) fail(ErrorKind::InvalidArgument, "softmax_cross_entropy: mask selects no nodes");

    Matrix probs(z.rows(), z.cols());
    double total = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) {
        if (!mask[r]) continue;
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= z.cols())
            fail(ErrorKind::InvalidArgument, "softmax_cross_entropy: label " + std::to_string(labels[r]) +
                                                 " out of range at row " + std::to_string(r));
        auto row = z.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) s += (probs(r, c) = std::exp(row[c] - mx));
        for (std::size_t c = 0; c < z.cols(); ++c) probs(r, c) /= s;
        total += std::log(s) + mx - row[static_cast<std::size_t>(labels[r])];
    }
    Matrix out(1, 1, total / static_cast<double>(count));
    std::vector<int> lab(labels.begin(), labels.end());
    std::vector<bool> msk = mask;
    return logits.tape->push("softmax_cross_entropy", std::move(out), {logits.id},
                             [probs = std::move(probs), lab = std::move(lab), msk = std::move(msk), count](Tape& t, std::size_t self) {
                                 const double g = t.grad(self)(0, 0) / static_cast<double>(count);
                                 Matrix& gz = t.grad(t.inputs(self)[0]);
                                 for (std::size_t r = 0; r < probs.rows(); ++r) {
                                     if (!msk[r]) continue;
                                     for (std::size_t c = 0; c < probs.cols(); ++c) {
                                         const double target = static_cast<int>(c) == lab[r] ? 1.0 : 0.0;
                                         gz(r, c) += g * (probs(r, c) - target);
                                     }
                                 }
                             });
}

Var masked_mean(Var column, const std::vector<bool>& mask) {
    const Matrix& v = column.value();
    if (v.cols() != 1 || mask.size() != v.rows())
        fail(ErrorKind::Shape, "masked_mean: value " + v.shape_string() + " with mask of " + std::to_string(mask.size()));
    const std::size_t count = mask_count(mask);
    if (count == 0) fail(ErrorKind::InvalidArgument, "masked_mean: mask selects no rows");
    double s = 0.0;
    for (std::size_t r = 0; r < v.rows(); ++r)
        if (mask[r]) s += v(r, 0);
    std::vector<bool> msk = mask;
    return column.tape->push("masked_mean", Matrix(1, 1, s / static_cast<double>(count)), {column.id},
                             [msk = std::move(msk), count](Tape& t, std::size_t self) {
                                 const double g = t.grad(self)(0, 0) / static_cast<double>(count);
                                 Matrix& gv = t.grad(t.inputs(self)[0]);
                                 for (std::size_t r = 0; r < msk.size(); ++r)
                                     if (msk[r]) gv(r, 0) += g;
                             });
}

Var sum(Var a) {
    double s = 0.0;
    for (double x : a.value().values()) s += x;
    return a.tape->push("sum", Matrix(1, 1, s), {a.id}, [](Tape& t, std::size_t self) {
        const double g = t.grad(self)(0, 0);
        for (double& x : t.grad(t.inputs(self)[0]).values()) x += g;
    });
}

}  // namespace ad

double forward_backward(const LossBuilder& build) {
    Tape tape;
    return tape.backward(build(tape));
}

namespace {

double evaluate(const LossBuilder& build) {
    Tape tape;
    const Var root = build(tape);
    if (root.rows() != 1 || root.cols() != 1) fail(ErrorKind::Shape, "loss is not scalar");
    return root.value()(0, 0);
}

}  // namespace

double finite_difference_check(const LossBuilder& build, std::span<Parameter* const> params, double eps) {
    require(eps > 0.0, "finite_difference_check: step must be positive");
    const double first = evaluate(build);
    const double second = evaluate(build);
    if (std::bit_cast<std::uint64_t>(first) != std::bit_cast<std::uint64_t>(second))
        fail(ErrorKind::Runtime, "finite_difference_check: loss function is not deterministic");

    forward_backward(build);
    double worst = 0.0;
    for (Parameter* p : params) {
        if (!p->trainable) continue;
        const Matrix analytic = p->grad;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            double& x = p->value.values()[i];
            const double saved = x;
            const double hi = saved + eps, lo = saved - eps;
            x = hi;
            const double up = evaluate(build);
            x = lo;
            const double down = evaluate(build);
            x = saved;
            const double fd = (up - down) / (hi - lo);
            const double ad = analytic.values()[i];
            const double denom = std::max({std::abs(ad), std::abs(fd), 1e-12});
            worst = std::max(worst, std::abs(ad - fd) / denom);
        }
    }
    return worst;
}

}  // namespace phgnn
