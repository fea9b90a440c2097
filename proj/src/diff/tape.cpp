#include "dinsat/diff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dinsat/error.hpp"
#include "dinsat/simd/kernels.hpp"

namespace dinsat::diff {

namespace {

std::string shape_str(Shape s) { return std::to_string(s.rows) + "x" + std::to_string(s.cols); }

void same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) fail(ErrorKind::Contract, "operands live on different tapes");
}

void same_shape(Var a, Var b, const char* op) {
    same_tape(a, b);
    if (a.shape() != b.shape())
        fail(ErrorKind::Shape, std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
}

void row_compatible(Var m, Var row, const char* op) {
    same_tape(m, row);
    if (row.shape().rows != 1 || row.shape().cols != m.shape().cols)
        fail(ErrorKind::Shape, std::string(op) + ": row " + shape_str(row.shape()) +
                                   " does not broadcast over " + shape_str(m.shape()));
}

void check_finite(const std::vector<double>& v, const char* op) {
    const double m = simd::active().max_abs(v.data(), v.size());
    if (!std::isfinite(m)) fail(ErrorKind::Numeric, std::string(op) + ": non-finite forward value");
}

}  // namespace

double sigmoid(double x) noexcept {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double softplus_inverse(double y) noexcept {
    // log(exp(y) - 1) = y + log(1 - exp(-y))
    return y + std::log(-std::expm1(-y));
}

Shape Var::shape() const { return tape_->shape(*this); }
std::span<const double> Var::value() const { return tape_->value(*this); }
double Var::scalar() const {
    if (!shape().is_scalar()) fail(ErrorKind::Contract, "scalar() on a " + shape_str(shape()) + " node");
    return value()[0];
}

std::span<const double> Gradients::wrt(Var v) const {
    const auto id = v.id();
    if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
    return {zeros_.data(), id < shapes_.size() ? shapes_[id].size() : 0};
}

Var Tape::leaf(std::vector<double> value, Shape shape) {
    if (value.size() != shape.size()) fail(ErrorKind::Shape, "leaf value does not match its shape");
    check_finite(value, "leaf");
    return push(Op::Leaf, shape, std::move(value), {});
}

Var Tape::constant(std::vector<double> value, Shape shape) {
    if (value.size() != shape.size()) fail(ErrorKind::Shape, "constant value does not match its shape");
    check_finite(value, "constant");
    return push(Op::Constant, shape, std::move(value), {});
}

Var Tape::push(Op op, Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
               double param, std::size_t aux) {
    Node n{};
    n.op = op;
    n.shape = shape;
    n.param = param;
    n.aux = aux;
    n.n_in = static_cast<std::uint8_t>(inputs.size());
    n.requires_grad = op == Op::Leaf;
    std::size_t k = 0;
    for (Var v : inputs) {
        n.in[k++] = v.id();
        n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

// ---------------------------------------------------------------------------
// Forward ops

Var add(Var a, Var b) {
    same_shape(a, b, "add");
    std::vector<double> out(a.shape().size());
    simd::active().add(a.value().data(), b.value().data(), out.data(), out.size());
    check_finite(out, "add");
    return a.tape().push(Op::Add, a.shape(), std::move(out), {a, b});
}

Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    std::vector<double> out(a.shape().size());
    simd::active().sub(a.value().data(), b.value().data(), out.data(), out.size());
    check_finite(out, "sub");
    return a.tape().push(Op::Sub, a.shape(), std::move(out), {a, b});
}

Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    std::vector<double> out(a.shape().size());
    simd::active().mul(a.value().data(), b.value().data(), out.data(), out.size());
    check_finite(out, "mul");
    return a.tape().push(Op::Mul, a.shape(), std::move(out), {a, b});
}

Var div(Var a, Var b) {
    same_shape(a, b, "div");
    std::vector<double> out(a.shape().size());
    simd::active().div(a.value().data(), b.value().data(), out.data(), out.size());
    check_finite(out, "div");
    return a.tape().push(Op::Div, a.shape(), std::move(out), {a, b});
}

Var scale(Var a, double s) {
    std::vector<double> out(a.shape().size());
    simd::active().scale(a.value().data(), s, out.data(), out.size());
    check_finite(out, "scale");
    return a.tape().push(Op::Scale, a.shape(), std::move(out), {a}, s);
}

Var axpy(Var a, double s, Var b) {
    same_shape(a, b, "axpy");
    std::vector<double> out(a.shape().size());
    simd::active().axpy(a.value().data(), s, b.value().data(), out.data(), out.size());
    check_finite(out, "axpy");
    return a.tape().push(Op::Axpy, a.shape(), std::move(out), {a, b}, s);
}

Var neg(Var a) {
    std::vector<double> out(a.shape().size());
    simd::active().scale(a.value().data(), -1.0, out.data(), out.size());
    return a.tape().push(Op::Neg, a.shape(), std::move(out), {a});
}

Var mul_row(Var m, Var row) {
    row_compatible(m, row, "mul_row");
    const auto [rows, cols] = m.shape();
    std::vector<double> out(rows * cols);
    const auto& k = simd::active();
    for (std::size_t r = 0; r < rows; ++r)
        k.mul(m.value().data() + r * cols, row.value().data(), out.data() + r * cols, cols);
    check_finite(out, "mul_row");
    return m.tape().push(Op::MulRow, m.shape(), std::move(out), {m, row});
}

Var div_row(Var m, Var row) {
    row_compatible(m, row, "div_row");
    const auto [rows, cols] = m.shape();
    std::vector<double> out(rows * cols);
    const auto& k = simd::active();
    for (std::size_t r = 0; r < rows; ++r)
        k.div(m.value().data() + r * cols, row.value().data(), out.data() + r * cols, cols);
    check_finite(out, "div_row");
    return m.tape().push(Op::DivRow, m.shape(), std::move(out), {m, row});
}

Var add_row(Var m, Var row) {
    row_compatible(m, row, "add_row");
    const auto [rows, cols] = m.shape();
    std::vector<double> out(rows * cols);
    const auto& k = simd::active();
    for (std::size_t r = 0; r < rows; ++r)
        k.add(m.value().data() + r * cols, row.value().data(), out.data() + r * cols, cols);
    check_finite(out, "add_row");
    return m.tape().push(Op::AddRow, m.shape(), std::move(out), {m, row});
}

Var linear(Var x, Var w, Var b) {
    same_tape(x, w);
    same_tape(x, b);
    const Shape xs = x.shape(), ws = w.shape(), bs = b.shape();
    if (ws.cols != xs.cols || bs.rows != 1 || bs.cols != ws.rows)
        fail(ErrorKind::Shape, "linear: x " + shape_str(xs) + ", w " + shape_str(ws) + ", b " +
                                   shape_str(bs) + " are incompatible");
    const std::size_t rows = xs.rows, in = xs.cols, outd = ws.rows;
    std::vector<double> out(rows * outd);
    const auto& k = simd::active();
    for (std::size_t r = 0; r < rows; ++r) {
        double* y = out.data() + r * outd;
        k.gemv(w.value().data(), x.value().data() + r * in, y, outd, in);
        k.add(y, b.value().data(), y, outd);
    }
    check_finite(out, "linear");
    return x.tape().push(Op::Linear, {rows, outd}, std::move(out), {x, w, b});
}

Var matvec(Var w, Var x) {
    const auto bias = x.tape().constant(std::vector<double>(w.shape().rows, 0.0), {1, w.shape().rows});
    return linear(x, w, bias);
}

namespace {

template <typename F>
Var unary(Var a, Op op, const char* name, F f, double param = 0.0) {
    const auto in = a.value();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    check_finite(out, name);
    return a.tape().push(op, a.shape(), std::move(out), {a}, param);
}

}  // namespace

Var sigmoid(Var a) {
    return unary(a, Op::Sigmoid, "sigmoid", [](double x) { return sigmoid(x); });
}

Var exp(Var a) {
    return unary(a, Op::Exp, "exp", [](double x) { return std::exp(x); });
}

Var softplus(Var a) {
    return unary(a, Op::Softplus, "softplus", [](double x) { return softplus(x); });
}

Var abs(Var a) {
    std::vector<double> out(a.shape().size());
    simd::active().abs(a.value().data(), out.data(), out.size());
    return a.tape().push(Op::Abs, a.shape(), std::move(out), {a});
}

Var square(Var a) {
    std::vector<double> out(a.shape().size());
    simd::active().mul(a.value().data(), a.value().data(), out.data(), out.size());
    check_finite(out, "square");
    return a.tape().push(Op::Square, a.shape(), std::move(out), {a});
}

Var floor_min(Var a, double floor) {
    return unary(a, Op::FloorMin, "floor_min", [floor](double x) { return x >= floor ? x : floor; },
                 floor);
}

Var band_diff(Var a) {
    const auto [rows, cols] = a.shape();
    if (cols < 2) fail(ErrorKind::Shape, "band_diff needs at least 2 columns");
    std::vector<double> out(rows * (cols - 1));
    const auto& k = simd::active();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = a.value().data() + r * cols;
        k.sub(src + 1, src, out.data() + r * (cols - 1), cols - 1);
    }
    return a.tape().push(Op::BandDiff, {rows, cols - 1}, std::move(out), {a});
}

Var slice(Var flat, std::size_t offset, Shape shape) {
    const auto src = flat.value();
    if (offset + shape.size() > src.size())
        fail(ErrorKind::Shape, "slice [" + std::to_string(offset) + ", " +
                                   std::to_string(offset + shape.size()) + ") exceeds length " +
                                   std::to_string(src.size()));
    std::vector<double> out(src.begin() + static_cast<std::ptrdiff_t>(offset),
                            src.begin() + static_cast<std::ptrdiff_t>(offset + shape.size()));
    return flat.tape().push(Op::Slice, shape, std::move(out), {flat}, 0.0, offset);
}

Var sum(Var a) {
    const auto v = a.value();
    std::vector<double> out{simd::active().sum(v.data(), v.size())};
    check_finite(out, "sum");
    return a.tape().push(Op::Sum, {1, 1}, std::move(out), {a});
}

Var mean(Var a) {
    const auto v = a.value();
    if (v.empty()) fail(ErrorKind::EmptyInput, "mean of an empty node");
    std::vector<double> out{simd::active().sum(v.data(), v.size()) / static_cast<double>(v.size())};
    check_finite(out, "mean");
    return a.tape().push(Op::Mean, {1, 1}, std::move(out), {a});
}

// ---------------------------------------------------------------------------
// Reverse pass

Gradients Tape::backward(Var output) const {
    if (&output.tape() != this) fail(ErrorKind::Contract, "backward: output is on another tape");
    const Node& out = nodes_[output.id()];
    if (!out.shape.is_scalar())
        fail(ErrorKind::Contract, "backward needs a scalar output, got " + shape_str(out.shape));

    Gradients result;
    result.grads_.resize(output.id() + 1);
    result.shapes_.reserve(nodes_.size());
    std::size_t widest = 0;
    for (const auto& n : nodes_) {
        result.shapes_.push_back(n.shape);
        widest = std::max(widest, n.shape.size());
    }
    result.zeros_.assign(widest, 0.0);

    auto& grads = result.grads_;
    grads[output.id()] = {1.0};
    for (std::size_t id = output.id() + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (grads[id].empty() || node.n_in == 0) continue;
        accumulate(node, grads[id], grads);
        // Interior gradients are no longer needed once propagated; leaves stay.
        if (node.op != Op::Leaf) std::vector<double>().swap(grads[id]);
    }
    return result;
}

void Tape::accumulate(const Node& node, std::span<const double> g,
                      std::vector<std::vector<double>>& grads) const {
    const auto& k = simd::active();
    auto target = [&](int which) -> double* {
        const std::uint32_t id = node.in[which];
        const Node& in = nodes_[id];
        if (!in.requires_grad) return nullptr;
        auto& buf = grads[id];
        if (buf.empty()) buf.assign(in.shape.size(), 0.0);
        return buf.data();
    };
    auto input = [&](int which) -> const std::vector<double>& { return nodes_[node.in[which]].value; };
    const std::size_t n = g.size();

    switch (node.op) {
        case Op::Leaf:
        case Op::Constant:
            break;
        case Op::Add:
            if (double* ga = target(0)) k.add(ga, g.data(), ga, n);
            if (double* gb = target(1)) k.add(gb, g.data(), gb, n);
            break;
        case Op::Sub:
            if (double* ga = target(0)) k.add(ga, g.data(), ga, n);
            if (double* gb = target(1)) k.sub(gb, g.data(), gb, n);
            break;
        case Op::Mul:
            if (double* ga = target(0)) k.mul_acc(g.data(), input(1).data(), ga, n);
            if (double* gb = target(1)) k.mul_acc(g.data(), input(0).data(), gb, n);
            break;
        case Op::Div: {
            const auto& b = input(1);
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / b[i];
            if (double* gb = target(1))
                for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i] * node.value[i] / b[i];
            break;
        }
        case Op::Scale:
            if (double* ga = target(0)) k.scale_acc(g.data(), node.param, ga, n);
            break;
        case Op::Axpy:
            if (double* ga = target(0)) k.add(ga, g.data(), ga, n);
            if (double* gb = target(1)) k.scale_acc(g.data(), node.param, gb, n);
            break;
        case Op::Neg:
            if (double* ga = target(0)) k.sub(ga, g.data(), ga, n);
            break;
        case Op::MulRow: {
            const auto [rows, cols] = node.shape;
            const auto& m = input(0);
            const auto& row = input(1);
            if (double* gm = target(0))
                for (std::size_t r = 0; r < rows; ++r) k.mul_acc(g.data() + r * cols, row.data(), gm + r * cols, cols);
            if (double* gr = target(1))
                for (std::size_t r = 0; r < rows; ++r) k.mul_acc(g.data() + r * cols, m.data() + r * cols, gr, cols);
            break;
        }
        case Op::DivRow: {
            const auto [rows, cols] = node.shape;
            const auto& row = input(1);
            if (double* gm = target(0))
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] += g[r * cols + c] / row[c];
            if (double* gr = target(1))
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                        gr[c] -= g[r * cols + c] * node.value[r * cols + c] / row[c];
            break;
        }
        case Op::AddRow: {
            const auto [rows, cols] = node.shape;
            if (double* gm = target(0)) k.add(gm, g.data(), gm, n);
            if (double* gr = target(1))
                for (std::size_t r = 0; r < rows; ++r) k.add(gr, g.data() + r * cols, gr, cols);
            break;
        }
        case Op::Linear: {
            const auto& x = input(0);
            const auto& w = input(1);
            const Shape ws = nodes_[node.in[1]].shape;
            const std::size_t rows = node.shape.rows, outd = ws.rows, in = ws.cols;
            if (double* gx = target(0))
                for (std::size_t r = 0; r < rows; ++r)
                    k.gemv_t_acc(w.data(), g.data() + r * outd, gx + r * in, outd, in);
            if (double* gw = target(1))
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t o = 0; o < outd; ++o)
                        k.scale_acc(x.data() + r * in, g[r * outd + o], gw + o * in, in);
            if (double* gb = target(2))
                for (std::size_t r = 0; r < rows; ++r) k.add(gb, g.data() + r * outd, gb, outd);
            break;
        }
        case Op::Sigmoid:
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i) {
                    const double y = node.value[i];
                    ga[i] += g[i] * y * (1.0 - y);
                }
            break;
        case Op::Exp:
            if (double* ga = target(0)) k.mul_acc(g.data(), node.value.data(), ga, n);
            break;
        case Op::Softplus: {
            const auto& a = input(0);
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * sigmoid(a[i]);
            break;
        }
        case Op::Abs: {
            const auto& a = input(0);
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i) ga[i] += a[i] > 0 ? g[i] : (a[i] < 0 ? -g[i] : 0.0);
            break;
        }
        case Op::Square: {
            const auto& a = input(0);
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i) ga[i] += 2.0 * g[i] * a[i];
            break;
        }
        case Op::FloorMin: {
            const auto& a = input(0);
            if (double* ga = target(0))
                for (std::size_t i = 0; i < n; ++i)
                    if (a[i] >= node.param) ga[i] += g[i];
            break;
        }
        case Op::BandDiff: {
            const std::size_t rows = node.shape.rows, dc = node.shape.cols, cols = dc + 1;
            if (double* ga = target(0))
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* gr = g.data() + r * dc;
                    double* dst = ga + r * cols;
                    k.add(dst + 1, gr, dst + 1, dc);
                    k.sub(dst, gr, dst, dc);
                }
            break;
        }
        case Op::Slice:
            if (double* ga = target(0)) k.add(ga + node.aux, g.data(), ga + node.aux, n);
            break;
        case Op::Sum:
        case Op::Mean: {
            if (double* ga = target(0)) {
                const std::size_t m = nodes_[node.in[0]].shape.size();
                const double s = node.op == Op::Sum ? g[0] : g[0] / static_cast<double>(m);
                for (std::size_t i = 0; i < m; ++i) ga[i] += s;
            }
            break;
        }
    }
}

}  // namespace dinsat::diff
