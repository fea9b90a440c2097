#pragma once

// Reverse-mode automatic differentiation over row-major matrices.
//
// A Tape records every operation in topological order. Values are
// matrices of shape rows x cols; a batch of pixel spectra is one node with
// one row per pixel, so a whole ODE solve over a batch is a few hundred
// nodes. Tapes are single-threaded and owned by one computation.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace dinsat::diff {

struct Shape {
    std::size_t rows = 1;
    std::size_t cols = 1;

    std::size_t size() const noexcept { return rows * cols; }
    bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
    friend bool operator==(Shape, Shape) = default;
};

enum class Op : std::uint8_t {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    Axpy,
    Neg,
    MulRow,
    DivRow,
    AddRow,
    Linear,
    Sigmoid,
    Exp,
    Softplus,
    Abs,
    Square,
    FloorMin,
    BandDiff,
    Slice,
    Sum,
    Mean,
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives
/// and has not been cleared.
class Var {
public:
    Var() = default;

    Tape& tape() const noexcept { return *tape_; }
    std::uint32_t id() const noexcept { return id_; }
    Shape shape() const;
    std::span<const double> value() const;
    /// Value of a 1x1 node.
    double scalar() const;

private:
    friend class Tape;
    Var(Tape* t, std::uint32_t id) : tape_(t), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

class Gradients {
public:
    /// Gradient with respect to `v`; all zeros if `v` does not influence the
    /// output.
    std::span<const double> wrt(Var v) const;

private:
    friend class Tape;
    std::vector<std::vector<double>> grads_;
    std::vector<Shape> shapes_;
    std::vector<double> zeros_;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input.
    Var leaf(std::vector<double> value, Shape shape);
    Var leaf(std::vector<double> value) {
        const auto n = value.size();
        return leaf(std::move(value), {1, n});
    }
    /// Non-differentiable input.
    Var constant(std::vector<double> value, Shape shape);
    Var constant(std::vector<double> value) {
        const auto n = value.size();
        return constant(std::move(value), {1, n});
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() noexcept { nodes_.clear(); }

    Shape shape(Var v) const { return nodes_[v.id()].shape; }
    std::span<const double> value(Var v) const { return nodes_[v.id()].value; }
    Op op(Var v) const { return nodes_[v.id()].op; }
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    /// Reverse pass from a scalar output.
    Gradients backward(Var output) const;

    // Node construction used by the op free functions.
    Var push(Op op, Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
             double param = 0.0, std::size_t aux = 0);

private:
    struct Node {
        Op op;
        bool requires_grad;
        Shape shape;
        std::uint32_t in[3];
        std::uint8_t n_in;
        double param;     // scale factor, floor, ...
        std::size_t aux;  // slice offset
        std::vector<double> value;
    };

    void accumulate(const Node& node, std::span<const double> g,
                    std::vector<std::vector<double>>& grads) const;

    std::vector<Node> nodes_;
};

// Elementwise, same shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Caller keeps |b| away from zero.
Var div(Var a, Var b);
Var scale(Var a, double s);
/// a + s * b
Var axpy(Var a, double s, Var b);
Var neg(Var a);

// Row broadcasts: `row` is 1 x cols and applies to every row of `m`.
Var mul_row(Var m, Var row);
Var div_row(Var m, Var row);
Var add_row(Var m, Var row);

/// x: rows x in, w: out x in (row-major), b: 1 x out. Returns rows x out,
/// i.e. a matrix-vector product for every row of x.
Var linear(Var x, Var w, Var b);
/// Single-vector form: w (out x in) times x (1 x in).
Var matvec(Var w, Var x);

Var sigmoid(Var a);
Var exp(Var a);
Var softplus(Var a);
/// Subgradient 0 at 0.
Var abs(Var a);
Var square(Var a);
/// max(a, floor), gradient passes where a >= floor.
Var floor_min(Var a, double floor);
/// First difference along columns: out[r][i] = a[r][i+1] - a[r][i].
Var band_diff(Var a);
/// Contiguous window of a flat vector, reshaped.
Var slice(Var flat, std::size_t offset, Shape shape);
Var sum(Var a);
Var mean(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return neg(a); }

// Scalar helpers shared with non-traced code.
double sigmoid(double x) noexcept;
double softplus(double x) noexcept;
/// Inverse of softplus for y > 0.
double softplus_inverse(double y) noexcept;

}  // namespace dinsat::diff
