#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace relgnn {

/// Dense row-major matrix of doubles; vectors are 1 x n or n x 1.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    static Matrix row(std::initializer_list<double> values);
    static Matrix column(std::initializer_list<double> values);
    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<double> row_span(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row_span(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape is alive.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
    double scalar() const;
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Append-only record of operations for reverse-mode differentiation.
/// Inputs are always recorded before their outputs, so reverse insertion
/// order is a valid topological order for backward().
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value, bool requires_grad = true);
    Var constant(Matrix value) { return leaf(std::move(value), false); }

    /// Records a computed value. `back` reads grad(self) and accumulates
    /// into the inputs' gradients.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward back);
    Var record(Matrix value, std::span<const Var> inputs, Backward back);

    /// Zeroes all gradient buffers, seeds d root / d root = 1 and walks the
    /// tape in reverse once. Root must be 1 x 1.
    void backward(Var root);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient buffer for accumulation inside Backward callbacks.
    Matrix& grad_buffer(std::size_t id);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backward back;
    };
    std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. All inputs must live on the same tape.

Var matmul(Var a, Var b);
/// Same shape, or b is 1 x cols (added to every row).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// a * x + b elementwise.
Var affine(Var a, double mul, double offset);
/// Same shape, or b is rows x 1 (scales each row of a).
Var elementwise_mul(Var a, Var b);
/// Joins the rows of the inputs end to end: [1,2] ++ [3] -> [1,2,3].
Var concat_rows(std::span<const Var> parts);
/// Stacks inputs vertically (same column count).
Var stack_rows(std::span<const Var> parts);

Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var clamp(Var a, double lo, double hi);

/// Softmax of a column vector within contiguous groups
/// [offsets[g], offsets[g+1]). Every group must be non-empty.
Var masked_softmax(Var scores, std::span<const std::size_t> offsets);

Var gather_rows(Var a, std::span<const std::size_t> index);
/// out[segment[i]] += a[i]; out has `segments` rows.
Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments);
/// Row sums as a rows x 1 column.
Var sum_cols(Var a);
Var sum(Var a);
Var mean(Var a);
/// sum_b coeff(r, b) * bases[b].
Var basis_combine(std::span<const Var> bases, Var coeff, std::size_t r);

// Plain (untaped) helpers.
Matrix matmul(const Matrix& a, const Matrix& b);
double leaky_relu(double x, double slope);
double sigmoid(double x);

}  // namespace relgnn
