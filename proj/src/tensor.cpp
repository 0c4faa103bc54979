#include "relgnn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "relgnn/error.hpp"

namespace relgnn {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) {
        fail(ErrorKind::invalid_argument, "matrix data length " + std::to_string(data.size()) +
                                              " does not match shape " + shape_string());
    }
}

Matrix Matrix::row(std::initializer_list<double> values) {
    return Matrix(1, values.size(), std::vector<double>(values));
}

Matrix Matrix::column(std::initializer_list<double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_string() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
    const auto& v = value();
    if (v.size() != 1) fail(ErrorKind::invalid_argument, "scalar() on " + v.shape_string());
    return v.data[0];
}

Var Tape::leaf(Matrix value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward back) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(back));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward back) {
    bool needs = false;
    for (const auto& v : inputs) {
        if (v.tape() != this) fail(ErrorKind::invalid_argument, "operands recorded on different tapes");
        needs = needs || nodes_[v.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(back) : Backward{}});
    return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const { return nodes_[id].grad; }

Matrix& Tape::grad_buffer(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.size() != n.value.size() || n.grad.rows != n.value.rows) {
        n.grad = Matrix(n.value.rows, n.value.cols);
    }
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape() != this) fail(ErrorKind::invalid_argument, "backward root is not on this tape");
    if (value(root.id()).size() != 1) {
        fail(ErrorKind::invalid_argument, "backward root must be scalar, got " + value(root.id()).shape_string());
    }
    for (auto& n : nodes_) n.grad = n.requires_grad ? Matrix(n.value.rows, n.value.cols) : Matrix();
    if (!nodes_[root.id()].requires_grad) return;
    nodes_[root.id()].grad.data[0] = 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.requires_grad || !n.back) continue;
        n.back(*this, i);
    }
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    fail(ErrorKind::invalid_argument,
         std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

Tape& tape_of(Var a) {
    if (!a.valid()) fail(ErrorKind::invalid_argument, "operation on an empty Var");
    return *a.tape();
}

void accumulate(Tape& t, Var v, const Matrix& g) {
    if (!t.requires_grad(v.id())) return;
    auto& buf = t.grad_buffer(v.id());
    for (std::size_t i = 0; i < g.data.size(); ++i) buf.data[i] += g.data[i];
}

template <typename F>
Var unary(Var a, F&& f, std::function<double(double x, double y)> dfdx) {
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
    return t.record(std::move(y), {a}, [a, dfdx](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(a.id())) return;
        const Matrix& g = tp.grad(self);
        const Matrix& x = tp.value(a.id());
        const Matrix& y = tp.value(self);
        auto& buf = tp.grad_buffer(a.id());
        for (std::size_t i = 0; i < g.size(); ++i) buf.data[i] += g.data[i] * dfdx(x.data[i], y.data[i]);
    });
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) shape_error("matmul", a, b);
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.data[i * a.cols + k];
            if (aik == 0.0) continue;
            const double* bk = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a);
    Matrix c = matmul(a.value(), b.value());
    return t.record(std::move(c), {a, b}, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Matrix& A = tp.value(a.id());
        const Matrix& B = tp.value(b.id());
        if (tp.requires_grad(a.id())) {
            // dA = g * B^T
            auto& ga = tp.grad_buffer(a.id());
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t k = 0; k < A.cols; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < B.cols; ++j) s += g.data[i * g.cols + j] * B.data[k * B.cols + j];
                    ga.data[i * A.cols + k] += s;
                }
            }
        }
        if (tp.requires_grad(b.id())) {
            // dB = A^T * g
            auto& gb = tp.grad_buffer(b.id());
            for (std::size_t i = 0; i < A.rows; ++i) {
                for (std::size_t k = 0; k < A.cols; ++k) {
                    const double aik = A.data[i * A.cols + k];
                    if (aik == 0.0) continue;
                    for (std::size_t j = 0; j < B.cols; ++j) gb.data[k * B.cols + j] += aik * g.data[i * g.cols + j];
                }
            }
        }
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    const bool broadcast = B.rows == 1 && B.cols == A.cols && A.rows != 1;
    if (!broadcast && (A.rows != B.rows || A.cols != B.cols)) shape_error("add", A, B);
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += B.data[broadcast ? i % B.cols : i];
    return t.record(std::move(c), {a, b}, [a, b, broadcast](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        accumulate(tp, a, g);
        if (!tp.requires_grad(b.id())) return;
        auto& gb = tp.grad_buffer(b.id());
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[broadcast ? i % gb.cols : i] += g.data[i];
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    if (A.rows != B.rows || A.cols != B.cols) shape_error("sub", A, B);
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] -= B.data[i];
    return t.record(std::move(c), {a, b}, [a, b](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        accumulate(tp, a, g);
        if (!tp.requires_grad(b.id())) return;
        auto& gb = tp.grad_buffer(b.id());
        for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] -= g.data[i];
    });
}

Var scale(Var a, double s) { return affine(a, s, 0.0); }

Var affine(Var a, double mul, double offset) {
    return unary(
        a, [mul, offset](double x) { return mul * x + offset; },
        [mul](double, double) { return mul; });
}

Var elementwise_mul(Var a, Var b) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    const bool per_row = B.cols == 1 && B.rows == A.rows && A.cols != 1;
    if (!per_row && (A.rows != B.rows || A.cols != B.cols)) shape_error("elementwise_mul", A, B);
    Matrix c = A;
    for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= B.data[per_row ? i / A.cols : i];
    return t.record(std::move(c), {a, b}, [a, b, per_row](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Matrix& A = tp.value(a.id());
        const Matrix& B = tp.value(b.id());
        if (tp.requires_grad(a.id())) {
            auto& ga = tp.grad_buffer(a.id());
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * B.data[per_row ? i / A.cols : i];
        }
        if (tp.requires_grad(b.id())) {
            auto& gb = tp.grad_buffer(b.id());
            for (std::size_t i = 0; i < g.size(); ++i) gb.data[per_row ? i / A.cols : i] += g.data[i] * A.data[i];
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) fail(ErrorKind::invalid_argument, "concat_rows: no inputs");
    Tape& t = tape_of(parts[0]);
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) shape_error("concat_rows", parts[0].value(), p.value());
        cols += p.cols();
    }
    Matrix c(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const Matrix& P = p.value();
        for (std::size_t i = 0; i < rows; ++i) {
            std::copy_n(P.data.data() + i * P.cols, P.cols, c.data.data() + i * cols + off);
        }
        off += P.cols;
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return t.record(std::move(c), parts, [inputs](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        std::size_t off = 0;
        for (const auto& p : inputs) {
            const std::size_t pc = tp.value(p.id()).cols;
            if (tp.requires_grad(p.id())) {
                auto& gp = tp.grad_buffer(p.id());
                for (std::size_t i = 0; i < g.rows; ++i) {
                    for (std::size_t j = 0; j < pc; ++j) gp.data[i * pc + j] += g.data[i * g.cols + off + j];
                }
            }
            off += pc;
        }
    });
}

Var stack_rows(std::span<const Var> parts) {
    if (parts.empty()) fail(ErrorKind::invalid_argument, "stack_rows: no inputs");
    Tape& t = tape_of(parts[0]);
    const std::size_t cols = parts[0].cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) shape_error("stack_rows", parts[0].value(), p.value());
        rows += p.rows();
    }
    Matrix c(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.value().data.begin(), p.value().data.end(), c.data.begin() + static_cast<std::ptrdiff_t>(off));
        off += p.value().size();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return t.record(std::move(c), parts, [inputs](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        std::size_t off = 0;
        for (const auto& p : inputs) {
            const std::size_t n = tp.value(p.id()).size();
            if (tp.requires_grad(p.id())) {
                auto& gp = tp.grad_buffer(p.id());
                for (std::size_t i = 0; i < n; ++i) gp.data[i] += g.data[off + i];
            }
            off += n;
        }
    });
}

Var leaky_relu(Var a, double slope) {
    if (!(slope > 0.0 && slope < 1.0)) {
        fail(ErrorKind::invalid_argument, "leaky_relu slope must lie in (0, 1), got " + std::to_string(slope));
    }
    return unary(
        a, [slope](double x) { return leaky_relu(x, slope); },
        [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var sigmoid(Var a) {
    return unary(
        a, [](double x) { return sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    return unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
    return unary(
        a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var masked_softmax(Var scores, std::span<const std::size_t> offsets) {
    Tape& t = tape_of(scores);
    const Matrix& S = scores.value();
    if (S.cols != 1) fail(ErrorKind::invalid_argument, "masked_softmax expects a column, got " + S.shape_string());
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != S.rows) {
        fail(ErrorKind::invalid_argument, "masked_softmax: group boundaries do not cover " + S.shape_string());
    }
    Matrix y(S.rows, 1);
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
        const std::size_t b = offsets[g], e = offsets[g + 1];
        if (e <= b) fail(ErrorKind::invalid_argument, "masked_softmax: group " + std::to_string(g) + " is empty");
        double m = S.data[b];
        for (std::size_t i = b; i < e; ++i) m = std::max(m, S.data[i]);
        double z = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            y.data[i] = std::exp(S.data[i] - m);
            z += y.data[i];
        }
        for (std::size_t i = b; i < e; ++i) y.data[i] /= z;
    }
    std::vector<std::size_t> bounds(offsets.begin(), offsets.end());
    return t.record(std::move(y), {scores}, [scores, bounds](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(scores.id())) return;
        const Matrix& g = tp.grad(self);
        const Matrix& y = tp.value(self);
        auto& gs = tp.grad_buffer(scores.id());
        for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
            double dot = 0.0;
            for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i) dot += g.data[i] * y.data[i];
            for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i) gs.data[i] += y.data[i] * (g.data[i] - dot);
        }
    });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    Matrix c(index.size(), A.cols);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= A.rows) {
            fail(ErrorKind::invalid_argument, "gather_rows: index " + std::to_string(index[i]) +
                                                  " out of range for " + A.shape_string());
        }
        std::copy_n(A.data.data() + index[i] * A.cols, A.cols, c.data.data() + i * A.cols);
    }
    std::vector<std::size_t> idx(index.begin(), index.end());
    return t.record(std::move(c), {a}, [a, idx](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(a.id())) return;
        const Matrix& g = tp.grad(self);
        auto& ga = tp.grad_buffer(a.id());
        const std::size_t cols = g.cols;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < cols; ++j) ga.data[idx[i] * cols + j] += g.data[i * cols + j];
        }
    });
}

Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    if (segment.size() != A.rows) {
        fail(ErrorKind::invalid_argument, "segment_sum: " + std::to_string(segment.size()) +
                                              " segment ids for " + A.shape_string());
    }
    Matrix c(segments, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        if (segment[i] >= segments) fail(ErrorKind::invalid_argument, "segment_sum: segment id out of range");
        for (std::size_t j = 0; j < A.cols; ++j) c.data[segment[i] * A.cols + j] += A.data[i * A.cols + j];
    }
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    return t.record(std::move(c), {a}, [a, seg](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(a.id())) return;
        const Matrix& g = tp.grad(self);
        auto& ga = tp.grad_buffer(a.id());
        const std::size_t cols = g.cols;
        for (std::size_t i = 0; i < seg.size(); ++i) {
            for (std::size_t j = 0; j < cols; ++j) ga.data[i * cols + j] += g.data[seg[i] * cols + j];
        }
    });
}

Var sum_cols(Var a) {
    Tape& t = tape_of(a);
    const Matrix& A = a.value();
    Matrix c(A.rows, 1);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += A.data[i * A.cols + j];
        c.data[i] = s;
    }
    return t.record(std::move(c), {a}, [a](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(a.id())) return;
        const Matrix& g = tp.grad(self);
        auto& ga = tp.grad_buffer(a.id());
        const std::size_t cols = ga.cols;
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i / cols];
    });
}

Var sum(Var a) {
    Tape& t = tape_of(a);
    double s = 0.0;
    for (double x : a.value().data) s += x;
    return t.record(Matrix(1, 1, s), {a}, [a](Tape& tp, std::size_t self) {
        if (!tp.requires_grad(a.id())) return;
        const double g = tp.grad(self).data[0];
        for (auto& x : tp.grad_buffer(a.id()).data) x += g;
    });
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    if (n == 0) fail(ErrorKind::invalid_argument, "mean of an empty matrix");
    return scale(sum(a), 1.0 / n);
}

Var basis_combine(std::span<const Var> bases, Var coeff, std::size_t r) {
    Tape& t = tape_of(coeff);
    const Matrix& C = coeff.value();
    if (C.cols != bases.size() || r >= C.rows) {
        fail(ErrorKind::invalid_argument, "basis_combine: coefficients " + C.shape_string() + " for " +
                                              std::to_string(bases.size()) + " bases, relation " +
                                              std::to_string(r));
    }
    const Matrix& first = bases[0].value();
    Matrix w(first.rows, first.cols);
    for (std::size_t b = 0; b < bases.size(); ++b) {
        const Matrix& V = bases[b].value();
        if (V.rows != w.rows || V.cols != w.cols) shape_error("basis_combine", first, V);
        const double c = C(r, b);
        for (std::size_t i = 0; i < w.size(); ++i) w.data[i] += c * V.data[i];
    }
    std::vector<Var> inputs(bases.begin(), bases.end());
    inputs.push_back(coeff);
    return t.record(std::move(w), inputs, [inputs, r](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Var coeff = inputs.back();
        const Matrix& C = tp.value(coeff.id());
        const std::size_t B = inputs.size() - 1;
        for (std::size_t b = 0; b < B; ++b) {
            const Var basis = inputs[b];
            if (tp.requires_grad(basis.id())) {
                auto& gv = tp.grad_buffer(basis.id());
                const double c = C(r, b);
                for (std::size_t i = 0; i < g.size(); ++i) gv.data[i] += c * g.data[i];
            }
            if (tp.requires_grad(coeff.id())) {
                const Matrix& V = tp.value(basis.id());
                double s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) s += V.data[i] * g.data[i];
                tp.grad_buffer(coeff.id())(r, b) += s;
            }
        }
    });
}

}  // namespace relgnn
