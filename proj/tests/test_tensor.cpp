#include <doctest.h>

#include <cmath>
#include <functional>

#include "relgnn/error.hpp"
#include "relgnn/rng.hpp"
#include "relgnn/tensor.hpp"

using namespace relgnn;

namespace {

using Builder = std::function<Var(std::vector<Var>&)>;

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (auto& x : m.data) x = uniform_real(rng, lo, hi);
    return m;
}

// Away from the leaky-relu kink.
Matrix random_off_zero(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& x : m.data) {
        do {
            x = uniform_real(rng, -1.0, 1.0);
        } while (std::abs(x) < 1e-3);
    }
    return m;
}

double evaluate(const std::vector<Matrix>& inputs, const Builder& f) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m));
    return f(vars).scalar();
}

// Max relative error between the tape gradient and central differences.
double gradient_error(std::vector<Matrix> inputs, const Builder& f, double h = 1e-5) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m));
    Var root = f(vars);
    tape.backward(root);
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix analytic = vars[k].grad();
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k].data[i];
            inputs[k].data[i] = x0 + h;
            const double up = evaluate(inputs, f);
            inputs[k].data[i] = x0 - h;
            const double down = evaluate(inputs, f);
            inputs[k].data[i] = x0;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic.data[i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
            if (std::abs(a - numeric) > 1e-9) worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("matmul identity and concat examples") {
    Tape tape;
    Matrix x(3, 2, {1, 2, 3, 4, 5, 6});
    auto y = matmul(tape.constant(Matrix::identity(3)), tape.constant(x));
    CHECK(y.value() == x);
    Var parts[] = {tape.constant(Matrix::row({1, 2})), tape.constant(Matrix::row({3}))};
    CHECK(concat_rows(parts).value() == Matrix::row({1, 2, 3}));
}

TEST_CASE("shape mismatch names both shapes") {
    Tape tape;
    auto a = tape.constant(Matrix(2, 3));
    auto b = tape.constant(Matrix(2, 3));
    try {
        matmul(a, b);
        FAIL("expected an error");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("2x3") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, tape.constant(Matrix(3, 3))), Error);
    CHECK_THROWS_AS(elementwise_mul(a, tape.constant(Matrix(3, 1))), Error);
}

TEST_CASE("scalar function examples") {
    CHECK(leaky_relu(-1.0, 0.2) == doctest::Approx(-0.2));
    CHECK(leaky_relu(2.0, 0.2) == 2.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::isfinite(sigmoid(-800.0)));
    CHECK(sigmoid(800.0) == 1.0);
    Tape tape;
    CHECK_THROWS_AS(leaky_relu(tape.constant(Matrix(1, 1)), 1.5), Error);
    CHECK_THROWS_AS(leaky_relu(tape.constant(Matrix(1, 1)), 0.0), Error);
}

TEST_CASE("leaky relu gradient at zero is the positive branch") {
    Tape tape;
    auto x = tape.leaf(Matrix(1, 1, 0.0));
    auto y = sum(leaky_relu(x, 0.2));
    tape.backward(y);
    CHECK(x.grad().data[0] == 1.0);
}

TEST_CASE("masked softmax examples") {
    Tape tape;
    std::size_t one[] = {0, 1};
    CHECK(masked_softmax(tape.constant(Matrix::column({3.0})), one).value().data[0] == 1.0);
    std::size_t two[] = {0, 2};
    auto eq = masked_softmax(tape.constant(Matrix::column({0.0, 0.0})), two).value();
    CHECK(eq.data[0] == 0.5);
    CHECK(eq.data[1] == 0.5);
    auto big = masked_softmax(tape.constant(Matrix::column({1000.0, 1001.0})), two).value();
    const double e1 = std::exp(1.0);
    CHECK(big.data[0] == doctest::Approx(1.0 / (1.0 + e1)).epsilon(1e-12));
    CHECK(big.data[1] == doctest::Approx(e1 / (1.0 + e1)).epsilon(1e-12));
    CHECK(big.data[0] == doctest::Approx(0.2689).epsilon(1e-3));
    std::size_t empty_group[] = {0, 0, 2};
    CHECK_THROWS_AS(masked_softmax(tape.constant(Matrix::column({1.0, 2.0})), empty_group), Error);
}

TEST_CASE("masked softmax sums to one and is shift invariant") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> offsets{0};
        while (offsets.back() < 40) offsets.push_back(offsets.back() + 1 + uniform_index(rng, 6));
        const std::size_t n = offsets.back();
        Matrix s = random_matrix(rng, n, 1, -20, 20);
        Matrix shifted = s;
        for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
            const double c = uniform_real(rng, -50, 50);
            for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i) shifted.data[i] += c;
        }
        Tape tape;
        auto a = masked_softmax(tape.constant(s), offsets).value();
        auto b = masked_softmax(tape.constant(shifted), offsets).value();
        for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
            double total = 0.0;
            for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i) {
                CHECK(a.data[i] > 0.0);
                total += a.data[i];
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a.data[i] - b.data[i]) <= 1e-12);
    }
}

TEST_CASE("backward closed forms") {
    SUBCASE("identity") {
        Tape tape;
        auto x = tape.leaf(Matrix(1, 1, 3.0));
        tape.backward(x);
        CHECK(x.grad().data[0] == 1.0);
    }
    SUBCASE("sigmoid of a dot product") {
        Tape tape;
        auto w = tape.leaf(Matrix::row({0.3, -0.2}));
        auto x = tape.constant(Matrix::column({1.5, 2.0}));
        auto y = sigmoid(matmul(w, x));
        tape.backward(y);
        const double z = 0.3 * 1.5 - 0.2 * 2.0;
        const double s = 1.0 / (1.0 + std::exp(-z));
        CHECK(w.grad().data[0] == doctest::Approx(s * (1 - s) * 1.5).epsilon(1e-14));
        CHECK(w.grad().data[1] == doctest::Approx(s * (1 - s) * 2.0).epsilon(1e-14));
    }
    SUBCASE("non-scalar root") {
        Tape tape;
        auto x = tape.leaf(Matrix(2, 1, 1.0));
        CHECK_THROWS_AS(tape.backward(x), Error);
    }
}

TEST_CASE("sum of matmul gradient matches finite differences") {
    Rng rng(1);
    auto err = gradient_error({random_matrix(rng, 4, 3), random_matrix(rng, 3, 2)},
                              [](std::vector<Var>& v) { return sum(matmul(v[0], v[1])); });
    CHECK(err < 1e-6);
}

TEST_CASE("every primitive passes the finite-difference check") {
    Rng rng(2024);
    // A fixed random weighting turns each op output into a scalar with
    // non-trivial upstream gradients.
    auto weigh = [](Var y, const Matrix& w) { return sum(elementwise_mul(y, y.tape()->constant(w))); };
    struct Case {
        const char* name;
        std::function<std::vector<Matrix>(Rng&)> inputs;
        std::function<Var(std::vector<Var>&)> op;
    };
    std::vector<Case> cases = {
        {"matmul", [](Rng& r) { return std::vector{random_matrix(r, 3, 4), random_matrix(r, 4, 2)}; },
         [](std::vector<Var>& v) { return matmul(v[0], v[1]); }},
        {"add", [](Rng& r) { return std::vector{random_matrix(r, 3, 4), random_matrix(r, 3, 4)}; },
         [](std::vector<Var>& v) { return add(v[0], v[1]); }},
        {"add_broadcast", [](Rng& r) { return std::vector{random_matrix(r, 3, 4), random_matrix(r, 1, 4)}; },
         [](std::vector<Var>& v) { return add(v[0], v[1]); }},
        {"sub", [](Rng& r) { return std::vector{random_matrix(r, 2, 3), random_matrix(r, 2, 3)}; },
         [](std::vector<Var>& v) { return sub(v[0], v[1]); }},
        {"scale", [](Rng& r) { return std::vector{random_matrix(r, 2, 3)}; },
         [](std::vector<Var>& v) { return scale(v[0], -1.7); }},
        {"affine", [](Rng& r) { return std::vector{random_matrix(r, 2, 3)}; },
         [](std::vector<Var>& v) { return affine(v[0], 0.4, 2.0); }},
        {"elementwise_mul", [](Rng& r) { return std::vector{random_matrix(r, 3, 2), random_matrix(r, 3, 2)}; },
         [](std::vector<Var>& v) { return elementwise_mul(v[0], v[1]); }},
        {"row_scale", [](Rng& r) { return std::vector{random_matrix(r, 3, 2), random_matrix(r, 3, 1)}; },
         [](std::vector<Var>& v) { return elementwise_mul(v[0], v[1]); }},
        {"concat_rows", [](Rng& r) { return std::vector{random_matrix(r, 2, 2), random_matrix(r, 2, 3)}; },
         [](std::vector<Var>& v) { return concat_rows(v); }},
        {"stack_rows", [](Rng& r) { return std::vector{random_matrix(r, 2, 3), random_matrix(r, 1, 3)}; },
         [](std::vector<Var>& v) { return stack_rows(v); }},
        {"leaky_relu", [](Rng& r) { return std::vector{random_off_zero(r, 3, 3)}; },
         [](std::vector<Var>& v) { return leaky_relu(v[0], 0.2); }},
        {"sigmoid", [](Rng& r) { return std::vector{random_matrix(r, 3, 3, -4, 4)}; },
         [](std::vector<Var>& v) { return sigmoid(v[0]); }},
        {"exp", [](Rng& r) { return std::vector{random_matrix(r, 2, 3)}; },
         [](std::vector<Var>& v) { return exp(v[0]); }},
        {"log", [](Rng& r) { return std::vector{random_matrix(r, 2, 3, 0.2, 3.0)}; },
         [](std::vector<Var>& v) { return log(v[0]); }},
        {"clamp", [](Rng& r) { return std::vector{random_matrix(r, 2, 3, 0.05, 0.95)}; },
         [](std::vector<Var>& v) { return clamp(v[0], 0.0, 1.0); }},
        {"masked_softmax", [](Rng& r) { return std::vector{random_matrix(r, 6, 1, -3, 3)}; },
         [](std::vector<Var>& v) {
             static const std::size_t off[] = {0, 1, 4, 6};
             return masked_softmax(v[0], off);
         }},
        {"gather_rows", [](Rng& r) { return std::vector{random_matrix(r, 4, 2)}; },
         [](std::vector<Var>& v) {
             static const std::size_t idx[] = {3, 0, 3, 1};
             return gather_rows(v[0], idx);
         }},
        {"segment_sum", [](Rng& r) { return std::vector{random_matrix(r, 5, 2)}; },
         [](std::vector<Var>& v) {
             static const std::size_t seg[] = {0, 2, 2, 1, 0};
             return segment_sum(v[0], seg, 4);
         }},
        {"sum_cols", [](Rng& r) { return std::vector{random_matrix(r, 3, 4)}; },
         [](std::vector<Var>& v) { return sum_cols(v[0]); }},
        {"mean", [](Rng& r) { return std::vector{random_matrix(r, 3, 4)}; },
         [](std::vector<Var>& v) { return mean(v[0]); }},
        {"basis_combine",
         [](Rng& r) { return std::vector{random_matrix(r, 3, 3), random_matrix(r, 3, 3), random_matrix(r, 4, 2)}; },
         [](std::vector<Var>& v) {
             Var bases[] = {v[0], v[1]};
             return basis_combine(bases, v[2], 2);
         }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            auto inputs = c.inputs(rng);
            Tape probe;
            std::vector<Var> pv;
            for (const auto& m : inputs) pv.push_back(probe.constant(m));
            const auto shape = c.op(pv).value();
            const Matrix w = random_matrix(rng, shape.rows, shape.cols);
            worst = std::max(worst, gradient_error(inputs, [&](std::vector<Var>& v) { return weigh(c.op(v), w); }));
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("backward is deterministic and idempotent") {
    Rng rng(9);
    const Matrix a = random_matrix(rng, 5, 4), b = random_matrix(rng, 4, 3);
    Tape tape;
    auto va = tape.leaf(a), vb = tape.leaf(b);
    auto root = sum(sigmoid(leaky_relu(matmul(va, vb), 0.2)));
    tape.backward(root);
    const Matrix g1 = va.grad();
    tape.backward(root);
    CHECK(va.grad() == g1);
}

TEST_CASE("constants receive no gradient buffer writes") {
    Tape tape;
    auto c = tape.constant(Matrix::row({1, 2}));
    auto x = tape.leaf(Matrix::row({3, 4}));
    tape.backward(sum(elementwise_mul(c, x)));
    CHECK(x.grad() == Matrix::row({1, 2}));
    CHECK_FALSE(tape.requires_grad(c.id()));
}
