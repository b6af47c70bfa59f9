#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/errors.hpp"
#include "hfgpi/gradcheck.hpp"
#include "hfgpi/rng.hpp"

using namespace hfgpi;
using ad::Tape;
using ad::Var;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                     double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

// Independent triple-loop product, used as the oracle for tape matmul.
Matrix oracle_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

// Runs an FD check for a scalar graph over a single parameter matrix.
FdReport check_unary(const Matrix& x0,
                     const std::function<Var(Tape&, Var)>& build, double tol = 1e-6) {
    auto value_of = [&](const std::vector<Matrix>& p) {
        Tape t;
        Var x = t.leaf(p[0]);
        return t.value(build(t, x))(0, 0);
    };
    auto grad_of = [&](const std::vector<Matrix>& p) {
        Tape t;
        Var x = t.leaf(p[0]);
        Var loss = build(t, x);
        t.backward(loss);
        return std::vector<Matrix>{t.grad(x)};
    };
    return finite_difference_check({"x"}, {x0}, value_of, grad_of, tol);
}

} // namespace

TEST_CASE("matmul values") {
    Matrix b = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    Tape t;
    SUBCASE("identity") {
        Var r = t.matmul(t.leaf(Matrix::identity(2)), t.leaf(b));
        CHECK(t.value(r) == b);
    }
    SUBCASE("zero") {
        Var r = t.matmul(t.leaf(Matrix(2, 2)), t.leaf(b));
        CHECK(t.value(r) == Matrix(2, 2));
    }
    SUBCASE("hand case") {
        Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
        Matrix c = Matrix::from_rows({{5.0}, {6.0}});
        Var r = t.matmul(t.leaf(a), t.leaf(c));
        CHECK(t.value(r)(0, 0) == doctest::Approx(17.0).epsilon(1e-14));
        CHECK(t.value(r)(1, 0) == doctest::Approx(39.0).epsilon(1e-14));
        CHECK(t.value(r) == oracle_matmul(a, c));
    }
    SUBCASE("shape mismatch names both shapes") {
        Var a = t.leaf(Matrix(2, 3));
        Var c = t.leaf(Matrix(2, 2));
        CHECK_THROWS_WITH_AS(t.matmul(a, c), "matmul: 2x3 x 2x2", DimensionError);
    }
}

TEST_CASE("matmul against oracle on random instances") {
    auto rng = seeded_stream(11, "matmul-oracle");
    for (int it = 0; it < 50; ++it) {
        std::uniform_int_distribution<std::size_t> dim(1, 6);
        std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
        Matrix a = random_matrix(rng, m, k), b = random_matrix(rng, k, n);
        Tape t;
        Matrix got = t.value(t.matmul(t.leaf(a), t.leaf(b)));
        Matrix want = oracle_matmul(a, b);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-13));
    }
}

TEST_CASE("row_softmax values and invariants") {
    Tape t;
    SUBCASE("constant row is uniform") {
        Var s = t.row_softmax(t.leaf(Matrix::from_rows({{3.0, 3.0, 3.0, 3.0}})));
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(t.value(s)(0, j) == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("shift invariance") {
        Var a = t.row_softmax(t.leaf(Matrix::from_rows({{1.7, 1.7 + 0.9}})));
        Var b = t.row_softmax(t.leaf(Matrix::from_rows({{0.0, 0.9}})));
        CHECK(t.value(a)(0, 0) == doctest::Approx(t.value(b)(0, 0)).epsilon(1e-14));
        CHECK(t.value(a)(0, 1) == doctest::Approx(t.value(b)(0, 1)).epsilon(1e-14));
    }
    SUBCASE("[0, ln 3] -> [0.25, 0.75]") {
        Var s = t.row_softmax(t.leaf(Matrix::from_rows({{0.0, std::log(3.0)}})));
        CHECK(t.value(s)(0, 0) == doctest::Approx(0.25).epsilon(1e-13));
        CHECK(t.value(s)(0, 1) == doctest::Approx(0.75).epsilon(1e-13));
    }
    SUBCASE("rows sum to 1 on random input") {
        auto rng = seeded_stream(5, "softmax-rows");
        for (int it = 0; it < 50; ++it) {
            Matrix x = random_matrix(rng, 4, 7, -8.0, 8.0);
            Var s = t.row_softmax(t.leaf(x));
            for (std::size_t i = 0; i < 4; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < 7; ++j) {
                    double v = t.value(s)(i, j);
                    sum += v;
                    CHECK(v > 0.0);
                    CHECK(v < 1.0);
                }
                CHECK(std::abs(sum - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("reverse accumulation basics") {
    SUBCASE("loss = sum(x*x), x=[3] -> grad 6") {
        Tape t;
        Var x = t.leaf(Matrix::from_rows({{3.0}}));
        Var loss = t.sum(t.hadamard(x, x));
        t.backward(loss);
        CHECK(t.grad(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
    }
    SUBCASE("unreached parameter gets zero gradient") {
        Tape t;
        Var x = t.leaf(Matrix::from_rows({{2.0}}));
        Var unused = t.leaf(Matrix::from_rows({{5.0, 7.0}}));
        Var loss = t.sum(t.hadamard(x, x));
        t.backward(loss);
        CHECK(t.grad(unused)(0, 0) == 0.0);
        CHECK(t.grad(unused)(0, 1) == 0.0);
    }
    SUBCASE("non-scalar loss rejected") {
        Tape t;
        Var x = t.leaf(Matrix(2, 2, 1.0));
        CHECK_THROWS_AS(t.backward(x), DimensionError);
    }
    SUBCASE("backward twice is bitwise identical") {
        auto rng = seeded_stream(9, "det");
        Tape t;
        Var a = t.leaf(random_matrix(rng, 3, 4));
        Var b = t.leaf(random_matrix(rng, 4, 2));
        Var loss = t.sum(t.relu(t.matmul(a, b)));
        t.backward(loss);
        Matrix ga = t.grad(a), gb = t.grad(b);
        t.backward(loss);
        CHECK(t.grad(a) == ga);
        CHECK(t.grad(b) == gb);
    }
}

TEST_CASE("every primitive matches central finite differences") {
    auto rng = seeded_stream(2024, "primitive-fd");
    Matrix x = random_matrix(rng, 3, 4, 0.2, 1.5); // positive, away from relu/log kinks
    Matrix y = random_matrix(rng, 3, 4, 0.2, 1.5);
    Matrix w = random_matrix(rng, 4, 2, -1.0, 1.0);

    auto check2 = [&](const std::string& tag, const Matrix& a0, const Matrix& b0,
                      const std::function<Var(Tape&, Var, Var)>& build) {
        auto value_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), b = t.leaf(p[1]);
            return t.value(build(t, a, b))(0, 0);
        };
        auto grad_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), b = t.leaf(p[1]);
            Var loss = build(t, a, b);
            t.backward(loss);
            return std::vector<Matrix>{t.grad(a), t.grad(b)};
        };
        FdReport r = finite_difference_check({tag + ".a", tag + ".b"}, {a0, b0}, value_of,
                                             grad_of, 1e-6);
        INFO(format_report(r));
        CHECK(r.all_pass);
    };

    // nonlinear sink so upstream grads are non-trivial
    auto sink = [](Tape& t, Var v) { return t.sum(t.tanh(v)); };

    check2("matmul", x, w, [&](Tape& t, Var a, Var b) { return sink(t, t.matmul(a, b)); });
    check2("hadamard", x, y, [&](Tape& t, Var a, Var b) { return sink(t, t.hadamard(a, b)); });
    check2("add", x, y, [&](Tape& t, Var a, Var b) { return sink(t, t.add(a, b)); });
    check2("sub", x, y, [&](Tape& t, Var a, Var b) { return sink(t, t.sub(a, b)); });

    Matrix rv = random_matrix(rng, 1, 4);
    check2("add_rowvec", x, rv,
           [&](Tape& t, Var a, Var b) { return sink(t, t.add_rowvec(a, b)); });
    check2("mul_colwise", x, rv,
           [&](Tape& t, Var a, Var b) { return sink(t, t.mul_colwise(a, b)); });

    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.relu(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.sigmoid(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.tanh(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.log(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.exp(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.row_softmax(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.row_l2_normalize(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return sink(t, t.transpose(a)); }).all_pass);
    CHECK(check_unary(x, [&](Tape& t, Var a) { return t.mean(t.hadamard(a, a)); }).all_pass);
    // Frobenius norm squared via sum of squares
    CHECK(check_unary(x, [&](Tape& t, Var a) { return t.sum(t.hadamard(a, a)); }).all_pass);
    // cosine similarity of normalized rows
    CHECK(check_unary(x, [&](Tape& t, Var a) {
              Var n = t.row_l2_normalize(a);
              return sink(t, t.matmul(n, t.transpose(n)));
          }).all_pass);

    // layer norm with learnable scale/shift
    {
        Matrix gamma = random_matrix(rng, 1, 4, 0.5, 1.5);
        Matrix beta = random_matrix(rng, 1, 4, -0.3, 0.3);
        auto value_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), g = t.leaf(p[1]), b = t.leaf(p[2]);
            return t.value(t.sum(t.tanh(t.layer_norm_rows(a, g, b))))(0, 0);
        };
        auto grad_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), g = t.leaf(p[1]), b = t.leaf(p[2]);
            Var loss = t.sum(t.tanh(t.layer_norm_rows(a, g, b)));
            t.backward(loss);
            return std::vector<Matrix>{t.grad(a), t.grad(g), t.grad(b)};
        };
        FdReport r = finite_difference_check({"ln.x", "ln.gamma", "ln.beta"}, {x, gamma, beta},
                                             value_of, grad_of, 1e-6);
        INFO(format_report(r));
        CHECK(r.all_pass);
    }

    // hconcat
    {
        auto value_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), b = t.leaf(p[1]);
            return t.value(t.sum(t.tanh(t.hconcat({a, b}))))(0, 0);
        };
        auto grad_of = [&](const std::vector<Matrix>& p) {
            Tape t;
            Var a = t.leaf(p[0]), b = t.leaf(p[1]);
            Var loss = t.sum(t.tanh(t.hconcat({a, b})));
            t.backward(loss);
            return std::vector<Matrix>{t.grad(a), t.grad(b)};
        };
        FdReport r = finite_difference_check({"hc.a", "hc.b"}, {x, y}, value_of, grad_of, 1e-6);
        CHECK(r.all_pass);
    }

    // discrete NLL, hazards away from the clamp
    {
        Matrix logits = random_matrix(rng, 1, 4, -1.5, 1.5);
        for (bool censored : {false, true}) {
            auto build = [&](Tape& t, Var a) {
                return t.nll_discrete(t.sigmoid(a), 2, censored);
            };
            FdReport r = check_unary(logits, build);
            INFO(format_report(r));
            CHECK(r.all_pass);
        }
    }
}

TEST_CASE("matmul chain matches finite differences") {
    auto rng = seeded_stream(77, "chain");
    Matrix a = random_matrix(rng, 2, 3), b = random_matrix(rng, 3, 3), c = random_matrix(rng, 3, 2);
    auto value_of = [&](const std::vector<Matrix>& p) {
        Tape t;
        Var loss = t.sum(t.matmul(t.matmul(t.leaf(p[0]), t.leaf(p[1])), t.leaf(p[2])));
        return t.value(loss)(0, 0);
    };
    auto grad_of = [&](const std::vector<Matrix>& p) {
        Tape t;
        Var va = t.leaf(p[0]), vb = t.leaf(p[1]), vc = t.leaf(p[2]);
        Var loss = t.sum(t.matmul(t.matmul(va, vb), vc));
        t.backward(loss);
        return std::vector<Matrix>{t.grad(va), t.grad(vb), t.grad(vc)};
    };
    FdReport r = finite_difference_check({"a", "b", "c"}, {a, b, c}, value_of, grad_of, 1e-6);
    INFO(format_report(r));
    CHECK(r.all_pass);
}

TEST_CASE("finite_difference_check is exact for linear f") {
    Matrix x = Matrix::from_rows({{0.3, -0.7, 1.1}});
    auto value_of = [](const std::vector<Matrix>& p) {
        return 2.0 * p[0](0, 0) - 3.0 * p[0](0, 1) + 0.5 * p[0](0, 2);
    };
    auto grad_of = [](const std::vector<Matrix>&) {
        return std::vector<Matrix>{Matrix::from_rows({{2.0, -3.0, 0.5}})};
    };
    FdReport r = finite_difference_check({"x"}, {x}, value_of, grad_of, 1e-9);
    CHECK(r.all_pass);
    CHECK(r.entries[0].max_err < 1e-9);
}

TEST_CASE("leaf rejects non-finite input") {
    Tape t;
    Matrix bad(1, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(t.leaf(bad), InputError);
}
