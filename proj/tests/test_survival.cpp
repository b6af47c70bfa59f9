#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/errors.hpp"
#include "hfgpi/survival.hpp"

using namespace hfgpi;
using namespace hfgpi::surv;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

EncoderLayerVars random_layer(ad::Tape& tape, std::mt19937_64& rng, std::size_t d,
                              std::size_t heads) {
    EncoderLayerVars l;
    std::size_t d_h = d / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        l.w_q.push_back(tape.leaf(random_matrix(rng, d, d_h)));
        l.w_k.push_back(tape.leaf(random_matrix(rng, d, d_h)));
        l.w_v.push_back(tape.leaf(random_matrix(rng, d, d_h)));
    }
    l.w_o = tape.leaf(random_matrix(rng, d, d));
    l.ln1_gamma = tape.leaf(Matrix(1, d, 1.0));
    l.ln1_beta = tape.leaf(Matrix(1, d, 0.0));
    l.ffn_w1 = tape.leaf(random_matrix(rng, d, 2 * d));
    l.ffn_b1 = tape.leaf(Matrix(1, 2 * d, 0.0));
    l.ffn_w2 = tape.leaf(random_matrix(rng, 2 * d, d));
    l.ffn_b2 = tape.leaf(Matrix(1, d, 0.0));
    l.ln2_gamma = tape.leaf(Matrix(1, d, 1.0));
    l.ln2_beta = tape.leaf(Matrix(1, d, 0.0));
    return l;
}

Matrix layer_norm_row(const Matrix& x, double eps = 1e-6) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mu += x(i, j);
        mu /= static_cast<double>(x.cols());
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double c = x(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j)
            out(i, j) = (x(i, j) - mu) / std::sqrt(var + eps);
    }
    return out;
}

} // namespace

TEST_CASE("survival curve is the running product of (1 - h)") {
    HazardCurve c{{0.5, 0.5}};
    auto s = c.survival();
    CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s[1] == doctest::Approx(0.25).epsilon(1e-12));
    HazardCurve zero{{0.0, 0.0, 0.0}};
    for (double v : zero.survival()) CHECK(v == 1.0);
}

TEST_CASE("predict_hazards with zero weights gives 0.5 everywhere and needs B >= 2") {
    ad::Tape tape;
    ad::Var h = tape.leaf(Matrix(1, 3, 0.2));
    ad::Var hz = predict_hazards(tape, h, tape.leaf(Matrix(3, 2, 0.0)),
                                 tape.leaf(Matrix(1, 2, 0.0)));
    CHECK(tape.value(hz)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tape.value(hz)(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(
        predict_hazards(tape, h, tape.leaf(Matrix(3, 1, 0.0)), tape.leaf(Matrix(1, 1, 0.0))),
        ConfigError);
}

TEST_CASE("nll golden values match the discrete likelihood") {
    // uncensored, bin 1, hazards [0.5, 0.5]: -(ln 0.5 + ln 0.5) = 2 ln 2
    HazardCurve c{{0.5, 0.5}};
    CHECK(nll_loss_value(c, {10.0, 1, false}) ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    // censored with S(t) = 1 (h -> 0): loss -> 0
    HazardCurve flat{{0.0, 0.0}};
    CHECK(nll_loss_value(flat, {10.0, 1, true}) == doctest::Approx(0.0).epsilon(1e-6));
    // uncensored, bin 0, h(0) -> 1: loss -> 0
    HazardCurve sure{{1.0, 0.5}};
    CHECK(nll_loss_value(sure, {1.0, 0, false}) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("tape nll agrees with the value-level twin") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int it = 0; it < 50; ++it) {
        Matrix h(1, 3);
        for (std::size_t b = 0; b < 3; ++b) h(0, b) = u(rng);
        SurvivalRecord rec{5.0, static_cast<std::size_t>(it % 3), it % 2 == 0};
        ad::Tape tape;
        ad::Var loss = nll_loss(tape, tape.leaf(h), rec);
        HazardCurve c{{h(0, 0), h(0, 1), h(0, 2)}};
        CHECK(tape.value(loss)(0, 0) == doctest::Approx(nll_loss_value(c, rec)).epsilon(1e-12));
        CHECK(tape.value(loss)(0, 0) >= 0.0);
    }
}

TEST_CASE("total_loss composes surv and structure with lambda") {
    ad::Tape tape;
    ad::Var s = tape.leaf(Matrix(1, 1, 1.0));
    ad::Var st = tape.leaf(Matrix(1, 1, 0.5));
    CHECK(tape.value(total_loss(tape, s, st, 0.3))(0, 0) ==
          doctest::Approx(1.15).epsilon(1e-12));
    ad::Var l0 = total_loss(tape, s, st, 0.0);
    CHECK(l0.idx == s.idx); // lambda = 0 short-circuits to the survival term
    CHECK_THROWS_AS(total_loss(tape, s, st, -0.1), ConfigError);
}

TEST_CASE("compute_time_bins puts edges at uncensored quantiles") {
    std::vector<double> times{1.0, 2.0, 3.0, 4.0, 99.0};
    std::vector<bool> cens{false, false, false, false, true};
    auto edges = compute_time_bins(times, cens, 2);
    REQUIRE(edges.size() == 1);
    CHECK(edges[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(bin_of(1.0, edges) == 0);
    CHECK(bin_of(2.0, edges) == 0);
    CHECK(bin_of(3.0, edges) == 1);
    CHECK(bin_of(4.0, edges) == 1);
}

TEST_CASE("compute_time_bins rejects too few distinct events, suggesting fewer bins") {
    std::vector<double> times{1.0, 1.0, 2.0};
    std::vector<bool> cens{false, false, true};
    CHECK_THROWS_WITH_AS(compute_time_bins(times, cens, 4), doctest::Contains("reduce bins"),
                         ConfigError);
    CHECK_THROWS_AS(compute_time_bins(times, cens, 1), ConfigError);
}

TEST_CASE("transformer_encode preserves shape and is permutation-equivariant") {
    std::mt19937_64 rng(41);
    ad::Tape tape;
    Matrix tokens = random_matrix(rng, 4, 6);
    auto layer = random_layer(tape, rng, 6, 2);
    ad::Var out = transformer_encode(tape, tape.leaf(tokens), {layer});
    REQUIRE(tape.value(out).rows() == 4);
    REQUIRE(tape.value(out).cols() == 6);

    // permute rows 0<->2 and re-encode with the same weights
    Matrix permuted = tokens;
    for (std::size_t j = 0; j < 6; ++j) {
        permuted(0, j) = tokens(2, j);
        permuted(2, j) = tokens(0, j);
    }
    ad::Var out_p = transformer_encode(tape, tape.leaf(permuted), {layer});
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(tape.value(out_p)(0, j) == doctest::Approx(tape.value(out)(2, j)).epsilon(1e-9));
        CHECK(tape.value(out_p)(2, j) == doctest::Approx(tape.value(out)(0, j)).epsilon(1e-9));
        CHECK(tape.value(out_p)(1, j) == doctest::Approx(tape.value(out)(1, j)).epsilon(1e-9));
    }
}

TEST_CASE("single-token encoder matches a hand-rolled oracle") {
    std::mt19937_64 rng(43);
    ad::Tape tape;
    Matrix x = random_matrix(rng, 1, 4);
    auto layer = random_layer(tape, rng, 4, 1);
    ad::Var out = transformer_encode(tape, tape.leaf(x), {layer});

    // attention over a single token is the identity: output = V projection
    Matrix n1 = layer_norm_row(x);
    Matrix attn = matmul(n1, tape.value(layer.w_v[0])); // softmax(scalar) == 1
    Matrix mixed = matmul(attn, tape.value(layer.w_o));
    Matrix x1 = add(x, mixed);
    Matrix n2 = layer_norm_row(x1);
    Matrix hidden = matmul(n2, tape.value(layer.ffn_w1));
    for (std::size_t i = 0; i < hidden.size(); ++i)
        hidden.data()[i] = std::max(hidden.data()[i], 0.0);
    Matrix expected = add(x1, matmul(hidden, tape.value(layer.ffn_w2)));
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(tape.value(out)(0, j) == doctest::Approx(expected(0, j)).epsilon(1e-9));
}

TEST_CASE("gated pooling: single token and identical tokens") {
    std::mt19937_64 rng(47);
    ad::Tape tape;
    GatedPoolVars p{tape.leaf(random_matrix(rng, 3, 2)), tape.leaf(random_matrix(rng, 3, 2)),
                    tape.leaf(random_matrix(rng, 2, 1))};
    Matrix one = random_matrix(rng, 1, 3);
    PooledOut out1 = gated_attention_pool(tape, tape.leaf(one), p);
    CHECK(tape.value(out1.weights)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(tape.value(out1.embedding)(0, j) == doctest::Approx(one(0, j)).epsilon(1e-12));

    Matrix same(4, 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) same(i, j) = one(0, j);
    PooledOut out4 = gated_attention_pool(tape, tape.leaf(same), p);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(tape.value(out4.weights)(i, 0) == doctest::Approx(0.25).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(tape.value(out4.embedding)(0, j) == doctest::Approx(one(0, j)).epsilon(1e-9));
}

TEST_CASE("gated pooling weights follow the softmax of the gate logits") {
    std::mt19937_64 rng(53);
    ad::Tape tape;
    Matrix tokens = random_matrix(rng, 2, 3);
    Matrix v = random_matrix(rng, 3, 2), u = random_matrix(rng, 3, 2), w = random_matrix(rng, 2, 1);
    GatedPoolVars p{tape.leaf(v), tape.leaf(u), tape.leaf(w)};
    PooledOut out = gated_attention_pool(tape, tape.leaf(tokens), p);

    // softmax oracle over the explicitly computed logits
    double logits[2];
    for (std::size_t n = 0; n < 2; ++n) {
        double logit = 0.0;
        for (std::size_t a = 0; a < 2; ++a) {
            double tv = 0.0, su = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                tv += tokens(n, j) * v(j, a);
                su += tokens(n, j) * u(j, a);
            }
            logit += std::tanh(tv) * (1.0 / (1.0 + std::exp(-su))) * w(a, 0);
        }
        logits[n] = logit;
    }
    double z = std::exp(logits[0]) + std::exp(logits[1]);
    CHECK(tape.value(out.weights)(0, 0) == doctest::Approx(std::exp(logits[0]) / z).epsilon(1e-9));
    CHECK(tape.value(out.weights)(1, 0) == doctest::Approx(std::exp(logits[1]) / z).epsilon(1e-9));
    double sum = tape.value(out.weights)(0, 0) + tape.value(out.weights)(1, 0);
    CHECK(std::abs(sum - 1.0) <= 1e-9);
}
