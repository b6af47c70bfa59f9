#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hfgpi/errors.hpp"
#include "hfgpi/eval.hpp"

using namespace hfgpi;
using namespace hfgpi::eval;

namespace {

// exhaustive pair-loop oracle mirroring the comparability rules
double oracle_cindex(const std::vector<double>& risks, const std::vector<double>& times,
                     const std::vector<bool>& cens) {
    double credit = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < risks.size(); ++i)
        for (std::size_t j = 0; j < risks.size(); ++j) {
            if (i == j) continue;
            if (times[i] < times[j] && !cens[i]) {
                ++pairs;
                if (risks[i] > risks[j]) credit += 1.0;
                else if (risks[i] == risks[j]) credit += 0.5;
            } else if (i < j && times[i] == times[j] && !cens[i] && !cens[j]) {
                ++pairs;
                credit += 0.5;
            }
        }
    return credit / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("risk_score is the negative discrete survival area") {
    surv::HazardCurve c{{0.5, 0.5}};
    CHECK(risk_score(c) == doctest::Approx(-0.75).epsilon(1e-12));
    // raising a hazard raises the risk
    surv::HazardCurve hi{{0.6, 0.5}};
    CHECK(risk_score(hi) > risk_score(c));
    // h -> 0 limit: minimum risk -B
    surv::HazardCurve zero{{0.0, 0.0}};
    CHECK(risk_score(zero) == -2.0);
}

TEST_CASE("concordance golden cases") {
    std::vector<double> times{1.0, 2.0, 3.0};
    std::vector<bool> none{false, false, false};
    CHECK(concordance_index({3.0, 2.0, 1.0}, times, none) == 1.0);
    CHECK(concordance_index({1.0, 2.0, 3.0}, times, none) == 0.0);
    CHECK(concordance_index({5.0, 5.0, 5.0}, times, none) == 0.5);
}

TEST_CASE("censoring removes pairs exactly as the pair-loop oracle dictates") {
    std::vector<double> risks{3.0, 2.0, 1.0};
    std::vector<double> times{1.0, 2.0, 3.0};
    std::vector<bool> cens{false, true, false};
    // comparable: (0,1), (0,2), (1,2 is gone: patient 1 censored)... enumerated
    CHECK(concordance_index(risks, times, cens) ==
          doctest::Approx(oracle_cindex(risks, times, cens)).epsilon(1e-15));
    CHECK(concordance_index(risks, times, cens) == 1.0);
}

TEST_CASE("concordance matches the oracle on random instances with ties") {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> risk_u(0, 4), time_u(1, 5), cens_u(0, 3);
    for (int it = 0; it < 200; ++it) {
        std::size_t n = 4 + it % 5;
        std::vector<double> risks, times;
        std::vector<bool> cens;
        for (std::size_t i = 0; i < n; ++i) {
            risks.push_back(risk_u(rng));
            times.push_back(time_u(rng));
            cens.push_back(cens_u(rng) == 0);
        }
        try {
            double got = concordance_index(risks, times, cens);
            CHECK(got == doctest::Approx(oracle_cindex(risks, times, cens)).epsilon(1e-15));
        } catch (const NumericError&) {
            // legitimately no comparable pair in this draw
        }
    }
}

TEST_CASE("concordance of r and -r sum to 1 without risk ties") {
    std::mt19937_64 rng(67);
    std::normal_distribution<double> g;
    std::vector<double> risks, times, neg;
    std::vector<bool> cens;
    for (int i = 0; i < 30; ++i) {
        risks.push_back(g(rng));
        neg.push_back(-risks.back());
        times.push_back(std::abs(g(rng)) + 0.1);
        cens.push_back(i % 3 == 0);
    }
    double c1 = concordance_index(risks, times, cens);
    double c2 = concordance_index(neg, times, cens);
    CHECK(c1 + c2 == doctest::Approx(1.0).epsilon(1e-12));
    // invariance under strictly increasing transforms
    std::vector<double> warped;
    for (double r : risks) warped.push_back(std::exp(0.7 * r) + 3.0);
    CHECK(concordance_index(warped, times, cens) == c1);
}

TEST_CASE("concordance with zero comparable pairs is an undefined-metric error") {
    CHECK_THROWS_AS(concordance_index({1.0, 2.0}, {5.0, 6.0}, {true, true}), NumericError);
}

TEST_CASE("kaplan_meier product-limit golden cases") {
    // four events, no censoring: steps 0.75, 0.5, 0.25, 0
    KmCurve km = kaplan_meier({1.0, 2.0, 3.0, 4.0}, {false, false, false, false});
    REQUIRE(km.times.size() == 4);
    CHECK(km.survival[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(km.survival[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(km.survival[2] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(km.survival[3] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(km.at_risk == std::vector<double>{4.0, 3.0, 2.0, 1.0});

    // all censored: flat 1.0 (no steps at all)
    KmCurve flat = kaplan_meier({1.0, 2.0}, {true, true});
    CHECK(flat.times.empty());

    // censoring reduces at-risk counts without adding a step
    KmCurve c = kaplan_meier({1.0, 2.0, 3.0}, {false, true, false});
    REQUIRE(c.times.size() == 2);
    CHECK(c.at_risk[0] == 3.0);
    CHECK(c.at_risk[1] == 1.0);
    CHECK(c.survival[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(c.survival[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kaplan_meier probabilities are non-increasing in [0,1]") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> t(0.5, 20.0);
    std::vector<double> times;
    std::vector<bool> cens;
    for (int i = 0; i < 40; ++i) {
        times.push_back(t(rng));
        cens.push_back(i % 4 == 0);
    }
    KmCurve km = kaplan_meier(times, cens);
    double prev = 1.0;
    for (double s : km.survival) {
        CHECK(s <= prev + 1e-15);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        prev = s;
    }
}

TEST_CASE("log_rank on identical groups is zero with p = 1") {
    std::vector<double> t{1.0, 2.0, 3.0};
    std::vector<bool> c{false, false, true};
    LogRankResult r = log_rank(t, c, t, c);
    CHECK(r.chi_square == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log_rank hand-computed O/E/Var table") {
    // group A events at 1 and 3, group B at 2 and 4, no censoring:
    // E_A = 1/2 + 1/3 + 1/2 = 4/3, Var = 1/4 + 2/9 + 1/4 = 13/18,
    // chi = (2 - 4/3)^2 / (13/18) = 8/13
    LogRankResult r = log_rank({1.0, 3.0}, {false, false}, {2.0, 4.0}, {false, false});
    CHECK(r.observed_a == 2.0);
    CHECK(std::abs(r.expected_a - 4.0 / 3.0) <= 1e-12);
    CHECK(std::abs(r.chi_square - 8.0 / 13.0) <= 1e-8);
    CHECK(std::abs(r.p_value - 0.43276758066778465) <= 1e-6);
}

TEST_CASE("log_rank statistic is symmetric under label swap") {
    std::vector<double> ta{1.0, 4.0, 6.0}, tb{2.0, 3.0, 9.0};
    std::vector<bool> ca{false, true, false}, cb{false, false, false};
    LogRankResult ab = log_rank(ta, ca, tb, cb);
    LogRankResult ba = log_rank(tb, cb, ta, ca);
    CHECK(ab.chi_square == doctest::Approx(ba.chi_square).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
}

TEST_CASE("log_rank with no events at all reports statistic 0, p = 1") {
    LogRankResult r = log_rank({1.0}, {true}, {2.0}, {true});
    CHECK(r.chi_square == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("chi_square_sf reference values") {
    CHECK(std::abs(chi_square_sf(1.0, 1.0) - 0.31731050786291404) <= 1e-12);
    CHECK(std::abs(chi_square_sf(3.841458820694124, 1.0) - 0.05) <= 1e-10);
    CHECK(std::abs(chi_square_sf(2.5, 2.0) - 0.2865047968601901) <= 1e-12);
    CHECK(chi_square_sf(0.0, 1.0) == 1.0);
    CHECK(chi_square_sf(100.0, 1.0) < 1e-20);
}

TEST_CASE("stratify_median splits on strict median comparison") {
    MedianSplit s = stratify_median({1.0, 2.0, 3.0, 4.0});
    CHECK(s.high == std::vector<std::size_t>{2, 3});
    CHECK(s.low == std::vector<std::size_t>{0, 1});
    MedianSplit all_equal = stratify_median({7.0, 7.0, 7.0});
    CHECK(all_equal.high.empty());
    CHECK(all_equal.low.size() == 3);
}

TEST_CASE("make_folds partitions deterministically") {
    auto f1 = make_folds(25, 5, 42);
    auto f2 = make_folds(25, 5, 42);
    CHECK(f1 == f2);
    std::set<std::size_t> seen;
    for (const auto& fold : f1) {
        CHECK(fold.size() == 5);
        for (std::size_t i : fold) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 25);
    CHECK(make_folds(25, 5, 43) != f1);
    CHECK_THROWS_AS(make_folds(3, 5, 0), ConfigError);
}

TEST_CASE("cross_validate aggregates folds and tolerates invalid ones") {
    std::vector<std::size_t> third = make_folds(10, 5, 9)[2];
    std::sort(third.begin(), third.end());
    CrossValResult r = cross_validate(10, 5, 9, [&](const auto& train, const auto& test) {
        CHECK(train.size() == 8);
        CHECK(test.size() == 2);
        if (test == third) throw NumericError("no comparable pairs");
        return 0.5 + 0.1 * static_cast<double>(test[0] % 3);
    });
    CHECK(r.valid_folds == 4);
    double mean = 0.0;
    for (std::size_t f = 0; f < 5; ++f)
        if (r.fold_valid[f]) mean += r.fold_cindex[f];
    mean /= 4.0;
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-12));
    double var = 0.0;
    for (std::size_t f = 0; f < 5; ++f)
        if (r.fold_valid[f]) var += (r.fold_cindex[f] - mean) * (r.fold_cindex[f] - mean);
    CHECK(r.stddev == doctest::Approx(std::sqrt(var / 4.0)).epsilon(1e-12));
}
