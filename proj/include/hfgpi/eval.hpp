#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "hfgpi/survival.hpp"

namespace hfgpi::eval {

// Scalar risk, higher = worse prognosis: negative area under the discrete
// survival curve, -sum_t S(t).
double risk_score(const surv::HazardCurve& curve);

// Harrell's C over comparable pairs; 0.5 credit on risk ties. Throws
// NumericError when no pair is comparable.
double concordance_index(const std::vector<double>& risks, const std::vector<double>& times,
                         const std::vector<bool>& censored);

struct KmCurve {
    std::vector<double> times;    // distinct event times, sorted
    std::vector<double> survival; // product-limit values after each event time
    std::vector<double> at_risk;  // risk-set size just before each event time
};

KmCurve kaplan_meier(const std::vector<double>& times, const std::vector<bool>& censored);

struct LogRankResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    double observed_a = 0.0, expected_a = 0.0;
    double observed_b = 0.0, expected_b = 0.0;
};

LogRankResult log_rank(const std::vector<double>& times_a, const std::vector<bool>& censored_a,
                       const std::vector<double>& times_b, const std::vector<bool>& censored_b);

// risk > median -> high, <= median -> low.
struct MedianSplit {
    std::vector<std::size_t> high;
    std::vector<std::size_t> low;
};
MedianSplit stratify_median(const std::vector<double>& risks);

// Seeded shuffle then contiguous split into `folds` index sets.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed);

struct CrossValResult {
    std::vector<double> fold_cindex; // NaN where invalid
    std::vector<bool> fold_valid;
    double mean = 0.0;
    double stddev = 0.0; // population std over valid folds
    std::size_t valid_folds = 0;
};

// Orchestrates k-fold evaluation. fit_and_score(train_idx, test_idx) returns
// the held-out C-index; folds with zero comparable pairs are reported invalid
// by the callback throwing NumericError.
CrossValResult cross_validate(
    std::size_t n, std::size_t folds, std::uint64_t seed,
    const std::function<double(const std::vector<std::size_t>&, const std::vector<std::size_t>&)>&
        fit_and_score);

// Survival function of the chi-square distribution (regularized upper
// incomplete gamma), accurate to ~1e-12 relative.
double chi_square_sf(double x, double dof);

} // namespace hfgpi::eval
