#include "hfgpi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hfgpi/errors.hpp"
#include "hfgpi/rng.hpp"

namespace hfgpi::eval {

double risk_score(const surv::HazardCurve& curve) {
    double area = 0.0;
    for (double s : curve.survival()) area += s;
    return -area;
}

double concordance_index(const std::vector<double>& risks, const std::vector<double>& times,
                         const std::vector<bool>& censored) {
    std::size_t n = risks.size();
    if (times.size() != n || censored.size() != n)
        throw DimensionError("concordance_index: input length mismatch");
    double credit = 0.0;
    std::size_t comparable = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            // earlier uncensored event vs later (or equal-censoring-free) time
            if (times[i] < times[j] && !censored[i]) {
                ++comparable;
                if (risks[i] > risks[j]) credit += 1.0;
                else if (risks[i] == risks[j]) credit += 0.5;
            } else if (i < j && times[i] == times[j] && !censored[i] && !censored[j]) {
                // equal-time pair, both events: no correct ordering exists
                ++comparable;
                credit += 0.5;
            }
        }
    if (comparable == 0)
        throw NumericError("concordance_index undefined: zero comparable pairs");
    return credit / static_cast<double>(comparable);
}

KmCurve kaplan_meier(const std::vector<double>& times, const std::vector<bool>& censored) {
    std::size_t n = times.size();
    if (n == 0) throw InputError("kaplan_meier: empty cohort");
    if (censored.size() != n) throw DimensionError("kaplan_meier: length mismatch");
    // events and risk-set sizes per distinct event time
    std::map<double, double> deaths;
    for (std::size_t i = 0; i < n; ++i)
        if (!censored[i]) deaths[times[i]] += 1.0;
    KmCurve curve;
    double s = 1.0;
    for (const auto& [t, d] : deaths) {
        double at_risk = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (times[i] >= t) at_risk += 1.0;
        s *= 1.0 - d / at_risk;
        curve.times.push_back(t);
        curve.survival.push_back(s);
        curve.at_risk.push_back(at_risk);
    }
    return curve;
}

LogRankResult log_rank(const std::vector<double>& times_a, const std::vector<bool>& censored_a,
                       const std::vector<double>& times_b, const std::vector<bool>& censored_b) {
    if (times_a.empty() || times_b.empty())
        throw InputError("log_rank: both groups must be nonempty");
    if (times_a.size() != censored_a.size() || times_b.size() != censored_b.size())
        throw DimensionError("log_rank: length mismatch");
    std::map<double, std::pair<double, double>> deaths; // time -> (d_a, d_b)
    for (std::size_t i = 0; i < times_a.size(); ++i)
        if (!censored_a[i]) deaths[times_a[i]].first += 1.0;
    for (std::size_t i = 0; i < times_b.size(); ++i)
        if (!censored_b[i]) deaths[times_b[i]].second += 1.0;

    LogRankResult res;
    double variance = 0.0;
    for (const auto& [t, d_ab] : deaths) {
        double n_a = 0.0, n_b = 0.0;
        for (double ti : times_a)
            if (ti >= t) n_a += 1.0;
        for (double ti : times_b)
            if (ti >= t) n_b += 1.0;
        double n_total = n_a + n_b;
        double d = d_ab.first + d_ab.second;
        res.observed_a += d_ab.first;
        res.observed_b += d_ab.second;
        res.expected_a += d * n_a / n_total;
        res.expected_b += d * n_b / n_total;
        if (n_total > 1.0)
            variance += d * (n_a / n_total) * (n_b / n_total) * (n_total - d) / (n_total - 1.0);
    }
    if (variance <= 0.0) {
        res.chi_square = 0.0;
        res.p_value = 1.0;
        return res;
    }
    double diff = res.observed_a - res.expected_a;
    res.chi_square = diff * diff / variance;
    res.p_value = chi_square_sf(res.chi_square, 1.0);
    return res;
}

MedianSplit stratify_median(const std::vector<double>& risks) {
    if (risks.size() < 2) throw InputError("stratify_median: need >= 2 patients");
    std::vector<double> sorted = risks;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    MedianSplit split;
    for (std::size_t i = 0; i < n; ++i)
        (risks[i] > median ? split.high : split.low).push_back(i);
    return split;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed) {
    if (folds < 2) throw ConfigError("make_folds: need >= 2 folds");
    if (n < folds) throw ConfigError("make_folds: cohort smaller than fold count");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = seeded_stream(seed, "folds");
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t base = n / folds, extra = n % folds, pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t sz = base + (f < extra ? 1 : 0);
        out[f].assign(idx.begin() + pos, idx.begin() + pos + sz);
        pos += sz;
    }
    return out;
}

CrossValResult cross_validate(
    std::size_t n, std::size_t folds, std::uint64_t seed,
    const std::function<double(const std::vector<std::size_t>&, const std::vector<std::size_t>&)>&
        fit_and_score) {
    auto fold_sets = make_folds(n, folds, seed);
    CrossValResult res;
    res.fold_cindex.assign(folds, std::nan(""));
    res.fold_valid.assign(folds, false);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train;
        for (std::size_t g = 0; g < folds; ++g)
            if (g != f) train.insert(train.end(), fold_sets[g].begin(), fold_sets[g].end());
        std::sort(train.begin(), train.end());
        std::vector<std::size_t> test = fold_sets[f];
        std::sort(test.begin(), test.end());
        try {
            res.fold_cindex[f] = fit_and_score(train, test);
            res.fold_valid[f] = true;
        } catch (const NumericError&) {
            // fold with zero comparable pairs: excluded with a warning upstream
        }
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f)
        if (res.fold_valid[f]) {
            sum += res.fold_cindex[f];
            ++res.valid_folds;
        }
    if (res.valid_folds == 0) throw NumericError("cross_validate: every fold was invalid");
    res.mean = sum / static_cast<double>(res.valid_folds);
    double var = 0.0;
    for (std::size_t f = 0; f < folds; ++f)
        if (res.fold_valid[f]) {
            double c = res.fold_cindex[f] - res.mean;
            var += c * c;
        }
    res.stddev = std::sqrt(var / static_cast<double>(res.valid_folds));
    return res;
}

namespace {

// Regularized lower incomplete gamma by series (x < a+1).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by Lentz continued fraction (x >= a+1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double chi_square_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    double a = 0.5 * dof, z = 0.5 * x;
    if (z < a + 1.0) return 1.0 - gamma_p_series(a, z);
    return gamma_q_cf(a, z);
}

} // namespace hfgpi::eval
