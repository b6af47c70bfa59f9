#include "hfgpi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hfgpi/errors.hpp"
#include "hfgpi/eval.hpp"
#include "hfgpi/rng.hpp"

namespace hfgpi::synth {

namespace {

std::string padded(const std::string& prefix, std::size_t i, int width) {
    std::string num = std::to_string(i);
    while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
    return prefix + num;
}

} // namespace

void CohortSpec::validate() const {
    if (n_patients < 2) throw ConfigError("cohort: need >= 2 patients");
    if (n_genes < 1 || n_proteins < 1) throw ConfigError("cohort: need >= 1 gene and protein");
    if (n_mapped > n_proteins) throw ConfigError("cohort: n_mapped exceeds n_proteins");
    if (n_mapped > n_genes) throw ConfigError("cohort: n_mapped exceeds n_genes");
    if (patches_min < 1 || patches_max < patches_min)
        throw ConfigError("cohort: invalid patch count range");
    if (d_g < 1 || d < 1) throw ConfigError("cohort: embedding widths must be >= 1");
    if (beta < 0.0) throw ConfigError("cohort: beta must be >= 0");
    if (censor_target < 0.0 || censor_target >= 1.0)
        throw ConfigError("cohort: censoring fraction must be in [0,1)");
    if (hazard_sharpness < 0.0) throw ConfigError("cohort: hazard sharpness must be >= 0");
}

SyntheticCohort generate(const CohortSpec& spec) {
    spec.validate();
    SyntheticCohort c;
    std::normal_distribution<double> gauss(0.0, 1.0);

    // --- identity tables with block (community) structure ---
    std::size_t n_comm = std::max<std::size_t>(spec.n_mapped, 1);
    auto community_of = [&](std::size_t g) { return g * n_comm / spec.n_genes; };
    {
        auto rng = seeded_stream(spec.seed, "gene-identity");
        Matrix centers(n_comm, spec.d_g);
        for (std::size_t i = 0; i < centers.size(); ++i) centers.data()[i] = gauss(rng);
        c.genes.embeddings = Matrix(spec.n_genes, spec.d_g);
        for (std::size_t g = 0; g < spec.n_genes; ++g) {
            std::size_t comm = community_of(g);
            c.genes.names.push_back(padded("G", g, 3));
            for (std::size_t j = 0; j < spec.d_g; ++j)
                c.genes.embeddings(g, j) = centers(comm, j) + 0.3 * gauss(rng);
        }
        c.genes.validate("gene identity table");
    }
    {
        auto rng = seeded_stream(spec.seed, "protein-identity");
        c.proteins.embeddings = Matrix(spec.n_proteins, spec.d);
        for (std::size_t p = 0; p < spec.n_proteins; ++p) {
            c.proteins.names.push_back(padded("P", p, 2));
            for (std::size_t j = 0; j < spec.d; ++j) c.proteins.embeddings(p, j) = gauss(rng);
        }
        c.proteins.validate("protein identity table");
    }

    // --- planted regulatory map: mapped protein i drives community i ---
    c.driver_map.assign(spec.n_proteins, {});
    for (std::size_t p = 0; p < spec.n_mapped; ++p)
        for (std::size_t g = 0; g < spec.n_genes; ++g)
            if (community_of(g) == p) c.driver_map[p].push_back(g);

    // --- per-gene baselines and risk loadings ---
    std::vector<double> baseline(spec.n_genes), loading(spec.n_genes);
    {
        auto rng = seeded_stream(spec.seed, "gene-shape");
        std::uniform_real_distribution<double> base_u(2.0, 6.0), load_u(0.6, 1.4);
        for (std::size_t g = 0; g < spec.n_genes; ++g) {
            baseline[g] = base_u(rng);
            loading[g] = load_u(rng);
        }
    }

    // --- patient latents and expression ---
    // r is the only survival-relevant factor; per-community latents u_c make
    // the driver/protein correlation structure protein-specific.
    const double comm_strength = 0.8;
    const double gene_noise = 0.25;
    const double protein_attenuation = 0.5;
    const double protein_noise = 1.2;
    c.hidden_risk.resize(spec.n_patients);
    c.gene_expression = Matrix(spec.n_patients, spec.n_genes);
    c.protein_expression = Matrix(spec.n_patients, spec.n_proteins);
    Matrix logval(spec.n_patients, spec.n_genes);
    {
        auto r_rng = seeded_stream(spec.seed, "latent");
        auto u_rng = seeded_stream(spec.seed, "community");
        auto g_rng = seeded_stream(spec.seed, "gene-noise");
        auto p_rng = seeded_stream(spec.seed, "protein-noise");
        for (std::size_t k = 0; k < spec.n_patients; ++k) {
            double r = gauss(r_rng);
            c.hidden_risk[k] = r;
            std::vector<double> u(n_comm);
            for (double& uc : u) uc = gauss(u_rng);
            for (std::size_t g = 0; g < spec.n_genes; ++g) {
                std::size_t comm = community_of(g);
                bool driven = comm < spec.n_mapped;
                double lv = baseline[g] + gene_noise * gauss(g_rng);
                if (driven) lv += spec.beta * loading[g] * r + comm_strength * u[comm];
                lv = std::max(lv, 0.0);
                logval(k, g) = lv;
                c.gene_expression(k, g) = std::exp2(lv) - 1.0;
            }
            for (std::size_t p = 0; p < spec.n_proteins; ++p) {
                double v = protein_noise * gauss(p_rng);
                if (!c.driver_map[p].empty()) {
                    double mean_signal = 0.0;
                    for (std::size_t g : c.driver_map[p]) mean_signal += logval(k, g) - baseline[g];
                    mean_signal /= static_cast<double>(c.driver_map[p].size());
                    v += protein_attenuation * mean_signal;
                }
                c.protein_expression(k, p) = v;
            }
        }
    }

    // --- patches: background noise plus protein-signature carriers ---
    c.patches.reserve(spec.n_patients);
    c.patch_signature.reserve(spec.n_patients);
    {
        auto count_rng = seeded_stream(spec.seed, "patch-count");
        auto patch_rng = seeded_stream(spec.seed, "patch");
        std::uniform_int_distribution<std::size_t> m_dist(spec.patches_min, spec.patches_max);
        for (std::size_t k = 0; k < spec.n_patients; ++k) {
            std::size_t m = m_dist(count_rng);
            Matrix y(m, spec.d);
            std::vector<int> sig(m, -1);
            std::size_t per_protein =
                spec.n_mapped > 0 ? std::max<std::size_t>(1, m / (2 * spec.n_mapped)) : 0;
            std::size_t next = 0;
            for (std::size_t p = 0; p < spec.n_mapped; ++p) {
                double s_norm = row_norm(c.proteins.embeddings, p);
                double scale = 1.0 + 0.4 * std::tanh(0.5 * c.protein_expression(k, p));
                for (std::size_t rep = 0; rep < per_protein && next < m; ++rep, ++next) {
                    sig[next] = static_cast<int>(p);
                    for (std::size_t j = 0; j < spec.d; ++j)
                        y(next, j) = 0.25 * gauss(patch_rng) +
                                     scale * c.proteins.embeddings(p, j) / s_norm;
                }
            }
            for (; next < m; ++next)
                for (std::size_t j = 0; j < spec.d; ++j) y(next, j) = 0.6 * gauss(patch_rng);
            c.patches.push_back(std::move(y));
            c.patch_signature.push_back(std::move(sig));
        }
    }

    // --- survival: exponential event times, uniform censoring horizon ---
    std::vector<double> event_time(spec.n_patients), horizon_frac(spec.n_patients);
    {
        auto e_rng = seeded_stream(spec.seed, "event");
        auto h_rng = seeded_stream(spec.seed, "censor");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double base_rate = 1.0 / 24.0;
        for (std::size_t k = 0; k < spec.n_patients; ++k) {
            double u = unit(e_rng);
            if (u <= 0.0) u = 1e-12;
            double rate = base_rate * std::exp(spec.hazard_sharpness * c.hidden_risk[k]);
            event_time[k] = -std::log(u) / rate;
            horizon_frac[k] = unit(h_rng);
        }
    }
    c.sample_ids.reserve(spec.n_patients);
    for (std::size_t k = 0; k < spec.n_patients; ++k) c.sample_ids.push_back(padded("S", k, 4));
    c.records.resize(spec.n_patients);
    if (spec.censor_target == 0.0) {
        for (std::size_t k = 0; k < spec.n_patients; ++k)
            c.records[k] = {event_time[k], 0, false};
    } else {
        // patient k is censored iff h < event_time[k] / horizon_frac[k], so the
        // achievable fractions are order statistics of those ratios; bisect over
        // them and the fraction error halves per adjustment regardless of scale
        std::vector<double> ratio(spec.n_patients);
        for (std::size_t k = 0; k < spec.n_patients; ++k)
            ratio[k] = event_time[k] / std::max(horizon_frac[k], 1e-12);
        std::sort(ratio.begin(), ratio.end());
        auto fraction = [&](double h) {
            std::size_t censored = 0;
            for (std::size_t k = 0; k < spec.n_patients; ++k)
                if (horizon_frac[k] * h < event_time[k]) ++censored;
            return static_cast<double>(censored) / static_cast<double>(spec.n_patients);
        };
        double h = 0.0;
        bool ok = false;
        std::size_t lo = 0, hi = spec.n_patients - 1;
        for (int attempt = 0; attempt < 10; ++attempt) {
            std::size_t mid = lo + (hi - lo) / 2;
            h = ratio[mid];
            double f = fraction(h);
            if (std::abs(f - spec.censor_target) <= 0.05) {
                ok = true;
                break;
            }
            // fraction decreases as the horizon grows
            if (f > spec.censor_target) {
                if (mid == spec.n_patients - 1) break;
                lo = mid + 1;
            } else {
                if (mid == 0) break;
                hi = mid - 1;
            }
            if (lo > hi) break;
        }
        if (!ok)
            throw NumericError("cohort: censoring target " + std::to_string(spec.censor_target) +
                               " not reachable within 5% after 10 horizon adjustments");
        for (std::size_t k = 0; k < spec.n_patients; ++k) {
            double cap = std::max(horizon_frac[k] * h, 1e-9);
            bool cens = cap < event_time[k];
            c.records[k] = {cens ? cap : event_time[k], 0, cens};
        }
    }
    return c;
}

double oracle_cindex(const SyntheticCohort& cohort) {
    std::vector<double> times;
    std::vector<bool> censored;
    for (const auto& rec : cohort.records) {
        times.push_back(rec.time_months);
        censored.push_back(rec.censored);
    }
    return eval::concordance_index(cohort.hidden_risk, times, censored);
}

} // namespace hfgpi::synth
