#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hfgpi/matrix.hpp"
#include "hfgpi/survival.hpp"
#include "hfgpi/tokenizer.hpp"

namespace hfgpi::synth {

// Generator knobs. The planted signal flows r -> driver genes -> mapped
// proteins -> signature patches, so every fusion stage has recoverable
// ground truth at desk scale.
struct CohortSpec {
    std::size_t n_patients = 200;
    std::size_t n_genes = 60;
    std::size_t n_proteins = 8;
    std::size_t n_mapped = 4; // proteins with planted driver sets (communities)
    std::size_t patches_min = 24;
    std::size_t patches_max = 40;
    std::size_t d_g = 16; // gene identity width
    std::size_t d = 16;   // protein identity width == patch feature width
    std::size_t bins = 4;
    double beta = 1.0;             // signal strength of r in the observables
    double hazard_sharpness = 2.0; // event rate proportional to exp(sharpness * r)
    double censor_target = 0.3;    // fraction right-censored, hit to within 5%
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticCohort {
    tok::IdentityTable genes;
    tok::IdentityTable proteins;
    std::vector<std::string> sample_ids;
    Matrix gene_expression;    // n x n_genes, raw nonnegative counts
    Matrix protein_expression; // n x n_proteins, real-valued abundances
    std::vector<Matrix> patches; // per patient, M_i x d
    std::vector<surv::SurvivalRecord> records; // time_bin left 0; set at training time

    // Hidden ground truth, not exported unless asked.
    std::vector<double> hidden_risk;                  // r per patient
    std::vector<std::vector<std::size_t>> driver_map; // protein -> driver gene indices
    std::vector<std::vector<int>> patch_signature;    // per patient, per patch: protein idx or -1
};

// Deterministic per seed; throws NumericError if the censoring target cannot
// be met within 5% after 10 horizon adjustments.
SyntheticCohort generate(const CohortSpec& spec);

// Concordance of the hidden risk against observed (time, censored): the
// ceiling any model trained on the observables can approach.
double oracle_cindex(const SyntheticCohort& cohort);

} // namespace hfgpi::synth
