#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/config.hpp"
#include "hfgpi/graph.hpp"
#include "hfgpi/io.hpp"
#include "hfgpi/matrix.hpp"
#include "hfgpi/pghl.hpp"
#include "hfgpi/survival.hpp"

namespace hfgpi::model {

// Cohort-level context shared by every forward pass: normalized expression,
// precomputed identity graphs, and binned survival records. Modality drops
// are applied here so the model itself stays oblivious.
struct CohortContext {
    tok::IdentityTable genes; // highly-variable subset, descending variance
    tok::IdentityTable proteins;
    std::vector<std::string> sample_ids;
    Matrix gene_expr;    // n x N_g, log2(x+1) then z-scored
    Matrix protein_expr; // n x N_p, z-scored unless disabled
    std::vector<Matrix> patches;
    std::vector<surv::SurvivalRecord> records; // time_bin filled
    Matrix ag_norm, ap_norm;                   // GCN propagation constants
    graph::CostMatrix cg, cp;
    std::vector<double> bin_edges;

    std::size_t n_patients() const { return sample_ids.size(); }
};

// Bin edges computed from the cohort itself (training) or imposed from a
// checkpoint (evaluation of held-out data).
CohortContext preprocess(const io::Cohort& c, const RunConfig& cfg);
CohortContext preprocess(const io::Cohort& c, const RunConfig& cfg,
                         const std::vector<double>& bin_edges);

// The full pipeline: molecular tokens -> per-modality GCNs -> gene->protein
// cross-attention regulation -> protein-guided patch hypergraph -> fused
// protein tokens -> transformer + gated pooling -> discrete hazards.
class HfgpiModel {
public:
    HfgpiModel(const RunConfig& cfg, std::size_t d_gene_identity, std::size_t d_protein_identity,
               std::size_t n_proteins);

    const RunConfig& config() const { return cfg_; }
    const std::vector<std::string>& param_names() const { return names_; }
    std::vector<Matrix>& params() { return params_; }
    const std::vector<Matrix>& params() const { return params_; }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) from the (seed, "init") stream;
    // layer-norm scales 1, shifts/biases 0, hyperedge log-weights 0.
    void init(std::uint64_t seed);

    struct Forward {
        ad::Var loss, surv_loss, struct_loss;
        ad::Var hazards;      // 1 x B
        ad::Var attention;    // N_p x N_g, row-stochastic
        ad::Var pool_weights; // N_p x 1
        pghl::Incidence incidence;
        std::vector<ad::Var> param_vars; // aligned with params()
    };

    // `frozen` pins the hyperedge incidence from a reference forward pass so
    // finite differences cannot flip the non-differentiable top-k gate.
    Forward forward(ad::Tape& tape, const CohortContext& ctx, std::size_t patient,
                    const std::vector<Matrix>& params,
                    const pghl::Incidence* frozen = nullptr) const;
    Forward forward(ad::Tape& tape, const CohortContext& ctx, std::size_t patient,
                    const pghl::Incidence* frozen = nullptr) const {
        return forward(tape, ctx, patient, params_, frozen);
    }

    surv::HazardCurve predict(const CohortContext& ctx, std::size_t patient) const;

private:
    RunConfig cfg_;
    std::size_t d_g_id_, d_p_id_, n_proteins_;
    std::vector<std::string> names_;
    std::vector<Matrix> params_;

    std::size_t register_param(const std::string& name, std::size_t rows, std::size_t cols);
    std::size_t index_of(const std::string& name) const;
};

} // namespace hfgpi::model
