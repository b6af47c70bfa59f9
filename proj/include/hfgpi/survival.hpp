#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/matrix.hpp"

namespace hfgpi::surv {

// Per-bin conditional event probabilities and the derived survival curve
// S(t) = prod_{u<=t} (1 - h(u)), with the S(-1) = 1 convention.
struct HazardCurve {
    std::vector<double> hazards; // length B, each in (0,1)

    std::vector<double> survival() const;
};

struct SurvivalRecord {
    double time_months = 0.0;
    std::size_t time_bin = 0;
    bool censored = false; // true means right-censored
};

// One pre-norm transformer encoder layer: multi-head self-attention and a
// two-layer feed-forward block, both residual. No positional encoding; the
// token set is unordered, so the layer is permutation-equivariant.
struct EncoderLayerVars {
    std::vector<ad::Var> w_q, w_k, w_v; // per head, d x d_h
    ad::Var w_o;                        // d x d
    ad::Var ln1_gamma, ln1_beta;        // 1 x d
    ad::Var ffn_w1, ffn_b1;             // d x d_ff, 1 x d_ff
    ad::Var ffn_w2, ffn_b2;             // d_ff x d, 1 x d
    ad::Var ln2_gamma, ln2_beta;        // 1 x d
};

ad::Var transformer_encode(ad::Tape& tape, ad::Var tokens,
                           const std::vector<EncoderLayerVars>& layers);

// Gated attention pooling (tanh/sigmoid gate, softmax over tokens).
struct GatedPoolVars {
    ad::Var v; // d x d_attn
    ad::Var u; // d x d_attn
    ad::Var w; // d_attn x 1
};

struct PooledOut {
    ad::Var embedding; // 1 x d
    ad::Var weights;   // N x 1, sums to 1
};

PooledOut gated_attention_pool(ad::Tape& tape, ad::Var tokens, const GatedPoolVars& p);

// hazards = sigmoid(h W + b), 1 x B.
ad::Var predict_hazards(ad::Tape& tape, ad::Var embedding, ad::Var head_w, ad::Var head_b);

// Discrete-time NLL for one record (clamped to [eps, 1-eps] before logs).
ad::Var nll_loss(ad::Tape& tape, ad::Var hazards, const SurvivalRecord& record,
                 double eps = 1e-7);
// Value-level twin for reports and oracles that do not need gradients.
double nll_loss_value(const HazardCurve& curve, const SurvivalRecord& record, double eps = 1e-7);

// L = L_surv + lambda * L_struct.
ad::Var total_loss(ad::Tape& tape, ad::Var surv, ad::Var structure, double lambda);

// Interior bin edges at quantiles of the uncensored event times, so bins hold
// equal uncensored mass. Returns B-1 edges; a time t falls in the first bin
// whose edge exceeds it, with the rightmost bin open-ended.
std::vector<double> compute_time_bins(const std::vector<double>& times,
                                      const std::vector<bool>& censored, std::size_t bins);

std::size_t bin_of(double time, const std::vector<double>& edges);

} // namespace hfgpi::surv
