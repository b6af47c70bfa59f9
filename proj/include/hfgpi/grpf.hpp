#pragma once

#include "hfgpi/autodiff.hpp"
#include "hfgpi/graph.hpp"
#include "hfgpi/matrix.hpp"

namespace hfgpi::grpf {

// Projection handles for the directional protein->gene cross-attention.
struct GrpfVars {
    ad::Var w_q; // d x d
    ad::Var w_k; // d_g x d
    ad::Var w_v; // d_g x d
};

struct CrossAttentionOut {
    ad::Var attention; // T, N_p x N_g, row-stochastic
    ad::Var context;   // T V, N_p x d
};

// Q = X_p W_Q, K = X_g W_K, V = X_g W_V, T = row_softmax(Q K^T / sqrt(d)).
// Gene inputs of width d_g are projected to the shared width d before the
// sqrt(d) scaling is applied.
CrossAttentionOut cross_attention(ad::Tape& tape, ad::Var x_p, ad::Var x_g, const GrpfVars& p);

// (1 / (N_g N_p)) * ||C_g - T^T C_p T||_F^2
ad::Var structure_loss(ad::Tape& tape, ad::Var attention, const graph::CostMatrix& c_g,
                       const graph::CostMatrix& c_p);

// X_p + context, preserving the original protein information.
ad::Var regulate(ad::Tape& tape, ad::Var x_p, ad::Var context);

} // namespace hfgpi::grpf
