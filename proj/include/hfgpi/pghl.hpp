#pragma once

#include <cstddef>
#include <vector>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/matrix.hpp"

namespace hfgpi::pghl {

// Patch x protein hypergraph membership. Binary; each column sums to
// min(k, M). Rows of unselected patches are all-zero.
struct Incidence {
    Matrix h; // M x N_p
    std::size_t k = 0;

    std::vector<double> node_degrees() const; // length M
    std::vector<double> edge_degrees() const; // length N_p, each min(k, M)
    // Member patch row indices of hyperedge (protein) i, ascending.
    std::vector<std::size_t> members(std::size_t protein) const;
};

// S[j,i] = cosine(patch j, regulated protein i); values in [-1, 1].
// Computed on plain values: the incidence gate is not differentiated.
Matrix protein_patch_similarity(const Matrix& patches, const Matrix& regulated_proteins);

// Per protein column: mark the min(k, M) highest-similarity patches,
// ties broken by lower patch index.
Incidence build_incidence(const Matrix& similarity, std::size_t k);

// Z = ReLU(D_v^{-1/2} H W_e D_e^{-1} H^T D_v^{-1/2} Y W_p) with pseudo-inverse
// degrees (zero-degree patches get zero rows). edge_weights is the learnable
// positive diagonal of W_e as a 1 x N_p row; w_p is d x d.
ad::Var hypergraph_conv(ad::Tape& tape, ad::Var patches, const Incidence& h, ad::Var edge_weights,
                        ad::Var w_p);

// E[i,:] = mean of member-patch rows of Z (H^T Z / deg).
ad::Var aggregate_hyperedges(ad::Tape& tape, const Incidence& h, ad::Var z);

// F = E + X_p_regulated.
ad::Var fuse(ad::Tape& tape, ad::Var hyperedge_features, ad::Var regulated_proteins);

} // namespace hfgpi::pghl
