#pragma once

#include <cstddef>

#include "hfgpi/autodiff.hpp"
#include "hfgpi/matrix.hpp"

namespace hfgpi::graph {

// Binary symmetric kNN adjacency, dense at desk scale. Diagonal is zero.
struct SparseAdjacency {
    Matrix a; // N x N, entries in {0,1}
    std::size_t k = 0;

    std::size_t size() const { return a.rows(); }
};

// C = 1 - A elementwise; unit diagonal since A has none.
struct CostMatrix {
    Matrix c;
};

// Top-k cosine-similarity graph over embedding rows, OR-symmetrized.
// Ties broken by lower index. Throws on zero-norm rows or k >= N.
SparseAdjacency knn_graph(const Matrix& embeddings, std::size_t k);

CostMatrix cost_matrix(const SparseAdjacency& a);

// Symmetric renormalization with self-loops: D^{-1/2} (A + I) D^{-1/2}.
// Kept separate so the propagation rule is testable in isolation.
Matrix normalize_adjacency(const SparseAdjacency& a);

// One GCN layer: ReLU(A_norm X W). a_norm is the precomputed constant from
// normalize_adjacency; x and w live on the tape.
ad::Var gcn_forward(ad::Tape& tape, ad::Var x, const Matrix& a_norm, ad::Var w);

} // namespace hfgpi::graph
