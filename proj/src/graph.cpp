#include "hfgpi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hfgpi/errors.hpp"

namespace hfgpi::graph {

SparseAdjacency knn_graph(const Matrix& embeddings, std::size_t k) {
    std::size_t n = embeddings.rows();
    if (k < 1) throw ConfigError("knn_graph: k must be >= 1");
    if (k >= n) throw ConfigError("knn_graph: k=" + std::to_string(k) + " must be < N=" +
                                  std::to_string(n));
    require_finite(embeddings, "knn_graph embeddings");
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = row_norm(embeddings, i);
        if (norms[i] == 0.0)
            throw InputError("knn_graph: zero-norm embedding row " + std::to_string(i));
    }

    SparseAdjacency adj;
    adj.k = k;
    adj.a = Matrix(n, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sim(n);
        for (std::size_t j = 0; j < n; ++j)
            sim[j] = row_dot(embeddings, i, j) / (norms[i] * norms[j]);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (sim[a] != sim[b]) return sim[a] > sim[b];
            return a < b;
        });
        std::size_t picked = 0;
        for (std::size_t j : order) {
            if (j == i) continue; // self excluded
            adj.a(i, j) = 1.0;
            if (++picked == k) break;
        }
    }
    // OR-symmetrize the directed picks
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (adj.a(i, j) == 1.0 || adj.a(j, i) == 1.0) {
                adj.a(i, j) = 1.0;
                adj.a(j, i) = 1.0;
            }
    return adj;
}

CostMatrix cost_matrix(const SparseAdjacency& adj) {
    std::size_t n = adj.size();
    CostMatrix cost;
    cost.c = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost.c(i, j) = 1.0 - adj.a(i, j);
    return cost;
}

Matrix normalize_adjacency(const SparseAdjacency& adj) {
    std::size_t n = adj.size();
    Matrix hat = adj.a;
    for (std::size_t i = 0; i < n; ++i) hat(i, i) += 1.0; // self-loops
    std::vector<double> dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += hat(i, j);
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hat(i, j) *= dinv[i] * dinv[j];
    return hat;
}

ad::Var gcn_forward(ad::Tape& tape, ad::Var x, const Matrix& a_norm, ad::Var w) {
    if (tape.value(x).rows() != a_norm.rows())
        throw DimensionError("gcn_forward: tokens " + shape_str(tape.value(x)) +
                             " vs adjacency " + shape_str(a_norm));
    ad::Var an = tape.constant(a_norm);
    return tape.relu(tape.matmul(tape.matmul(an, x), w));
}

} // namespace hfgpi::graph
