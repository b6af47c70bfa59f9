#include "hfgpi/pghl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hfgpi/errors.hpp"

namespace hfgpi::pghl {

std::vector<double> Incidence::node_degrees() const {
    std::vector<double> d(h.rows(), 0.0);
    for (std::size_t j = 0; j < h.rows(); ++j)
        for (std::size_t i = 0; i < h.cols(); ++i) d[j] += h(j, i);
    return d;
}

std::vector<double> Incidence::edge_degrees() const {
    std::vector<double> d(h.cols(), 0.0);
    for (std::size_t j = 0; j < h.rows(); ++j)
        for (std::size_t i = 0; i < h.cols(); ++i) d[i] += h(j, i);
    return d;
}

std::vector<std::size_t> Incidence::members(std::size_t protein) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < h.rows(); ++j)
        if (h(j, protein) == 1.0) out.push_back(j);
    return out;
}

Matrix protein_patch_similarity(const Matrix& patches, const Matrix& regulated_proteins) {
    if (patches.cols() != regulated_proteins.cols())
        throw DimensionError("protein_patch_similarity: feature widths differ: " +
                             shape_str(patches) + " vs " + shape_str(regulated_proteins));
    std::size_t m = patches.rows(), n_p = regulated_proteins.rows();
    std::vector<double> pn(m), qn(n_p);
    for (std::size_t j = 0; j < m; ++j) {
        pn[j] = row_norm(patches, j);
        if (pn[j] == 0.0)
            throw InputError("protein_patch_similarity: zero-norm patch row " + std::to_string(j));
    }
    for (std::size_t i = 0; i < n_p; ++i) {
        qn[i] = row_norm(regulated_proteins, i);
        if (qn[i] == 0.0)
            throw InputError("protein_patch_similarity: zero-norm protein row " +
                             std::to_string(i));
    }
    Matrix s(m, n_p);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n_p; ++i) {
            double dot = 0.0;
            for (std::size_t c = 0; c < patches.cols(); ++c)
                dot += patches(j, c) * regulated_proteins(i, c);
            s(j, i) = dot / (pn[j] * qn[i]);
        }
    return s;
}

Incidence build_incidence(const Matrix& similarity, std::size_t k) {
    if (k < 1) throw ConfigError("build_incidence: k must be >= 1");
    std::size_t m = similarity.rows(), n_p = similarity.cols();
    std::size_t take = std::min(k, m);
    Incidence inc;
    inc.k = k;
    inc.h = Matrix(m, n_p);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < n_p; ++i) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (similarity(a, i) != similarity(b, i)) return similarity(a, i) > similarity(b, i);
            return a < b;
        });
        for (std::size_t r = 0; r < take; ++r) inc.h(order[r], i) = 1.0;
    }
    return inc;
}

ad::Var hypergraph_conv(ad::Tape& tape, ad::Var patches, const Incidence& inc, ad::Var edge_weights,
                        ad::Var w_p) {
    const Matrix& y = tape.value(patches);
    std::size_t m = inc.h.rows(), n_p = inc.h.cols();
    if (y.rows() != m)
        throw DimensionError("hypergraph_conv: patches " + shape_str(y) + " vs incidence " +
                             shape_str(inc.h));
    const Matrix& we = tape.value(edge_weights);
    if (we.rows() != 1 || we.cols() != n_p)
        throw DimensionError("hypergraph_conv: edge weights must be 1x" + std::to_string(n_p) +
                             ", got " + shape_str(we));
    std::vector<double> dv = inc.node_degrees();
    std::vector<double> de = inc.edge_degrees();
    // pseudo-inverse degrees: zero-degree patches stay zero
    Matrix left(m, n_p);  // D_v^{-1/2} H
    Matrix right(n_p, m); // D_e^{-1} H^T D_v^{-1/2}
    for (std::size_t j = 0; j < m; ++j) {
        double dj = dv[j] > 0.0 ? 1.0 / std::sqrt(dv[j]) : 0.0;
        for (std::size_t i = 0; i < n_p; ++i) {
            left(j, i) = dj * inc.h(j, i);
            right(i, j) = (de[i] > 0.0 ? 1.0 / de[i] : 0.0) * inc.h(j, i) * dj;
        }
    }
    ad::Var propagated = tape.matmul(tape.constant(right), tape.matmul(patches, w_p)); // N_p x d
    ad::Var weighted = tape.matmul(tape.mul_colwise(tape.constant(left), edge_weights),
                                   propagated); // M x d
    return tape.relu(weighted);
}

ad::Var aggregate_hyperedges(ad::Tape& tape, const Incidence& inc, ad::Var z) {
    const Matrix& zv = tape.value(z);
    if (zv.rows() != inc.h.rows())
        throw DimensionError("aggregate_hyperedges: Z " + shape_str(zv) + " vs incidence " +
                             shape_str(inc.h));
    std::vector<double> de = inc.edge_degrees();
    std::size_t n_p = inc.h.cols();
    Matrix pool(n_p, inc.h.rows()); // D_e^{-1} H^T
    for (std::size_t i = 0; i < n_p; ++i) {
        if (de[i] < 1.0)
            throw InputError("aggregate_hyperedges: hyperedge " + std::to_string(i) +
                             " has degree 0");
        for (std::size_t j = 0; j < inc.h.rows(); ++j) pool(i, j) = inc.h(j, i) / de[i];
    }
    return tape.matmul(tape.constant(pool), z);
}

ad::Var fuse(ad::Tape& tape, ad::Var hyperedge_features, ad::Var regulated_proteins) {
    if (!tape.value(hyperedge_features).same_shape(tape.value(regulated_proteins)))
        throw DimensionError("fuse: " + shape_str(tape.value(hyperedge_features)) + " + " +
                             shape_str(tape.value(regulated_proteins)));
    return tape.add(hyperedge_features, regulated_proteins);
}

} // namespace hfgpi::pghl
