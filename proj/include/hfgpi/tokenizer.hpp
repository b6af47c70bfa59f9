#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hfgpi/matrix.hpp"

namespace hfgpi::tok {

enum class Modality { Gene, Protein };

// Fixed per-molecule identity embeddings, shared across all patients.
struct IdentityTable {
    std::vector<std::string> names;
    Matrix embeddings; // N x d_identity

    std::size_t count() const { return names.size(); }
    std::size_t dim() const { return embeddings.cols(); }
    // Checks unique names, row count, finiteness, and nonzero row norms.
    void validate(const std::string& what) const;
};

// One patient's normalized expression, aligned to an IdentityTable's order.
struct ExpressionProfile {
    std::vector<std::string> names;
    std::vector<double> values;
};

struct MolecularTokens {
    Matrix tokens; // N x d_identity
    Modality modality = Modality::Gene;
};

// tokens[i,:] = values[i] * embeddings[i,:]; names must match in order.
MolecularTokens tokenize(const IdentityTable& table, const ExpressionProfile& profile,
                         Modality modality);

// Cohort-level per-feature statistics for z-scoring (population sigma).
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Column-wise stats of a samples x features matrix.
FeatureStats feature_stats(const Matrix& values);

// log2(x+1) per entry; gene counts must be >= 0.
Matrix log2_plus_one(const Matrix& raw);

// Per feature: (x - mu) / sigma, sigma = 0 features map to 0.
Matrix zscore(const Matrix& values, const FeatureStats& stats);

// Gene path: log2(x+1) then z-score against cohort stats computed on the
// post-log matrix. Proteomic values skip the log and are z-scored only
// (optionally passed through untouched).
std::vector<double> normalize_expression(const std::vector<double>& raw,
                                         const FeatureStats& post_log_stats, bool log_transform);

// Indices of the n largest-variance features (population variance), descending
// variance, ties broken by lower original index.
std::vector<std::size_t> select_hvg(const Matrix& expression, std::size_t n_genes);

} // namespace hfgpi::tok
