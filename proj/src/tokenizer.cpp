#include "hfgpi/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "hfgpi/errors.hpp"

namespace hfgpi::tok {

void IdentityTable::validate(const std::string& what) const {
    if (names.size() != embeddings.rows())
        throw InputError(what + ": " + std::to_string(names.size()) + " names vs " +
                         std::to_string(embeddings.rows()) + " embedding rows");
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw InputError(what + ": duplicate name '" + n + "'");
    require_finite(embeddings, what + " embeddings");
    for (std::size_t i = 0; i < embeddings.rows(); ++i)
        if (row_norm(embeddings, i) == 0.0)
            throw InputError(what + ": zero-norm identity row for '" + names[i] + "'");
}

MolecularTokens tokenize(const IdentityTable& table, const ExpressionProfile& profile,
                         Modality modality) {
    if (profile.names.size() != table.names.size())
        throw InputError("tokenize: profile has " + std::to_string(profile.names.size()) +
                         " names, table has " + std::to_string(table.names.size()));
    for (std::size_t i = 0; i < table.names.size(); ++i)
        if (profile.names[i] != table.names[i])
            throw InputError("tokenize: name order diverges at index " + std::to_string(i) +
                             ": '" + profile.names[i] + "' vs '" + table.names[i] + "'");
    if (profile.values.size() != profile.names.size())
        throw InputError("tokenize: profile value/name count mismatch");

    MolecularTokens out;
    out.modality = modality;
    out.tokens = Matrix(table.count(), table.dim());
    for (std::size_t i = 0; i < table.count(); ++i) {
        double v = profile.values[i];
        if (!std::isfinite(v)) throw InputError("tokenize: non-finite expression value");
        for (std::size_t j = 0; j < table.dim(); ++j)
            out.tokens(i, j) = v * table.embeddings(i, j);
    }
    return out;
}

FeatureStats feature_stats(const Matrix& values) {
    if (values.empty()) throw InputError("feature_stats: empty matrix");
    std::size_t n = values.rows(), f = values.cols();
    FeatureStats stats;
    stats.mean.assign(f, 0.0);
    stats.stddev.assign(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += values(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = values(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(n); // population estimator
        stats.mean[j] = mu;
        stats.stddev[j] = std::sqrt(var);
    }
    return stats;
}

Matrix log2_plus_one(const Matrix& raw) {
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double x = raw.data()[i];
        if (!(x >= 0.0)) throw InputError("log2_plus_one: negative or non-finite count");
        out.data()[i] = std::log2(x + 1.0);
    }
    return out;
}

Matrix zscore(const Matrix& values, const FeatureStats& stats) {
    if (stats.mean.size() != values.cols())
        throw DimensionError("zscore: stats for " + std::to_string(stats.mean.size()) +
                             " features, matrix has " + std::to_string(values.cols()));
    Matrix out(values.rows(), values.cols());
    for (std::size_t i = 0; i < values.rows(); ++i)
        for (std::size_t j = 0; j < values.cols(); ++j) {
            double s = stats.stddev[j];
            out(i, j) = s == 0.0 ? 0.0 : (values(i, j) - stats.mean[j]) / s;
        }
    return out;
}

std::vector<double> normalize_expression(const std::vector<double>& raw,
                                         const FeatureStats& post_log_stats, bool log_transform) {
    if (raw.size() != post_log_stats.mean.size())
        throw DimensionError("normalize_expression: feature count mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        double x = raw[j];
        if (log_transform) {
            if (!(x >= 0.0)) throw InputError("normalize_expression: negative gene count");
            x = std::log2(x + 1.0);
        }
        double s = post_log_stats.stddev[j];
        out[j] = s == 0.0 ? 0.0 : (x - post_log_stats.mean[j]) / s;
    }
    return out;
}

std::vector<std::size_t> select_hvg(const Matrix& expression, std::size_t n_genes) {
    if (expression.empty()) throw InputError("select_hvg: empty expression matrix");
    if (n_genes < 1) throw ConfigError("select_hvg: n_genes must be >= 1");
    std::size_t total = expression.cols();
    FeatureStats stats = feature_stats(expression);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double va = stats.stddev[a] * stats.stddev[a];
        double vb = stats.stddev[b] * stats.stddev[b];
        if (va != vb) return va > vb;
        return a < b; // tie: lower original index first
    });
    if (n_genes < total) order.resize(n_genes);
    return order;
}

} // namespace hfgpi::tok
