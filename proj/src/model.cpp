#include "hfgpi/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hfgpi/errors.hpp"
#include "hfgpi/grpf.hpp"
#include "hfgpi/rng.hpp"

namespace hfgpi::model {

namespace {

CohortContext preprocess_impl(const io::Cohort& c, const RunConfig& cfg,
                              const std::vector<double>* edges) {
    cfg.validate();
    if (c.sample_ids.empty()) throw InputError("preprocess: empty cohort");
    CohortContext ctx;
    ctx.sample_ids = c.sample_ids;
    ctx.records = c.records;

    // gene path: log2(x+1), highly-variable selection, cohort z-score
    Matrix logged = tok::log2_plus_one(c.gene_expression);
    std::size_t keep = std::min(cfg.ng, logged.cols());
    std::vector<std::size_t> hvg = tok::select_hvg(logged, keep);
    Matrix selected(logged.rows(), keep);
    ctx.genes.embeddings = Matrix(keep, c.genes.dim());
    for (std::size_t r = 0; r < keep; ++r) {
        std::size_t g = hvg[r];
        ctx.genes.names.push_back(c.genes.names[g]);
        for (std::size_t i = 0; i < logged.rows(); ++i) selected(i, r) = logged(i, g);
        for (std::size_t j = 0; j < c.genes.dim(); ++j)
            ctx.genes.embeddings(r, j) = c.genes.embeddings(g, j);
    }
    ctx.gene_expr = tok::zscore(selected, tok::feature_stats(selected));
    ctx.proteins = c.proteins;
    ctx.protein_expr = cfg.zscore_proteins
                           ? tok::zscore(c.protein_expression,
                                         tok::feature_stats(c.protein_expression))
                           : c.protein_expression;
    ctx.patches = c.patches;

    // ablations: blank the dropped modality, keep shapes intact
    if (cfg.drop == DropModality::Genes) ctx.gene_expr = Matrix(ctx.gene_expr.rows(), keep, 0.0);
    if (cfg.drop == DropModality::Proteins)
        ctx.protein_expr = Matrix(ctx.protein_expr.rows(), ctx.protein_expr.cols(), 0.0);
    if (cfg.drop == DropModality::Patches)
        for (Matrix& y : ctx.patches) y = Matrix(y.rows(), y.cols(), 1.0);

    graph::SparseAdjacency ag = graph::knn_graph(ctx.genes.embeddings, cfg.kg);
    graph::SparseAdjacency ap = graph::knn_graph(ctx.proteins.embeddings, cfg.kp);
    ctx.ag_norm = graph::normalize_adjacency(ag);
    ctx.ap_norm = graph::normalize_adjacency(ap);
    ctx.cg = graph::cost_matrix(ag);
    ctx.cp = graph::cost_matrix(ap);

    if (edges) {
        ctx.bin_edges = *edges;
        if (ctx.bin_edges.size() + 1 != cfg.bins)
            throw ConfigError("preprocess: checkpoint bin edges disagree with configured bins");
    } else {
        std::vector<double> times;
        std::vector<bool> censored;
        for (const auto& rec : ctx.records) {
            times.push_back(rec.time_months);
            censored.push_back(rec.censored);
        }
        ctx.bin_edges = surv::compute_time_bins(times, censored, cfg.bins);
    }
    for (auto& rec : ctx.records) rec.time_bin = surv::bin_of(rec.time_months, ctx.bin_edges);
    return ctx;
}

// Cosine similarity tolerant of all-zero protein rows (possible behind ReLU
// under extreme ablations); zero-norm rows get similarity 0, which the
// deterministic tie-break then resolves by patch index.
Matrix guarded_similarity(const Matrix& patches, const Matrix& proteins) {
    Matrix s(patches.rows(), proteins.rows(), 0.0);
    for (std::size_t j = 0; j < patches.rows(); ++j) {
        double pj = row_norm(patches, j);
        if (pj == 0.0)
            throw InputError("forward: patch row " + std::to_string(j) + " has zero norm");
        for (std::size_t i = 0; i < proteins.rows(); ++i) {
            double qi = row_norm(proteins, i);
            if (qi == 0.0) continue;
            double dot = 0.0;
            for (std::size_t c = 0; c < patches.cols(); ++c)
                dot += patches(j, c) * proteins(i, c);
            s(j, i) = dot / (pj * qi);
        }
    }
    return s;
}

} // namespace

CohortContext preprocess(const io::Cohort& c, const RunConfig& cfg) {
    return preprocess_impl(c, cfg, nullptr);
}

CohortContext preprocess(const io::Cohort& c, const RunConfig& cfg,
                         const std::vector<double>& bin_edges) {
    return preprocess_impl(c, cfg, &bin_edges);
}

HfgpiModel::HfgpiModel(const RunConfig& cfg, std::size_t d_gene_identity,
                       std::size_t d_protein_identity, std::size_t n_proteins)
    : cfg_(cfg), d_g_id_(d_gene_identity), d_p_id_(d_protein_identity), n_proteins_(n_proteins) {
    cfg_.validate();
    std::size_t d = cfg_.d, d_h = d / cfg_.heads, d_ff = 2 * d;
    register_param("gcn_gene_w", d_g_id_, d);
    register_param("gcn_protein_w", d_p_id_, d);
    register_param("grpf_wq", d, d);
    register_param("grpf_wk", d, d);
    register_param("grpf_wv", d, d);
    register_param("hyper_log_we", 1, n_proteins_);
    register_param("hyper_wp", d, d);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        std::string pfx = "enc" + std::to_string(l) + "_";
        for (std::size_t h = 0; h < cfg_.heads; ++h) {
            std::string hs = std::to_string(h);
            register_param(pfx + "wq" + hs, d, d_h);
            register_param(pfx + "wk" + hs, d, d_h);
            register_param(pfx + "wv" + hs, d, d_h);
        }
        register_param(pfx + "wo", d, d);
        register_param(pfx + "ln1_gamma", 1, d);
        register_param(pfx + "ln1_beta", 1, d);
        register_param(pfx + "ffn_w1", d, d_ff);
        register_param(pfx + "ffn_b1", 1, d_ff);
        register_param(pfx + "ffn_w2", d_ff, d);
        register_param(pfx + "ffn_b2", 1, d);
        register_param(pfx + "ln2_gamma", 1, d);
        register_param(pfx + "ln2_beta", 1, d);
    }
    register_param("pool_v", d, cfg_.d_attn);
    register_param("pool_u", d, cfg_.d_attn);
    register_param("pool_w", cfg_.d_attn, 1);
    register_param("head_w", d, cfg_.bins);
    register_param("head_b", 1, cfg_.bins);
}

std::size_t HfgpiModel::register_param(const std::string& name, std::size_t rows,
                                       std::size_t cols) {
    names_.push_back(name);
    params_.emplace_back(rows, cols);
    return params_.size() - 1;
}

std::size_t HfgpiModel::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw ConfigError("model: unknown parameter " + name);
}

void HfgpiModel::init(std::uint64_t seed) {
    auto rng = seeded_stream(seed, "init");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Matrix& p = params_[i];
        const std::string& name = names_[i];
        bool is_gamma = name.find("gamma") != std::string::npos;
        bool is_zero = name.find("beta") != std::string::npos ||
                       name.find("_b") == name.size() - 2 ||
                       name.find("ffn_b") != std::string::npos ||
                       name == "hyper_log_we";
        if (is_gamma) {
            p = Matrix(p.rows(), p.cols(), 1.0);
            continue;
        }
        if (is_zero) {
            p = Matrix(p.rows(), p.cols(), 0.0);
            continue;
        }
        double bound = 1.0 / std::sqrt(static_cast<double>(p.rows()));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t e = 0; e < p.size(); ++e) p.data()[e] = u(rng);
    }
}

HfgpiModel::Forward HfgpiModel::forward(ad::Tape& tape, const CohortContext& ctx,
                                        std::size_t patient, const std::vector<Matrix>& params,
                                        const pghl::Incidence* frozen) const {
    if (patient >= ctx.n_patients()) throw InputError("forward: patient index out of range");
    if (params.size() != params_.size())
        throw DimensionError("forward: parameter vector size mismatch");
    if (ctx.patches[patient].cols() != cfg_.d)
        throw ConfigError("forward: patch feature width " +
                          std::to_string(ctx.patches[patient].cols()) +
                          " must equal model width " + std::to_string(cfg_.d));

    Forward out;
    out.param_vars.reserve(params.size());
    for (const Matrix& p : params) out.param_vars.push_back(tape.leaf(p));
    auto var = [&](const std::string& name) { return out.param_vars[index_of(name)]; };

    // molecular tokens (identity embeddings are frozen inputs)
    tok::ExpressionProfile gp{ctx.genes.names, {}};
    tok::ExpressionProfile pp{ctx.proteins.names, {}};
    for (std::size_t j = 0; j < ctx.genes.count(); ++j)
        gp.values.push_back(ctx.gene_expr(patient, j));
    for (std::size_t j = 0; j < ctx.proteins.count(); ++j)
        pp.values.push_back(ctx.protein_expr(patient, j));
    ad::Var gene_tokens =
        tape.constant(tok::tokenize(ctx.genes, gp, tok::Modality::Gene).tokens);
    ad::Var prot_tokens =
        tape.constant(tok::tokenize(ctx.proteins, pp, tok::Modality::Protein).tokens);

    // per-modality GCNs over the identity kNN graphs
    ad::Var x_g = graph::gcn_forward(tape, gene_tokens, ctx.ag_norm, var("gcn_gene_w"));
    ad::Var x_p = graph::gcn_forward(tape, prot_tokens, ctx.ap_norm, var("gcn_protein_w"));

    // gene-regulated protein fusion
    grpf::GrpfVars gv{var("grpf_wq"), var("grpf_wk"), var("grpf_wv")};
    grpf::CrossAttentionOut att = grpf::cross_attention(tape, x_p, x_g, gv);
    out.attention = att.attention;
    out.struct_loss = grpf::structure_loss(tape, att.attention, ctx.cg, ctx.cp);
    ad::Var x_p_reg = grpf::regulate(tape, x_p, att.context);

    // protein-guided patch hypergraph; the top-k gate is a constant
    ad::Var patches = tape.constant(ctx.patches[patient]);
    if (frozen) {
        out.incidence = *frozen;
    } else {
        Matrix sim = guarded_similarity(ctx.patches[patient], tape.value(x_p_reg));
        out.incidence =
            pghl::build_incidence(sim, std::min(cfg_.topk, ctx.patches[patient].rows()));
    }
    ad::Var edge_weights = tape.exp(var("hyper_log_we"));
    ad::Var z = pghl::hypergraph_conv(tape, patches, out.incidence, edge_weights, var("hyper_wp"));
    ad::Var e = pghl::aggregate_hyperedges(tape, out.incidence, z);
    ad::Var fused = pghl::fuse(tape, e, x_p_reg);

    // survival head
    std::vector<surv::EncoderLayerVars> layers(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        std::string pfx = "enc" + std::to_string(l) + "_";
        for (std::size_t h = 0; h < cfg_.heads; ++h) {
            std::string hs = std::to_string(h);
            layers[l].w_q.push_back(var(pfx + "wq" + hs));
            layers[l].w_k.push_back(var(pfx + "wk" + hs));
            layers[l].w_v.push_back(var(pfx + "wv" + hs));
        }
        layers[l].w_o = var(pfx + "wo");
        layers[l].ln1_gamma = var(pfx + "ln1_gamma");
        layers[l].ln1_beta = var(pfx + "ln1_beta");
        layers[l].ffn_w1 = var(pfx + "ffn_w1");
        layers[l].ffn_b1 = var(pfx + "ffn_b1");
        layers[l].ffn_w2 = var(pfx + "ffn_w2");
        layers[l].ffn_b2 = var(pfx + "ffn_b2");
        layers[l].ln2_gamma = var(pfx + "ln2_gamma");
        layers[l].ln2_beta = var(pfx + "ln2_beta");
    }
    ad::Var encoded = surv::transformer_encode(tape, fused, layers);
    surv::GatedPoolVars pool{var("pool_v"), var("pool_u"), var("pool_w")};
    surv::PooledOut pooled = surv::gated_attention_pool(tape, encoded, pool);
    out.pool_weights = pooled.weights;
    out.hazards = surv::predict_hazards(tape, pooled.embedding, var("head_w"), var("head_b"));
    out.surv_loss = surv::nll_loss(tape, out.hazards, ctx.records[patient]);
    out.loss = surv::total_loss(tape, out.surv_loss, out.struct_loss, cfg_.lambda);
    return out;
}

surv::HazardCurve HfgpiModel::predict(const CohortContext& ctx, std::size_t patient) const {
    ad::Tape tape;
    Forward f = forward(tape, ctx, patient);
    const Matrix& h = tape.value(f.hazards);
    surv::HazardCurve curve;
    for (std::size_t b = 0; b < h.cols(); ++b) curve.hazards.push_back(h(0, b));
    return curve;
}

} // namespace hfgpi::model
