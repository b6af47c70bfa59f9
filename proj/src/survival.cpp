#include "hfgpi/survival.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hfgpi/errors.hpp"

namespace hfgpi::surv {

std::vector<double> HazardCurve::survival() const {
    std::vector<double> s(hazards.size());
    double acc = 1.0;
    for (std::size_t t = 0; t < hazards.size(); ++t) {
        acc *= 1.0 - hazards[t];
        s[t] = acc;
    }
    return s;
}

ad::Var transformer_encode(ad::Tape& tape, ad::Var tokens,
                           const std::vector<EncoderLayerVars>& layers) {
    if (layers.empty()) throw ConfigError("transformer_encode: need >= 1 layer");
    ad::Var x = tokens;
    for (const EncoderLayerVars& layer : layers) {
        // pre-norm self-attention with residual
        ad::Var normed = tape.layer_norm_rows(x, layer.ln1_gamma, layer.ln1_beta);
        std::vector<ad::Var> heads;
        heads.reserve(layer.w_q.size());
        for (std::size_t h = 0; h < layer.w_q.size(); ++h) {
            double d_h = static_cast<double>(tape.value(layer.w_q[h]).cols());
            ad::Var q = tape.matmul(normed, layer.w_q[h]);
            ad::Var k = tape.matmul(normed, layer.w_k[h]);
            ad::Var v = tape.matmul(normed, layer.w_v[h]);
            ad::Var attn = tape.row_softmax(
                tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(d_h)));
            heads.push_back(tape.matmul(attn, v));
        }
        ad::Var mixed = tape.matmul(heads.size() == 1 ? heads[0] : tape.hconcat(heads), layer.w_o);
        x = tape.add(x, mixed);
        // pre-norm feed-forward with residual
        ad::Var normed2 = tape.layer_norm_rows(x, layer.ln2_gamma, layer.ln2_beta);
        ad::Var hidden = tape.relu(tape.add_rowvec(tape.matmul(normed2, layer.ffn_w1),
                                                   layer.ffn_b1));
        ad::Var ffn = tape.add_rowvec(tape.matmul(hidden, layer.ffn_w2), layer.ffn_b2);
        x = tape.add(x, ffn);
    }
    return x;
}

PooledOut gated_attention_pool(ad::Tape& tape, ad::Var tokens, const GatedPoolVars& p) {
    // a = softmax_n( w^T (tanh(V x_n) . sigmoid(U x_n)) )
    ad::Var gate = tape.hadamard(tape.tanh(tape.matmul(tokens, p.v)),
                                 tape.sigmoid(tape.matmul(tokens, p.u)));
    ad::Var logits = tape.matmul(gate, p.w); // N x 1
    ad::Var weights = tape.transpose(tape.row_softmax(tape.transpose(logits)));
    PooledOut out;
    out.weights = weights;
    out.embedding = tape.matmul(tape.transpose(weights), tokens); // 1 x d
    return out;
}

ad::Var predict_hazards(ad::Tape& tape, ad::Var embedding, ad::Var head_w, ad::Var head_b) {
    if (tape.value(head_w).cols() < 2)
        throw ConfigError("predict_hazards: need at least 2 time bins");
    return tape.sigmoid(tape.add_rowvec(tape.matmul(embedding, head_w), head_b));
}

ad::Var nll_loss(ad::Tape& tape, ad::Var hazards, const SurvivalRecord& record, double eps) {
    return tape.nll_discrete(hazards, record.time_bin, record.censored, eps);
}

double nll_loss_value(const HazardCurve& curve, const SurvivalRecord& record, double eps) {
    if (record.time_bin >= curve.hazards.size())
        throw DimensionError("nll_loss: bin out of range");
    auto clamp = [eps](double p) { return p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p); };
    double loss = 0.0;
    std::size_t upto = record.censored ? record.time_bin + 1 : record.time_bin;
    for (std::size_t u = 0; u < upto; ++u) loss -= std::log(clamp(1.0 - curve.hazards[u]));
    if (!record.censored) loss -= std::log(clamp(curve.hazards[record.time_bin]));
    return loss;
}

ad::Var total_loss(ad::Tape& tape, ad::Var surv, ad::Var structure, double lambda) {
    if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
    if (lambda == 0.0) return surv;
    return tape.add(surv, tape.scale(structure, lambda));
}

std::vector<double> compute_time_bins(const std::vector<double>& times,
                                      const std::vector<bool>& censored, std::size_t bins) {
    if (bins < 2) throw ConfigError("compute_time_bins: need >= 2 bins for a hazard sequence");
    if (times.size() != censored.size())
        throw DimensionError("compute_time_bins: times/censored length mismatch");
    std::vector<double> events;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (!censored[i]) events.push_back(times[i]);
    std::set<double> distinct(events.begin(), events.end());
    if (distinct.size() < bins)
        throw ConfigError("compute_time_bins: only " + std::to_string(distinct.size()) +
                          " distinct uncensored event times; reduce bins below " +
                          std::to_string(bins));
    std::sort(events.begin(), events.end());
    std::vector<double> edges;
    edges.reserve(bins - 1);
    for (std::size_t b = 1; b < bins; ++b) {
        // midpoint-style quantile at fraction b/bins
        double pos = static_cast<double>(b) * static_cast<double>(events.size()) /
                     static_cast<double>(bins);
        std::size_t idx = static_cast<std::size_t>(pos);
        double edge;
        if (pos == static_cast<double>(idx) && idx > 0 && idx < events.size())
            edge = 0.5 * (events[idx - 1] + events[idx]);
        else
            edge = events[std::min(idx, events.size() - 1)];
        edges.push_back(edge);
    }
    return edges;
}

std::size_t bin_of(double time, const std::vector<double>& edges) {
    std::size_t b = 0;
    while (b < edges.size() && time >= edges[b]) ++b;
    return b;
}

} // namespace hfgpi::surv
