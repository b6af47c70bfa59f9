#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hfgpi/matrix.hpp"

namespace hfgpi::ad {

// Handle into a Tape. Cheap to copy; only valid for the tape that issued it.
struct Var {
    std::uint32_t idx = 0;
};

// Reverse-mode tape over matrix-valued nodes. One tape per forward pass,
// confined to a single logical thread. Nodes are recorded in topological
// order by construction, so reverse accumulation is a single backward sweep
// over the node list and is bitwise deterministic.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf node. Inputs must be finite.
    Var leaf(Matrix value);
    // Leaf that is known to carry no trainable signal (graphs, incidence, ...).
    // Identical mechanics to leaf(); the distinction is documentation.
    Var constant(Matrix value) { return leaf(std::move(value)); }

    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double c);
    // Broadcast: adds a 1 x cols row vector to every row of a.
    Var add_rowvec(Var a, Var b);
    // Broadcast: scales column j of a by w(0, j); w is 1 x cols.
    Var mul_colwise(Var a, Var w);

    Var relu(Var a);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var log(Var a);
    Var exp(Var a);

    // Numerically stable softmax per row (per-row max subtraction).
    Var row_softmax(Var a);
    // Each row divided by its L2 norm; rows must be nonzero.
    Var row_l2_normalize(Var a);
    // Per-row layer normalization with learnable scale/shift (1 x d each).
    Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-6);

    Var hconcat(const std::vector<Var>& parts);
    Var sum(Var a);  // 1x1
    Var mean(Var a); // 1x1

    // Discrete-time survival NLL for one record against a 1 x B hazard row.
    // Censored:   -log S(bin); uncensored: -log S(bin-1) - log h(bin), with
    // S(-1) = 1 and every probability clamped to [eps, 1-eps] before log.
    // Clamped entries get zero gradient.
    Var nll_discrete(Var hazards, std::size_t bin, bool censored, double eps = 1e-7);

    // Reverse accumulation from a scalar loss. Grad buffers of all nodes are
    // reset first, so backward over the same graph twice is bitwise identical.
    void backward(Var loss);

    const Matrix& value(Var v) const { return nodes_[v.idx].value; }
    const Matrix& grad(Var v) const { return nodes_[v.idx].grad; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void()> pull; // adds this node's grad contribution to parents
    };

    Var push(Matrix value, std::function<void()> pull);
    std::vector<Node> nodes_;
};

} // namespace hfgpi::ad
