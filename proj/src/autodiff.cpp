#include "hfgpi/autodiff.hpp"

#include <cmath>

#include "hfgpi/errors.hpp"

namespace hfgpi::ad {

Var Tape::push(Matrix value, std::function<void()> pull) {
    Node n;
    n.grad = Matrix(value.rows(), value.cols());
    n.value = std::move(value);
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value) {
    require_finite(value, "tape leaf");
    return push(std::move(value), nullptr);
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (av.cols() != bv.rows())
        throw DimensionError("matmul: " + shape_str(av) + " x " + shape_str(bv));
    Matrix out = hfgpi::matmul(av, bv);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, b, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        // dA += g * B^T ; dB += A^T * g
        const Matrix& av2 = nodes_[a.idx].value;
        const Matrix& bv2 = nodes_[b.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gb = nodes_[b.idx].grad;
        for (std::size_t i = 0; i < av2.rows(); ++i)
            for (std::size_t j = 0; j < bv2.cols(); ++j) {
                double gij = g(i, j);
                if (gij == 0.0) continue;
                for (std::size_t k = 0; k < av2.cols(); ++k) {
                    ga(i, k) += gij * bv2(k, j);
                    gb(k, j) += av2(i, k) * gij;
                }
            }
    });
    return o;
}

Var Tape::transpose(Var a) {
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(transposed(value(a)), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
    });
    return o;
}

Var Tape::add(Var a, Var b) {
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(hfgpi::add(value(a), value(b)), [this, a, b, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gb = nodes_[b.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] += g.data()[i];
        }
    });
    return o;
}

Var Tape::sub(Var a, Var b) {
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(hfgpi::sub(value(a), value(b)), [this, a, b, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gb = nodes_[b.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i];
            gb.data()[i] -= g.data()[i];
        }
    });
    return o;
}

Var Tape::hadamard(Var a, Var b) {
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(hfgpi::hadamard(value(a), value(b)), [this, a, b, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& av = nodes_[a.idx].value;
        const Matrix& bv = nodes_[b.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gb = nodes_[b.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data()[i] += g.data()[i] * bv.data()[i];
            gb.data()[i] += g.data()[i] * av.data()[i];
        }
    });
    return o;
}

Var Tape::scale(Var a, double c) {
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(scaled(value(a), c), [this, a, c, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += c * g.data()[i];
    });
    return o;
}

Var Tape::add_rowvec(Var a, Var b) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (bv.rows() != 1 || bv.cols() != av.cols())
        throw DimensionError("add_rowvec: " + shape_str(av) + " + " + shape_str(bv));
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, b, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gb = nodes_[b.idx].grad;
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                ga(i, j) += g(i, j);
                gb(0, j) += g(i, j);
            }
    });
    return o;
}

Var Tape::mul_colwise(Var a, Var w) {
    const Matrix& av = value(a);
    const Matrix& wv = value(w);
    if (wv.rows() != 1 || wv.cols() != av.cols())
        throw DimensionError("mul_colwise: " + shape_str(av) + " * " + shape_str(wv));
    Matrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= wv(0, j);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, w, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& av2 = nodes_[a.idx].value;
        const Matrix& wv2 = nodes_[w.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        Matrix& gw = nodes_[w.idx].grad;
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                ga(i, j) += g(i, j) * wv2(0, j);
                gw(0, j) += g(i, j) * av2(i, j);
            }
    });
    return o;
}

Var Tape::relu(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out.data()[i] < 0.0) out.data()[i] = 0.0;
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& av = nodes_[a.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        // subgradient at 0 defined as 0
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av.data()[i] > 0.0) ga.data()[i] += g.data()[i];
    });
    return o;
}

Var Tape::sigmoid(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& yv = nodes_[o.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = yv.data()[i];
            ga.data()[i] += g.data()[i] * y * (1.0 - y);
        }
    });
    return o;
}

Var Tape::tanh(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& yv = nodes_[o.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = yv.data()[i];
            ga.data()[i] += g.data()[i] * (1.0 - y * y);
        }
    });
    return o;
}

Var Tape::log(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i]);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& av = nodes_[a.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] / av.data()[i];
    });
    return o;
}

Var Tape::exp(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& yv = nodes_[o.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * yv.data()[i];
    });
    return o;
}

Var Tape::row_softmax(Var a) {
    const Matrix& av = value(a);
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double mx = av(i, 0);
        for (std::size_t j = 1; j < av.cols(); ++j) mx = std::max(mx, av(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < av.cols(); ++j) {
            out(i, j) = std::exp(av(i, j) - mx);
            denom += out(i, j);
        }
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) /= denom;
    }
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        // dx = y * (g - <g, y>_row)
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& y = nodes_[o.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
        }
    });
    return o;
}

Var Tape::row_l2_normalize(Var a) {
    const Matrix& av = value(a);
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double n = row_norm(av, i);
        if (n == 0.0) throw InputError("row_l2_normalize: zero-norm row " + std::to_string(i));
        for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / n;
    }
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        // dx = (g - y * <g, y>_row) / ||x||_row
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& y = nodes_[o.idx].value;
        const Matrix& av2 = nodes_[a.idx].value;
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < g.rows(); ++i) {
            double n = row_norm(av2, i);
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
            for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) += (g(i, j) - y(i, j) * dot) / n;
        }
    });
    return o;
}

Var Tape::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
    const Matrix& xv = value(x);
    const Matrix& gv = value(gamma);
    const Matrix& bv = value(beta);
    if (gv.rows() != 1 || gv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != xv.cols())
        throw DimensionError("layer_norm_rows: scale/shift must be 1x" + std::to_string(xv.cols()));
    std::size_t d = xv.cols();
    Matrix out(xv.rows(), d);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += xv(i, j);
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = xv(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = gv(0, j) * (xv(i, j) - mu) * inv + bv(0, j);
    }
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, x, gamma, beta, eps, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        const Matrix& xv2 = nodes_[x.idx].value;
        const Matrix& gv2 = nodes_[gamma.idx].value;
        Matrix& gx = nodes_[x.idx].grad;
        Matrix& gg = nodes_[gamma.idx].grad;
        Matrix& gb = nodes_[beta.idx].grad;
        std::size_t d = xv2.cols();
        double dn = static_cast<double>(d);
        for (std::size_t i = 0; i < xv2.rows(); ++i) {
            double mu = 0.0;
            for (std::size_t j = 0; j < d; ++j) mu += xv2(i, j);
            mu /= dn;
            double var = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double c = xv2(i, j) - mu;
                var += c * c;
            }
            var /= dn;
            double inv = 1.0 / std::sqrt(var + eps);
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double xhat = (xv2(i, j) - mu) * inv;
                double dxhat = g(i, j) * gv2(0, j);
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * xhat;
                gg(0, j) += g(i, j) * xhat;
                gb(0, j) += g(i, j);
            }
            for (std::size_t j = 0; j < d; ++j) {
                double xhat = (xv2(i, j) - mu) * inv;
                double dxhat = g(i, j) * gv2(0, j);
                gx(i, j) += inv * (dxhat - sum_dxhat / dn - xhat * sum_dxhat_xhat / dn);
            }
        }
    });
    return o;
}

Var Tape::hconcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("hconcat: no parts");
    std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (Var p : parts) {
        if (value(p).rows() != rows) throw DimensionError("hconcat: row mismatch");
        cols += value(p).cols();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
        off += pv.cols();
    }
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    std::vector<Var> parts_copy = parts;
    push(std::move(out), [this, parts_copy, o]() {
        const Matrix& g = nodes_[o.idx].grad;
        std::size_t off2 = 0;
        for (Var p : parts_copy) {
            Matrix& gp = nodes_[p.idx].grad;
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off2 + j);
            off2 += gp.cols();
        }
    });
    return o;
}

Var Tape::sum(Var a) {
    double s = 0.0;
    const Matrix& av = value(a);
    for (std::size_t i = 0; i < av.size(); ++i) s += av.data()[i];
    Matrix out(1, 1);
    out(0, 0) = s;
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, a, o]() {
        double g = nodes_[o.idx].grad(0, 0);
        Matrix& ga = nodes_[a.idx].grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
    });
    return o;
}

Var Tape::mean(Var a) {
    std::size_t n = value(a).size();
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var Tape::nll_discrete(Var hazards, std::size_t bin, bool censored, double eps) {
    const Matrix& hv = value(hazards);
    if (hv.rows() != 1) throw DimensionError("nll_discrete: hazards must be 1xB, got " + shape_str(hv));
    if (bin >= hv.cols()) throw DimensionError("nll_discrete: bin out of range");
    auto clamp = [eps](double p) { return p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p); };
    // censored:   L = -sum_{u<=bin} log(1 - h_u)
    // uncensored: L = -sum_{u<bin}  log(1 - h_u) - log(h_bin)
    double loss = 0.0;
    std::size_t surv_upto = censored ? bin + 1 : bin; // exclusive
    for (std::size_t u = 0; u < surv_upto; ++u) loss -= std::log(clamp(1.0 - hv(0, u)));
    if (!censored) loss -= std::log(clamp(hv(0, bin)));
    Matrix out(1, 1);
    out(0, 0) = loss;
    Var o{static_cast<std::uint32_t>(nodes_.size())};
    push(std::move(out), [this, hazards, bin, censored, eps, o]() {
        double g = nodes_[o.idx].grad(0, 0);
        const Matrix& hv2 = nodes_[hazards.idx].value;
        Matrix& gh = nodes_[hazards.idx].grad;
        std::size_t surv_upto = censored ? bin + 1 : bin;
        for (std::size_t u = 0; u < surv_upto; ++u) {
            double p = 1.0 - hv2(0, u);
            if (p >= eps && p <= 1.0 - eps) gh(0, u) += g / p; // d(-log(1-h))/dh = 1/(1-h)
        }
        if (!censored) {
            double h = hv2(0, bin);
            if (h >= eps && h <= 1.0 - eps) gh(0, bin) -= g / h;
        }
    });
    return o;
}

void Tape::backward(Var loss) {
    const Matrix& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1)
        throw DimensionError("backward: loss must be scalar, got " + shape_str(lv));
    for (Node& n : nodes_)
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad.data()[i] = 0.0;
    nodes_[loss.idx].grad(0, 0) = 1.0;
    for (std::size_t i = loss.idx + 1; i-- > 0;)
        if (nodes_[i].pull) nodes_[i].pull();
}

} // namespace hfgpi::ad
