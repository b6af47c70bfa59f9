#include "hfgpi/optimizer.hpp"

#include <cmath>

#include "hfgpi/errors.hpp"

namespace hfgpi {

void AdamW::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
    if (params.size() != grads.size())
        throw DimensionError("optimizer step: param/grad count mismatch");
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const Matrix* p : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }
    if (m_.size() != params.size())
        throw DimensionError("optimizer step: parameter count changed mid-run");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!grads[k].same_shape(*params[k]))
            throw DimensionError("optimizer step: grad shape " + shape_str(grads[k]) +
                                 " vs param " + shape_str(*params[k]));
        if (!grads[k].all_finite())
            throw NumericError("optimizer step aborted: non-finite gradient in parameter " +
                               std::to_string(k));
    }
    ++step_;
    double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& g = grads[k];
        Matrix& m = m_[k];
        Matrix& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = g.data()[i];
            m.data()[i] = opt_.beta1 * m.data()[i] + (1.0 - opt_.beta1) * gi;
            v.data()[i] = opt_.beta2 * v.data()[i] + (1.0 - opt_.beta2) * gi * gi;
            double mhat = m.data()[i] / bc1;
            double vhat = v.data()[i] / bc2;
            // decoupled weight decay
            p.data()[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) +
                                      opt_.weight_decay * p.data()[i]);
        }
    }
}

void AdamW::restore(State s) {
    m_ = std::move(s.m);
    v_ = std::move(s.v);
    step_ = s.step;
}

} // namespace hfgpi
