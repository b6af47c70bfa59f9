#include "hfgpi/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hfgpi/errors.hpp"
#include "hfgpi/eval.hpp"
#include "hfgpi/rng.hpp"

namespace hfgpi::train {

double cindex_of(const model::HfgpiModel& m, const model::CohortContext& ctx,
                 const std::vector<std::size_t>& idx) {
    std::vector<double> risks, times;
    std::vector<bool> censored;
    for (std::size_t p : idx) {
        risks.push_back(eval::risk_score(m.predict(ctx, p)));
        times.push_back(ctx.records[p].time_months);
        censored.push_back(ctx.records[p].censored);
    }
    return eval::concordance_index(risks, times, censored);
}

TrainResult fit(model::HfgpiModel& m, const model::CohortContext& ctx,
                const std::vector<std::size_t>& train_idx,
                const std::vector<std::size_t>& val_idx, const TrainState* resume) {
    const RunConfig& cfg = m.config();
    if (train_idx.empty()) throw InputError("fit: empty training set");

    TrainResult res;
    AdamW opt({cfg.lr, cfg.weight_decay});
    if (resume) {
        if (resume->params.size() != m.params().size())
            throw DimensionError("fit: resume state parameter count mismatch");
        m.params() = resume->params;
        opt.restore(resume->opt);
        res.state = *resume;
    } else {
        m.init(cfg.seed);
        res.state.best_metric = -std::numeric_limits<double>::infinity();
    }

    std::vector<Matrix> acc(m.params().size());
    for (std::size_t e = res.state.epochs_done; e < cfg.epochs; ++e) {
        std::vector<std::size_t> order = train_idx;
        auto rng = seeded_stream(cfg.seed, "shuffle", e);
        std::shuffle(order.begin(), order.end(), rng);

        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] = Matrix(m.params()[i].rows(), m.params()[i].cols());
        std::size_t window = 0;
        double sum_loss = 0.0, sum_surv = 0.0, sum_struct = 0.0;
        auto flush = [&]() {
            if (window == 0) return;
            std::vector<Matrix*> ptrs;
            for (Matrix& p : m.params()) ptrs.push_back(&p);
            std::vector<Matrix> grads;
            grads.reserve(acc.size());
            for (Matrix& g : acc)
                grads.push_back(scaled(g, 1.0 / static_cast<double>(window)));
            opt.step(ptrs, grads);
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] = Matrix(acc[i].rows(), acc[i].cols());
            window = 0;
        };
        try {
            for (std::size_t p : order) {
                ad::Tape tape;
                model::HfgpiModel::Forward f = m.forward(tape, ctx, p);
                double loss = tape.value(f.loss)(0, 0);
                if (!std::isfinite(loss)) throw NumericError("fit: non-finite loss");
                sum_loss += loss;
                sum_surv += tape.value(f.surv_loss)(0, 0);
                sum_struct += tape.value(f.struct_loss)(0, 0);
                tape.backward(f.loss);
                for (std::size_t i = 0; i < acc.size(); ++i)
                    acc[i] = add(acc[i], tape.grad(f.param_vars[i]));
                if (++window == cfg.accumulation) flush();
            }
            flush();
        } catch (const NumericError&) {
            // abort; parameters are still finite (the bad step was never applied)
            res.aborted_nan = true;
            res.state.params = m.params();
            res.state.opt = opt.state();
            if (res.state.best_params.empty()) res.state.best_params = m.params();
            return res;
        }

        EpochLog log;
        log.epoch = e;
        double n = static_cast<double>(order.size());
        log.mean_loss = sum_loss / n;
        log.mean_surv = sum_surv / n;
        log.mean_struct = sum_struct / n;
        log.struct_contribution = cfg.lambda * log.mean_struct;
        double metric;
        if (!val_idx.empty()) {
            try {
                log.val_cindex = cindex_of(m, ctx, val_idx);
                metric = log.val_cindex;
            } catch (const NumericError&) {
                log.val_cindex = std::nan("");
                metric = -log.mean_loss;
            }
        } else {
            log.val_cindex = std::nan("");
            metric = -log.mean_loss;
        }
        res.epochs.push_back(log);

        res.state.params = m.params();
        res.state.opt = opt.state();
        res.state.epochs_done = e + 1;
        if (res.state.best_params.empty() || metric > res.state.best_metric) {
            res.state.best_params = m.params();
            res.state.best_metric = metric;
            res.state.best_epoch = e;
        }
    }
    return res;
}

} // namespace hfgpi::train
