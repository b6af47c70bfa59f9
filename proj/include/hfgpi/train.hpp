#pragma once

#include <cstddef>
#include <vector>

#include "hfgpi/config.hpp"
#include "hfgpi/model.hpp"
#include "hfgpi/optimizer.hpp"

namespace hfgpi::train {

struct EpochLog {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double mean_surv = 0.0;
    double mean_struct = 0.0;          // measured structure loss, lambda-independent
    double struct_contribution = 0.0;  // lambda * mean_struct (0 when lambda == 0)
    double val_cindex = 0.0;           // NaN when the split has no comparable pair
};

// Everything needed to resume bitwise: current parameters, optimizer
// moments, best-so-far snapshot, and the epoch counter.
struct TrainState {
    std::vector<Matrix> params;
    AdamW::State opt;
    std::vector<Matrix> best_params;
    double best_metric = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_done = 0;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    TrainState state;
    bool aborted_nan = false; // loss went NaN; state holds the last good snapshot
};

// Batch size 1 with gradient accumulation; per-epoch shuffles come from the
// (seed, "shuffle", epoch) stream so interrupted runs resume identically.
// Best snapshot is chosen by validation C-index, or by negated mean training
// loss when val_idx is empty.
TrainResult fit(model::HfgpiModel& m, const model::CohortContext& ctx,
                const std::vector<std::size_t>& train_idx,
                const std::vector<std::size_t>& val_idx, const TrainState* resume = nullptr);

// Held-out concordance of the model's risk scores on the given patients.
double cindex_of(const model::HfgpiModel& m, const model::CohortContext& ctx,
                 const std::vector<std::size_t>& idx);

} // namespace hfgpi::train
