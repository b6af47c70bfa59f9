#pragma once

#include <cstdint>
#include <vector>

#include "hfgpi/matrix.hpp"

namespace hfgpi {

// AdamW with decoupled weight decay and bias-corrected moments.
class AdamW {
public:
    struct Options {
        double lr = 1e-4;
        double weight_decay = 1e-5;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    AdamW() = default;
    explicit AdamW(Options opt) : opt_(opt) {}

    const Options& options() const { return opt_; }
    std::uint64_t step_count() const { return step_; }

    // One update over all parameters. Throws NumericError on NaN/Inf gradient
    // without touching any parameter (the step is aborted whole).
    void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

    // Checkpoint support.
    struct State {
        std::vector<Matrix> m, v;
        std::uint64_t step = 0;
    };
    State state() const { return {m_, v_, step_}; }
    void restore(State s);

private:
    Options opt_;
    std::vector<Matrix> m_, v_;
    std::uint64_t step_ = 0;
};

} // namespace hfgpi
