#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfgpi/matrix.hpp"
#include "hfgpi/optimizer.hpp"

namespace hfgpi::ckpt {

// Versioned binary container: serving (best) parameters plus everything
// needed to resume training bitwise — current parameters, optimizer moments,
// epoch counter, and the bin edges / config / seed that define the run.
struct Checkpoint {
    std::uint64_t seed = 0;
    std::string config_echo;
    std::vector<double> bin_edges;
    std::vector<std::string> names;
    std::vector<Matrix> params; // best-validation parameters

    bool has_resume = false;
    std::vector<Matrix> current_params;
    AdamW::State opt;
    std::uint64_t epochs_done = 0;
    double best_metric = 0.0;
    std::uint64_t best_epoch = 0;
};

void save(const std::string& path, const Checkpoint& c);
Checkpoint load(const std::string& path);

} // namespace hfgpi::ckpt
