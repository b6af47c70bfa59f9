#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hfgpi {

// All randomness flows from one root seed through named sub-streams, so any
// component (init, shuffles, folds, cohort generation) can be reproduced in
// isolation. Stream identity = root seed mixed with a stable string hash and
// an optional index (epoch, fold, patient).
std::uint64_t mix_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

std::mt19937_64 seeded_stream(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

} // namespace hfgpi
