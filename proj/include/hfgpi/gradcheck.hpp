#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hfgpi/matrix.hpp"

namespace hfgpi {

struct FdEntry {
    std::string name;
    double max_err = 0.0; // |analytic - central diff| / max(1, |analytic|, |fd|)
    bool pass = false;
};

struct FdReport {
    std::vector<FdEntry> entries;
    double tolerance = 0.0;
    double step = 0.0;
    bool all_pass = false;
};

// Compares analytic gradients against central finite differences, entry by
// entry, for a deterministic scalar-valued function of named parameters.
//   value_of(params) -> f
//   grad_of(params)  -> dL/dparam, one matrix per parameter, same shapes
FdReport finite_difference_check(
    const std::vector<std::string>& names, std::vector<Matrix> params,
    const std::function<double(const std::vector<Matrix>&)>& value_of,
    const std::function<std::vector<Matrix>(const std::vector<Matrix>&)>& grad_of,
    double tolerance, double step = 1e-5);

std::string format_report(const FdReport& r);

} // namespace hfgpi
