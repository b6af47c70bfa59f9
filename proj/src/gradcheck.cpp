#include "hfgpi/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hfgpi/errors.hpp"

namespace hfgpi {

FdReport finite_difference_check(
    const std::vector<std::string>& names, std::vector<Matrix> params,
    const std::function<double(const std::vector<Matrix>&)>& value_of,
    const std::function<std::vector<Matrix>(const std::vector<Matrix>&)>& grad_of,
    double tolerance, double step) {
    if (names.size() != params.size())
        throw DimensionError("finite_difference_check: name/param count mismatch");
    std::vector<Matrix> analytic = grad_of(params);
    if (analytic.size() != params.size())
        throw DimensionError("finite_difference_check: grad_of returned wrong count");

    FdReport report;
    report.tolerance = tolerance;
    report.step = step;
    report.all_pass = true;
    for (std::size_t k = 0; k < params.size(); ++k) {
        FdEntry entry;
        entry.name = names[k];
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            double saved = params[k].data()[i];
            params[k].data()[i] = saved + step;
            double fplus = value_of(params);
            params[k].data()[i] = saved - step;
            double fminus = value_of(params);
            params[k].data()[i] = saved;
            double fd = (fplus - fminus) / (2.0 * step);
            double an = analytic[k].data()[i];
            double err = std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
            entry.max_err = std::max(entry.max_err, err);
        }
        entry.pass = entry.max_err < tolerance;
        report.all_pass = report.all_pass && entry.pass;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string format_report(const FdReport& r) {
    std::ostringstream os;
    os << "gradient check (tolerance " << r.tolerance << ", step " << r.step << ")\n";
    for (const FdEntry& e : r.entries)
        os << (e.pass ? "  pass  " : "  FAIL  ") << e.name << "  max_err=" << e.max_err << "\n";
    os << (r.all_pass ? "all parameter groups pass" : "FAILURES present") << "\n";
    return os.str();
}

} // namespace hfgpi
