#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace seesaw {

// One checked tensor: a mutable value buffer and the analytic gradient
// claimed for it. The checker perturbs each element in place.
struct FdSlot {
  std::string name;
  double* data = nullptr;
  std::int64_t size = 0;
  const double* analytic = nullptr;
};

struct FdRow {
  std::string name;
  double max_rel_err = 0;
  std::int64_t worst_index = -1;
};

struct FdReport {
  std::vector<FdRow> rows;
  double max_rel_err = 0;

  bool pass(double tolerance) const { return max_rel_err < tolerance; }
  std::string summary() const {
    std::string s;
    for (const auto& r : rows)
      s += r.name + ": max_rel_err=" + std::to_string(r.max_rel_err) + "\n";
    return s;
  }
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

// Central finite differences of a scalar-valued forward pass against the
// analytic gradients, elementwise. The loss closure must recompute the
// forward pass from the (perturbed) slot contents on every call.
//
// Central differences carry roundoff noise of about eps * |loss| / h, so a
// direction whose true gradient sits below that floor cannot meet any
// relative tolerance (batch norm after a depthwise conv suppresses the
// preceding scale direction to O(epsilon), for example). Elements whose
// absolute disagreement is within the noise floor count as matching.
inline FdReport finite_difference_check(std::vector<FdSlot> slots,
                                        const std::function<double()>& loss, double h = 1e-5) {
  FdReport report;
  const double base = loss();
  const double noise_floor =
      32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base)) / h;
  for (auto& slot : slots) {
    FdRow row{slot.name, 0, -1};
    for (std::int64_t i = 0; i < slot.size; ++i) {
      const double saved = slot.data[i];
      slot.data[i] = saved + h;
      const double up = loss();
      slot.data[i] = saved - h;
      const double down = loss();
      slot.data[i] = saved;
      const double numeric = (up - down) / (2 * h);
      if (std::abs(slot.analytic[i] - numeric) <= noise_floor) continue;
      const double err = relative_error(slot.analytic[i], numeric);
      if (err > row.max_rel_err) {
        row.max_rel_err = err;
        row.worst_index = i;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, row.max_rel_err);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace seesaw
