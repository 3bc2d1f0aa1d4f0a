// Error metrics shared by every analysis stage.
//
// Per-sample values are dimensionless fractions; aggregates are percents. The
// fraction-to-percent conversion happens exactly once, in mre().
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biaslens/common.hpp"

namespace biaslens {

struct ErrorSample {
  std::string id;
  std::string model;
  double relative_error = 0.0;  // |y_pred - y_true| / y_true
};

struct GroupStats {
  std::string label;
  size_t n = 0;
  double mre_pct = 0.0;
  std::optional<double> median_pct;
  // Median of signed (y_pred - y_true)/y_true, in percent. Diagnostic only;
  // reported aggregates elsewhere use the absolute form.
  std::optional<double> median_signed_pct;
};

struct GapStats {
  double absolute_gap_pp = 0.0;       // worst - best, percentage points
  double relative_variation_pct = 0.0;  // 100 * (worst - best) / best
};

// |y_pred - y_true| / y_true. Requires y_true > 0.
double relative_error(double y_true, double y_pred);

// 100 x arithmetic mean of relative-error fractions. Requires a nonempty group.
double mre(const std::vector<double>& relative_errors);
double mre(const std::vector<ErrorSample>& samples);

// Gap between a best and a worst group, both in percent MRE. Requires
// best.mre <= worst.mre.
GapStats gap_stats(const GroupStats& best, const GroupStats& worst);
GapStats gap_stats(double best_mre_pct, double worst_mre_pct);

// 100 x (mre_low - mre_high) / mre_low; positive when the high group does
// better. Requires mre_low > 0.
double relative_difference(double mre_low_pct, double mre_high_pct);

// Median of a sample (linear interpolation between middle elements).
double median(std::vector<double> values);

// Builds GroupStats from relative-error fractions, with optional signed errors
// for the signed median diagnostic.
GroupStats group_stats(const std::string& label, const std::vector<double>& relative_errors,
                       const std::vector<double>* signed_errors = nullptr);

}  // namespace biaslens
