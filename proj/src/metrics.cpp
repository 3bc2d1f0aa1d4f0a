#include "biaslens/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace biaslens {

double relative_error(double y_true, double y_pred) {
  if (!(y_true > 0)) {
    fail(ErrorCode::NonPositiveTruth, "y_true must be > 0 (got " + format_double(y_true) + ")");
  }
  return std::abs(y_pred - y_true) / y_true;
}

double mre(const std::vector<double>& relative_errors) {
  if (relative_errors.empty()) fail(ErrorCode::EmptyGroup, "MRE of an empty group");
  double sum = 0.0;
  for (double e : relative_errors) sum += e;
  return 100.0 * sum / static_cast<double>(relative_errors.size());
}

double mre(const std::vector<ErrorSample>& samples) {
  if (samples.empty()) fail(ErrorCode::EmptyGroup, "MRE of an empty group");
  double sum = 0.0;
  for (const auto& s : samples) sum += s.relative_error;
  return 100.0 * sum / static_cast<double>(samples.size());
}

GapStats gap_stats(double best_mre_pct, double worst_mre_pct) {
  if (best_mre_pct > worst_mre_pct) {
    fail(ErrorCode::OrderViolation, "best MRE " + format_double(best_mre_pct) +
                                        " exceeds worst MRE " + format_double(worst_mre_pct));
  }
  GapStats g;
  g.absolute_gap_pp = worst_mre_pct - best_mre_pct;
  g.relative_variation_pct = best_mre_pct == worst_mre_pct
                                 ? 0.0
                                 : 100.0 * (worst_mre_pct - best_mre_pct) / best_mre_pct;
  return g;
}

GapStats gap_stats(const GroupStats& best, const GroupStats& worst) {
  return gap_stats(best.mre_pct, worst.mre_pct);
}

double relative_difference(double mre_low_pct, double mre_high_pct) {
  if (!(mre_low_pct > 0)) {
    fail(ErrorCode::NonPositiveBaseline,
         "low-bin MRE must be > 0 (got " + format_double(mre_low_pct) + ")");
  }
  return 100.0 * (mre_low_pct - mre_high_pct) / mre_low_pct;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::EmptyGroup, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

GroupStats group_stats(const std::string& label, const std::vector<double>& relative_errors,
                       const std::vector<double>* signed_errors) {
  GroupStats g;
  g.label = label;
  g.n = relative_errors.size();
  g.mre_pct = mre(relative_errors);
  g.median_pct = 100.0 * median(relative_errors);
  if (signed_errors && !signed_errors->empty()) {
    g.median_signed_pct = 100.0 * median(*signed_errors);
  }
  return g;
}

}  // namespace biaslens
