// Stage 3: two-factor joint partitions, within-stratum gradients, and the
// confounding-vs-independent-effect verdict.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/stratify.hpp"

namespace biaslens {

struct JointCell {
  size_t n = 0;
  std::vector<double> mre_pct;  // aligned with JointGrid::models; NaN when n == 0
  bool low_support = false;     // n < min_n
};

// Joint partition over (row factor, column factor). Only records with both
// factors non-missing and a prediction from every listed model are counted,
// so each model's per-cell MRE covers the identical record set.
struct JointGrid {
  Binning row_binning;
  Binning col_binning;
  std::vector<std::string> models;
  std::vector<std::vector<JointCell>> cells;  // [row][col]
  size_t min_n = 30;
  size_t n_total = 0;

  size_t n_rows() const { return row_binning.n_bins(); }
  size_t n_cols() const { return col_binning.n_bins(); }
  nlohmann::json to_json() const;
};

JointGrid joint_partition(const Dataset& dataset, const Binning& row_binning,
                          const Binning& col_binning, const std::vector<std::string>& models,
                          size_t min_n = 30);

// Column-collapsed MRE per column bin (count-weighted over rows), for one
// model. Entries with zero support are NaN.
std::vector<double> collapse_columns(const JointGrid& grid, const std::string& model);

struct StratumGradient {
  std::string stratum;  // row bin label
  // relative_difference(low-cell MRE, high-cell MRE); absent when either
  // endpoint cell is below min_n (or its MRE is nonpositive).
  std::optional<double> gradient_pct;
  bool low_support = false;
  size_t n_low = 0;
  size_t n_high = 0;
  double mre_low_pct = 0.0;
  double mre_high_pct = 0.0;
};

struct GradientSummary {
  std::string row_factor;
  std::string col_factor;
  std::string model;
  std::string low_bin;
  std::string high_bin;
  std::vector<StratumGradient> strata;
  // Marginal relative difference of the column factor alone (rows collapsed),
  // same record set as the grid. NaN if either marginal endpoint is empty or
  // the low endpoint MRE is nonpositive.
  double marginal_pct = 0.0;
  double mean_within_pct = 0.0;  // mean over strata with a gradient value; NaN if none
  // 1 - mean_within / marginal; absent when the marginal is zero or NaN.
  std::optional<double> attenuation;

  nlohmann::json to_json() const;
};

// Per-row-stratum relative differences between the low and high column bins.
// low_bin and high_bin must be column bin labels; they default to the extreme
// bins in the verdict pipeline.
GradientSummary within_stratum_gradients(const JointGrid& grid, const std::string& model,
                                         const std::string& low_bin, const std::string& high_bin);

enum class Verdict { independent_effect, partially_confounded, fully_confounded, inconclusive };

const char* to_string(Verdict verdict);

struct VerdictThresholds {
  double persist_pp = 3.0;   // |gradient| above this counts as persisting
  double attenuate = 0.5;    // attenuation at or above this counts as confounded
};

struct VerdictResult {
  Verdict verdict = Verdict::inconclusive;
  VerdictThresholds thresholds;
  std::string rationale;
  struct EvidenceRow {
    std::string stratum;
    std::optional<double> gradient_pct;
    bool low_support = false;
    bool within_persist = false;
    bool shares_marginal_sign = false;
  };
  std::vector<EvidenceRow> evidence;

  nlohmann::json to_json() const;
};

// Threshold rule on a GradientSummary:
//   fully-confounded      every gradient within persist_pp of zero
//   independent-effect    every gradient shares the marginal's sign and
//                         attenuation < attenuate
//   partially-confounded  attenuation >= attenuate and some gradient exceeds
//                         persist_pp
//   inconclusive          anything else, or low-support strata in the majority
// Requires >= 2 strata with gradient values.
VerdictResult confounding_verdict(const GradientSummary& summary,
                                  const VerdictThresholds& thresholds = {});

}  // namespace biaslens
