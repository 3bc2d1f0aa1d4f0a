// Stage 2: per-factor binning, per-bin error statistics, best-vs-worst gaps
// with Mann-Whitney significance.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/dataset.hpp"
#include "biaslens/metrics.hpp"

namespace biaslens {

enum class BinStrategy { quantile, fixed, categories };

struct BinningOptions {
  BinStrategy strategy = BinStrategy::quantile;
  int quantiles = 3;
  std::vector<double> cutpoints;        // fixed strategy: interior cut-points
  std::vector<std::string> categories;  // categories strategy: order; empty = sorted distinct
};

// Resolved partition of one factor. Continuous bins are half-open [lo, hi)
// with the last bin closed; values outside the observed range clamp into the
// outer bins.
struct Binning {
  std::string factor;
  FactorKind kind = FactorKind::continuous;
  std::vector<std::string> labels;
  std::vector<double> cuts;  // interior cut-points, strictly increasing (continuous only)
  double data_min = 0.0;
  double data_max = 0.0;
  bool shrunk = false;    // quantile cut-points deduplicated; fewer bins than requested
  bool constant = false;  // single distinct value; one bin

  size_t n_bins() const { return labels.size(); }
  // Bin index for a value; nullopt only for a category absent from the binning.
  std::optional<size_t> bin_of(const FactorValue& value) const;

  nlohmann::json to_json() const;
};

// Builds a Binning from the non-missing values of one factor.
// Quantile cut-points sit at the i/q empirical quantiles (linear
// interpolation, the common statistical-package convention).
Binning bin_factor(const Dataset& dataset, const std::string& factor,
                   const BinningOptions& options);

// Strategy implied by the schema: fixed cut-points if present, categories for
// categorical factors, quantile(q) otherwise.
BinningOptions default_binning_options(const FactorSpec& spec, int quantiles);

struct StratumStats {
  GroupStats stats;  // stats.label is the bin label; mre fields are NaN when n == 0
  bool low_support = false;
};

// Per-bin stats for one model. Every bin is reported, including empty ones;
// bins with n < min_n are flagged low-support.
std::vector<StratumStats> stratified_mre(const Dataset& dataset, const Binning& binning,
                                         const std::string& model, size_t min_n = 30);

struct TestResult {
  double u = 0.0;  // U statistic for sample a
  double z = 0.0;  // normal approximation
  double p = 1.0;  // two-sided
  size_t n1 = 0;
  size_t n2 = 0;
  bool tie_corrected = false;
  // "exact" for the small-sample enumeration path, "normal" otherwise.
  std::string method;

  nlohmann::json to_json() const;
};

// Largest per-group size handled by the exact enumeration path (tie-free
// samples only); larger or tied samples use the tie-corrected normal
// approximation with 0.5 continuity correction.
inline constexpr size_t kMwuExactMaxN = 8;

TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

struct FactorGap {
  std::string factor;
  std::string model;
  StratumStats best;
  StratumStats worst;
  GapStats gap;
  TestResult test;
  std::optional<double> adjusted_p;

  nlohmann::json to_json() const;
};

// Best and worst qualifying bins (n >= min_n) by MRE, the gap between them,
// and a Mann-Whitney test on the two bins' per-record relative errors. Ties go
// to the earlier bin in binning order.
FactorGap factor_gap(const Dataset& dataset, const Binning& binning, const std::string& model,
                     size_t min_n = 30);

struct RadarAxis {
  std::string factor;
  // One entry per model, aligned with RadarData::series; nullopt when the
  // factor could not be analyzed for that model.
  std::vector<std::optional<double>> values;
  std::string reason;  // nonempty when some value is missing
};

struct RadarData {
  std::vector<std::string> series;  // model names (or other series labels)
  std::vector<RadarAxis> axes;
  std::string unit = "pp";

  nlohmann::json to_json() const;
};

// Full stage-2 result: per factor, the binning, per-model strata and gaps.
struct StratifiedAnalysis {
  struct FactorEntry {
    std::string factor;
    bool ok = false;
    std::string error;  // binning failure reason when !ok
    Binning binning;
    std::vector<std::vector<StratumStats>> strata_by_model;
    std::vector<std::optional<FactorGap>> gap_by_model;
    std::vector<std::string> gap_error_by_model;
  };

  std::vector<std::string> models;
  std::vector<FactorEntry> entries;
  size_t min_n = 30;
  bool bh_adjusted = false;

  RadarData radar() const;
  nlohmann::json to_json() const;
};

StratifiedAnalysis run_stratified(const Dataset& dataset, const std::vector<std::string>& factors,
                                  const std::vector<std::string>& models,
                                  const std::map<std::string, BinningOptions>& strategies,
                                  size_t min_n, bool bh_adjust_flag = false);

// Per-factor per-model absolute gaps, one axis per factor; factors that fail
// to bin appear with null values and a reason.
RadarData global_gap_profile(const Dataset& dataset, const std::vector<std::string>& factors,
                             const std::vector<std::string>& models,
                             const std::map<std::string, BinningOptions>& strategies,
                             size_t min_n = 30);

// Benjamini-Hochberg step-up adjustment. Returns adjusted p-values in the
// input order.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

}  // namespace biaslens
