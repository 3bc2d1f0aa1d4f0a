// Synthetic dataset generator with planted effect and confounding structure,
// plus recovery scoring against the planted ground truth.
//
// Draw order, version 1 (frozen; bump draw_order_version for any change).
// One Rng seeded with config.seed; records in index order; per record:
//   1. factors in config order:
//        uniform      1 uniform01
//        normal       1 normal (2 uniform01)
//        categorical  1 uniform01
//        constant     0 draws
//        remap        0 draws (deterministic function of its source factor)
//   2. plane block (if configured): names.size()-1 normals; the last plane's
//      jitter is the negative sum, so the planes average exactly to the base
//   3. y_true noise: 1 normal
//   4. per model in config order: 1 normal (log-error), then 1 uniform01 (sign)
//   5. embedding (if configured): dim normals
// Every step draws unconditionally, so parameter values (including zero noise
// scales) never shift the stream.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/dataset.hpp"
#include "biaslens/intersect.hpp"
#include "biaslens/slices.hpp"
#include "biaslens/stratify.hpp"

namespace biaslens {

struct FactorDef {
  std::string name;
  FactorKind kind = FactorKind::continuous;
  // "uniform" (a..b), "normal" (mean a, sd b), "categorical", "constant"
  // (value a), or "remap" (deterministic piecewise map of a source factor).
  std::string dist = "uniform";
  double a = 0.0;
  double b = 0.0;
  std::vector<std::string> categories;
  std::vector<double> weights;  // categorical; defaults to uniform

  // Linear mean shifts for "normal": mean += coef * (source - center).
  struct Shift {
    std::string source;
    double coef = 0.0;
    double center = 0.0;
  };
  std::vector<Shift> shifts;

  // remap: the source value's stratum (by strata_edges) picks a row of
  // level_weights; the position within the stratum picks a level by
  // cumulative weight and then maps affinely into the level's range. The
  // result is an exact deterministic function of the source.
  std::string source;
  std::vector<double> strata_edges;             // interior edges on the source
  std::vector<std::array<double, 2>> levels;    // target ranges
  std::vector<std::vector<double>> level_weights;  // [source stratum][level]
  double source_min = 0.0;  // source support, for the position computation
  double source_max = 0.0;

  std::vector<double> cutpoints;  // emitted into the schema
  std::string unit;
};

struct ErrorEffect {
  std::string factor;
  std::vector<double> edges;        // interior edges on the factor value
  std::vector<double> multipliers;  // one per bin (edges.size() + 1)
};

struct ModelDef {
  std::string name;
  double base_error = 0.07;   // expected relative error, fraction
  double noise_scale = 0.15;  // sigma of the mean-one lognormal error noise
  std::vector<ErrorEffect> effects;
};

struct PlaneDef {
  std::string base;                // factor the planes scatter around
  std::vector<std::string> names;  // emitted plane factor names
  double jitter_sd = 0.03;
};

struct EmbeddingDef {
  int dim = 8;
  std::string keyed_by;       // factor whose bins pick the cluster
  std::vector<double> edges;  // interior edges on that factor
  double separation = 6.0;    // per-cluster axis offset
  double spread = 1.0;        // within-cluster sd
};

struct SynthConfig {
  size_t n = 0;
  uint64_t seed = 0;
  int draw_order_version = 1;
  std::string scenario;  // annotation only
  std::vector<FactorDef> factors;
  std::optional<PlaneDef> planes;
  std::string ga_factor = "ga_weeks";  // drives y_true via the growth curve
  double y_noise_scale = 0.05;         // sigma of the mean-one lognormal on y_true
  std::vector<ModelDef> models;
  std::optional<EmbeddingDef> embedding;

  // Recovery annotations: which factors carry planted effects, the expected
  // verdict for the planted pair, and the pair itself (row, column).
  std::vector<std::string> planted_factors;
  std::string expected_verdict;
  std::string verdict_row;
  std::string verdict_col;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct GroundTruth {
  std::vector<std::string> ids;
  // Per planted factor: the per-record effect-bin index.
  std::map<std::string, std::vector<int>> factor_bins;
  std::vector<int> embedding_cluster;  // -1 when no embedding block
  // Per model: realized relative error magnitude (fraction, post-clamp).
  std::map<std::string, std::vector<double>> realized_error;
  nlohmann::json planted;  // effect sizes, expected verdict, scenario echo

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

struct SynthResult {
  Dataset dataset;
  GroundTruth truth;
};

SynthResult generate(const SynthConfig& config);

// Built-in scenarios:
//   "independent"  planted low-PS error effect, no PS link to BMI or GA
//   "confounded"   error depends only on GA; PS is a deterministic function
//                  of GA (skewed level mixing keeps all joint cells occupied)
SynthConfig scenario_independent(size_t n, uint64_t seed);
SynthConfig scenario_confounded(size_t n, uint64_t seed);
SynthConfig scenario_by_name(const std::string& name, size_t n, uint64_t seed);

// Adjusted Rand index between two labelings of the same records.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct RecoveryReport {
  std::optional<double> ari;
  std::optional<bool> planted_factors_flagged;  // planted factors lead the gap ranking, p < 0.001
  std::vector<std::string> planted_factors;
  std::optional<bool> verdict_matches;
  std::string expected_verdict;
  std::string observed_verdict;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

// Scores pipeline outputs against the planted truth. Any of the analysis
// inputs may be null; the corresponding check is skipped.
RecoveryReport score_recovery(const GroundTruth& truth, const SliceResult* slices,
                              const StratifiedAnalysis* stratified,
                              const VerdictResult* verdict);

// The same checks driven by an audit summary document. Null or missing
// summary sections skip the corresponding check; the verdict check uses the
// planted pair and requires every model to agree with the expectation.
RecoveryReport score_recovery_summary(const GroundTruth& truth, const nlohmann::json& summary);

}  // namespace biaslens
