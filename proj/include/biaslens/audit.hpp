// Orchestration: runs the selected pipeline stages over a loaded dataset and
// writes the summary, manifest, and figures into an output directory.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/dataset.hpp"
#include "biaslens/intersect.hpp"
#include "biaslens/slices.hpp"

namespace biaslens {

struct RunConfig {
  bool stage_discover = true;
  bool stage_stratify = true;
  bool stage_intersect = true;

  uint64_t seed = 0;
  std::string seed_source = "cli";  // "cli" or "entropy"

  double variance_target = 0.99;
  int pca_cap = 128;
  int k_min = 5;
  int k_max = 20;
  int restarts = 5;
  int quantiles = 3;
  size_t min_n = 30;
  std::vector<std::string> factors;  // empty: all schema factors
  std::vector<std::pair<std::string, std::string>> pairs;  // empty: all factor pairs
  std::string ranking_model;  // empty: first model
  bool bh_adjust = false;
  VerdictThresholds thresholds;
  bool stamp = false;  // record wall-clock timestamps (breaks byte determinism)

  // Echo paths, for the manifest only.
  std::string records_path;
  std::string schema_path;
  std::string embeddings_path;

  static RunConfig from_json(const nlohmann::json& j);
};

struct AuditOutcome {
  std::string audit_id;
  nlohmann::json summary;
  nlohmann::json manifest;
  std::vector<std::string> written;  // file names under out_dir, sorted
};

// Runs the selected stages and writes <audit_id>_summary.json, manifest.json,
// and the stage figures under out_dir. input_digests maps input names
// ("records", "schema", "embeddings") to sha256 hex of the file bytes.
AuditOutcome run_audit(const Dataset& dataset, const RunConfig& config,
                       const std::map<std::string, std::string>& input_digests,
                       const std::string& out_dir);

// The identifier both stage runs and full runs share: a 12-hex-digit prefix of
// the hash over input digests, analysis parameters, and the seed. Stage
// selection, paths, and the output directory do not enter the hash.
std::string compute_audit_id(const RunConfig& config,
                             const std::map<std::string, std::string>& input_digests,
                             const std::vector<std::string>& resolved_factors,
                             const std::vector<std::pair<std::string, std::string>>& resolved_pairs,
                             const std::string& resolved_ranking_model);

}  // namespace biaslens
