// Stage 1: PCA on embeddings, GMM sweep, MRE ranking of slices, and
// enrichment characterization of best vs worst slices.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/gmm.hpp"
#include "biaslens/pca.hpp"
#include "biaslens/stratify.hpp"

namespace biaslens {

struct DiscoveryConfig {
  double variance_target = 0.99;
  int cap = 128;
  int k_min = 5;
  int k_max = 20;
  int restarts = 5;
  uint64_t seed = 0;
  size_t silhouette_max_points = 10000;
};

struct SliceResult {
  PcaModel pca;
  SelectionResult selection;
  // Record id -> slice index, for every embedded record.
  std::map<std::string, int> labels;
  // Per slice (component index), per model: stats over the slice's records.
  std::vector<std::vector<GroupStats>> slice_stats;  // [slice][model]
  std::vector<std::string> models;
  std::string ranking_model;
  // Slice indices sorted by ascending MRE of the ranking model (ties to the
  // lower index).
  std::vector<int> order;
  size_t embedded = 0;
  size_t skipped = 0;  // records without embeddings

  int best_slice() const { return order.front(); }
  int worst_slice() const { return order.back(); }
  nlohmann::json to_json() const;
};

SliceResult discover_slices(const Dataset& dataset, const std::string& ranking_model,
                            const DiscoveryConfig& config);

struct SliceProfile {
  int slice_index = -1;
  struct FactorShares {
    std::string factor;
    std::vector<std::string> bins;
    std::vector<double> share_in_slice;
    std::vector<double> share_overall;
    std::vector<double> enrichment;  // share_in_slice / share_overall; 0 when overall is 0
    std::vector<bool> enrichment_undefined;  // overall share 0 (external binnings only)
  };
  std::vector<FactorShares> factors;

  nlohmann::json to_json() const;
};

// Bin-share distribution of one slice against the whole embedded population,
// per factor, with enrichment ratios.
SliceProfile characterize_slice(const Dataset& dataset, const SliceResult& result, int slice_index,
                                const std::vector<Binning>& binnings);

struct SliceDivergence {
  std::string factor;
  double total_variation = 0.0;  // half the L1 distance between bin shares
  std::string max_contrast_bin;  // bin with the largest enrichment contrast
  double max_contrast = 0.0;

  nlohmann::json to_json() const;
};

// Per-factor divergence between two slice profiles, sorted descending by
// total variation (stable in factor order on ties).
std::vector<SliceDivergence> compare_slices(const SliceProfile& best, const SliceProfile& worst);

}  // namespace biaslens
