#include "biaslens/slices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace biaslens {

SliceResult discover_slices(const Dataset& dataset, const std::string& ranking_model,
                            const DiscoveryConfig& config) {
  if (!dataset.has_model(ranking_model)) {
    fail(ErrorCode::UnknownModel, "ranking model '" + ranking_model + "' not in dataset");
  }
  const auto embedded = dataset.embedded_indices();
  if (embedded.empty()) fail(ErrorCode::NoEmbeddings, "no record carries an embedding");

  const size_t n = embedded.size();
  const size_t d_in = dataset.records[embedded.front()].embedding->size();
  Eigen::MatrixXd X(n, d_in);
  for (size_t i = 0; i < n; ++i) {
    const auto& emb = *dataset.records[embedded[i]].embedding;
    for (size_t j = 0; j < d_in; ++j) X(i, j) = emb[j];
  }

  SliceResult result;
  result.embedded = n;
  result.skipped = dataset.records.size() - n;
  result.models = dataset.model_names;
  result.ranking_model = ranking_model;
  result.pca = fit_pca(X, config.variance_target, config.cap);
  const Eigen::MatrixXd Z = pca_transform(result.pca, X);

  // fit_gmm itself needs n >= k*(d+1) per component count; check against the
  // largest k up front so the sweep cannot end with every candidate failed.
  if (n < static_cast<size_t>(config.k_max) * (static_cast<size_t>(result.pca.d_out) + 1)) {
    fail(ErrorCode::TooFewPoints,
         "k_max " + std::to_string(config.k_max) + " over " + std::to_string(result.pca.d_out) +
             " dimensions needs >= " +
             std::to_string(config.k_max * (result.pca.d_out + 1)) + " embedded records, got " +
             std::to_string(n));
  }

  GmmOptions options;
  options.restarts = config.restarts;
  options.seed = config.seed;
  result.selection = select_k(Z, config.k_min, config.k_max, options, config.silhouette_max_points);
  const GmmModel& model = result.selection.chosen().model;
  const Assignment assignment = gmm_assign(model, Z);

  for (size_t i = 0; i < n; ++i) {
    result.labels[dataset.records[embedded[i]].id] = assignment.labels[i];
  }

  const int k = model.k;
  std::vector<std::vector<std::vector<double>>> errs(
      static_cast<size_t>(k), std::vector<std::vector<double>>(result.models.size()));
  for (size_t i = 0; i < n; ++i) {
    const Record& rec = dataset.records[embedded[i]];
    const int slice = assignment.labels[i];
    for (size_t mi = 0; mi < result.models.size(); ++mi) {
      auto pred = rec.predictions.find(result.models[mi]);
      if (pred == rec.predictions.end()) continue;
      errs[slice][mi].push_back(relative_error(rec.y_true_g, pred->second));
    }
  }
  result.slice_stats.resize(static_cast<size_t>(k));
  for (int s = 0; s < k; ++s) {
    for (size_t mi = 0; mi < result.models.size(); ++mi) {
      const auto& e = errs[s][mi];
      GroupStats stats;
      stats.label = "slice_" + std::to_string(s);
      if (!e.empty()) {
        stats = group_stats(stats.label, e);
      } else {
        stats.n = 0;
        stats.mre_pct = std::numeric_limits<double>::quiet_NaN();
      }
      result.slice_stats[s].push_back(stats);
    }
  }

  const size_t rank_idx = static_cast<size_t>(
      std::find(result.models.begin(), result.models.end(), ranking_model) - result.models.begin());
  result.order.resize(k);
  std::iota(result.order.begin(), result.order.end(), 0);
  std::stable_sort(result.order.begin(), result.order.end(), [&](int a, int b) {
    return result.slice_stats[a][rank_idx].mre_pct < result.slice_stats[b][rank_idx].mre_pct;
  });
  return result;
}

nlohmann::json SliceResult::to_json() const {
  nlohmann::json j;
  j["pca"] = pca.to_json();
  j["selection"] = selection.to_json();
  j["models"] = models;
  j["ranking_model"] = ranking_model;
  j["order"] = order;
  j["embedded"] = embedded;
  j["skipped"] = skipped;
  std::vector<size_t> slice_n(slice_stats.size(), 0);
  for (const auto& [id, slice] : labels) {
    (void)id;
    ++slice_n[static_cast<size_t>(slice)];
  }
  auto slices = nlohmann::json::array();
  for (size_t s = 0; s < slice_stats.size(); ++s) {
    nlohmann::json js;
    js["slice"] = s;
    js["n"] = slice_n[s];
    auto per_model = nlohmann::json::array();
    for (size_t mi = 0; mi < models.size(); ++mi) {
      nlohmann::json jm;
      jm["model"] = models[mi];
      jm["n"] = slice_stats[s][mi].n;
      if (std::isnan(slice_stats[s][mi].mre_pct)) {
        jm["mre_pct"] = nullptr;
      } else {
        jm["mre_pct"] = slice_stats[s][mi].mre_pct;
      }
      if (slice_stats[s][mi].median_pct) {
        jm["median_pct"] = *slice_stats[s][mi].median_pct;
      } else {
        jm["median_pct"] = nullptr;
      }
      per_model.push_back(jm);
    }
    js["by_model"] = per_model;
    slices.push_back(js);
  }
  j["slices"] = slices;
  nlohmann::json jl = nlohmann::json::object();
  for (const auto& [id, slice] : labels) jl[id] = slice;
  j["labels"] = jl;
  return j;
}

SliceProfile characterize_slice(const Dataset& dataset, const SliceResult& result, int slice_index,
                                const std::vector<Binning>& binnings) {
  if (slice_index < 0 || slice_index >= result.selection.chosen().model.k) {
    fail(ErrorCode::UnknownSlice, "slice " + std::to_string(slice_index) + " out of range");
  }
  SliceProfile profile;
  profile.slice_index = slice_index;

  for (const auto& binning : binnings) {
    if (!dataset.schema.find(binning.factor)) {
      fail(ErrorCode::UnknownFactor, "factor '" + binning.factor + "' not in schema");
    }
    SliceProfile::FactorShares shares;
    shares.factor = binning.factor;
    shares.bins = binning.labels;
    std::vector<size_t> in_slice(binning.n_bins(), 0);
    std::vector<size_t> overall(binning.n_bins(), 0);
    size_t slice_total = 0;
    size_t overall_total = 0;
    for (const auto& rec : dataset.records) {
      const auto label_it = result.labels.find(rec.id);
      if (label_it == result.labels.end()) continue;  // shares are over embedded records
      const auto fit = rec.factors.find(binning.factor);
      if (fit == rec.factors.end()) continue;
      const auto bin = binning.bin_of(fit->second);
      if (!bin) continue;
      ++overall[*bin];
      ++overall_total;
      if (label_it->second == slice_index) {
        ++in_slice[*bin];
        ++slice_total;
      }
    }
    for (size_t b = 0; b < binning.n_bins(); ++b) {
      const double share_slice =
          slice_total > 0 ? static_cast<double>(in_slice[b]) / static_cast<double>(slice_total) : 0.0;
      const double share_all =
          overall_total > 0 ? static_cast<double>(overall[b]) / static_cast<double>(overall_total)
                            : 0.0;
      shares.share_in_slice.push_back(share_slice);
      shares.share_overall.push_back(share_all);
      if (share_all > 0.0) {
        shares.enrichment.push_back(share_slice / share_all);
        shares.enrichment_undefined.push_back(false);
      } else {
        shares.enrichment.push_back(0.0);
        shares.enrichment_undefined.push_back(true);
      }
    }
    profile.factors.push_back(std::move(shares));
  }
  return profile;
}

nlohmann::json SliceProfile::to_json() const {
  nlohmann::json j;
  j["slice"] = slice_index;
  auto arr = nlohmann::json::array();
  for (const auto& f : factors) {
    nlohmann::json jf;
    jf["factor"] = f.factor;
    jf["bins"] = f.bins;
    jf["share_in_slice"] = f.share_in_slice;
    jf["share_overall"] = f.share_overall;
    jf["enrichment"] = f.enrichment;
    jf["enrichment_undefined"] = f.enrichment_undefined;
    arr.push_back(jf);
  }
  j["factors"] = arr;
  return j;
}

std::vector<SliceDivergence> compare_slices(const SliceProfile& best, const SliceProfile& worst) {
  if (best.factors.size() != worst.factors.size()) {
    fail(ErrorCode::BinningMismatch, "profiles cover different factor sets");
  }
  std::vector<SliceDivergence> out;
  for (size_t fi = 0; fi < best.factors.size(); ++fi) {
    const auto& a = best.factors[fi];
    const auto& b = worst.factors[fi];
    if (a.factor != b.factor || a.bins != b.bins) {
      fail(ErrorCode::BinningMismatch, "profiles disagree on factor '" + a.factor + "'");
    }
    SliceDivergence d;
    d.factor = a.factor;
    for (size_t bi = 0; bi < a.bins.size(); ++bi) {
      d.total_variation += std::abs(a.share_in_slice[bi] - b.share_in_slice[bi]);
      const double contrast = std::abs(a.enrichment[bi] - b.enrichment[bi]);
      if (contrast > d.max_contrast) {
        d.max_contrast = contrast;
        d.max_contrast_bin = a.bins[bi];
      }
    }
    d.total_variation *= 0.5;
    if (d.max_contrast_bin.empty() && !a.bins.empty()) d.max_contrast_bin = a.bins.front();
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const SliceDivergence& x, const SliceDivergence& y) {
    return x.total_variation > y.total_variation;
  });
  return out;
}

nlohmann::json SliceDivergence::to_json() const {
  nlohmann::json j;
  j["factor"] = factor;
  j["total_variation"] = total_variation;
  j["max_contrast_bin"] = max_contrast_bin;
  j["max_contrast"] = max_contrast;
  return j;
}

}  // namespace biaslens
