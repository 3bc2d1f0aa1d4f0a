#include "biaslens/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace biaslens {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<double> numeric_values(const Dataset& dataset, const std::string& factor) {
  std::vector<double> values;
  values.reserve(dataset.records.size());
  for (const auto& rec : dataset.records) {
    auto it = rec.factors.find(factor);
    if (it == rec.factors.end()) continue;
    if (const double* v = std::get_if<double>(&it->second)) values.push_back(*v);
  }
  return values;
}

// Empirical quantile with linear interpolation between order statistics.
double quantile_at(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string interval_label(const std::vector<double>& cuts, size_t bin) {
  if (cuts.empty()) return "all";
  if (bin == 0) return "<" + format_double(cuts.front());
  if (bin == cuts.size()) return ">=" + format_double(cuts.back());
  return "[" + format_double(cuts[bin - 1]) + "," + format_double(cuts[bin]) + ")";
}

double phi_tail(double z) {  // P(Z > z) for standard normal
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Number of rank assignments with U statistic equal to u, for group sizes
// n1, n2 without ties. f(n1, n2, u) = f(n1-1, n2, u-n2) + f(n1, n2-1, u).
double exact_u_count(size_t n1, size_t n2, long u, std::map<std::tuple<size_t, size_t, long>, double>& memo) {
  if (u < 0) return 0.0;
  if (n1 == 0 || n2 == 0) return u == 0 ? 1.0 : 0.0;
  const auto key = std::make_tuple(n1, n2, u);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  const double value = exact_u_count(n1 - 1, n2, u - static_cast<long>(n2), memo) +
                       exact_u_count(n1, n2 - 1, u, memo);
  memo[key] = value;
  return value;
}

double exact_two_sided_p(size_t n1, size_t n2, double u_a) {
  std::map<std::tuple<size_t, size_t, long>, double> memo;
  const long max_u = static_cast<long>(n1 * n2);
  const long u = static_cast<long>(std::llround(u_a));
  const long u_min = std::min(u, max_u - u);
  double tail = 0.0;
  double total = 0.0;
  for (long v = 0; v <= max_u; ++v) {
    const double c = exact_u_count(n1, n2, v, memo);
    total += c;
    if (v <= u_min) tail += c;
  }
  return std::min(1.0, 2.0 * tail / total);
}

std::vector<double> relative_errors_in_bin(const Dataset& dataset, const Binning& binning,
                                           size_t bin, const std::string& model) {
  std::vector<double> errs;
  for (const auto& rec : dataset.records) {
    auto it = rec.factors.find(binning.factor);
    if (it == rec.factors.end()) continue;
    auto pred = rec.predictions.find(model);
    if (pred == rec.predictions.end()) continue;
    const auto idx = binning.bin_of(it->second);
    if (!idx || *idx != bin) continue;
    errs.push_back(relative_error(rec.y_true_g, pred->second));
  }
  return errs;
}

}  // namespace

std::optional<size_t> Binning::bin_of(const FactorValue& value) const {
  if (kind == FactorKind::categorical) {
    const std::string* s = std::get_if<std::string>(&value);
    if (!s) return std::nullopt;
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == *s) return i;
    }
    return std::nullopt;
  }
  const double* v = std::get_if<double>(&value);
  if (!v) return std::nullopt;
  const auto it = std::upper_bound(cuts.begin(), cuts.end(), *v);
  return static_cast<size_t>(it - cuts.begin());
}

nlohmann::json Binning::to_json() const {
  nlohmann::json j;
  j["factor"] = factor;
  j["kind"] = to_string(kind);
  j["labels"] = labels;
  if (kind == FactorKind::continuous) {
    j["cuts"] = cuts;
    j["data_min"] = data_min;
    j["data_max"] = data_max;
  }
  j["shrunk"] = shrunk;
  j["constant"] = constant;
  return j;
}

BinningOptions default_binning_options(const FactorSpec& spec, int quantiles) {
  BinningOptions opts;
  if (spec.kind == FactorKind::categorical) {
    opts.strategy = BinStrategy::categories;
    opts.categories = spec.categories;
  } else if (!spec.cutpoints.empty()) {
    opts.strategy = BinStrategy::fixed;
    opts.cutpoints = spec.cutpoints;
  } else {
    opts.strategy = BinStrategy::quantile;
    opts.quantiles = quantiles;
  }
  return opts;
}

Binning bin_factor(const Dataset& dataset, const std::string& factor,
                   const BinningOptions& options) {
  const FactorSpec& spec = dataset.schema.require(factor);
  Binning binning;
  binning.factor = factor;
  binning.kind = spec.kind;

  if (options.strategy == BinStrategy::categories) {
    if (spec.kind != FactorKind::categorical) {
      fail(ErrorCode::InvalidConfig, "categories strategy on continuous factor '" + factor + "'");
    }
    std::set<std::string> seen;
    for (const auto& rec : dataset.records) {
      auto it = rec.factors.find(factor);
      if (it == rec.factors.end()) continue;
      if (const std::string* s = std::get_if<std::string>(&it->second)) seen.insert(*s);
    }
    if (seen.empty()) fail(ErrorCode::TooFewValues, "factor '" + factor + "' has no non-missing values");
    if (!options.categories.empty()) {
      binning.labels = options.categories;
      for (const auto& s : seen) {
        if (std::find(binning.labels.begin(), binning.labels.end(), s) == binning.labels.end()) {
          binning.labels.push_back(s);  // observed but not in the declared order
        }
      }
    } else {
      binning.labels.assign(seen.begin(), seen.end());
    }
    binning.constant = seen.size() == 1;
    return binning;
  }

  if (spec.kind != FactorKind::continuous) {
    fail(ErrorCode::InvalidConfig, "numeric strategy on categorical factor '" + factor + "'");
  }
  std::vector<double> values = numeric_values(dataset, factor);
  if (values.empty()) fail(ErrorCode::TooFewValues, "factor '" + factor + "' has no non-missing values");
  std::sort(values.begin(), values.end());
  binning.data_min = values.front();
  binning.data_max = values.back();

  if (options.strategy == BinStrategy::fixed) {
    if (options.cutpoints.empty()) fail(ErrorCode::InvalidConfig, "fixed strategy needs cutpoints");
    for (size_t i = 1; i < options.cutpoints.size(); ++i) {
      if (options.cutpoints[i] <= options.cutpoints[i - 1]) {
        fail(ErrorCode::InvalidConfig, "cutpoints must be strictly increasing");
      }
    }
    binning.cuts = options.cutpoints;
  } else {
    const int q = options.quantiles;
    if (q < 1) fail(ErrorCode::InvalidConfig, "quantile count must be >= 1");
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() == 1) {
      binning.constant = true;
      binning.labels = {"q1"};
      return binning;
    }
    if (distinct.size() < static_cast<size_t>(q)) binning.shrunk = true;
    for (int i = 1; i < q; ++i) {
      binning.cuts.push_back(quantile_at(values, static_cast<double>(i) / q));
    }
    binning.cuts.erase(std::unique(binning.cuts.begin(), binning.cuts.end()), binning.cuts.end());
    if (binning.cuts.size() + 1 < static_cast<size_t>(q)) binning.shrunk = true;
    // A cut equal to the minimum would leave an empty first bin.
    while (!binning.cuts.empty() && binning.cuts.front() <= binning.data_min) {
      binning.cuts.erase(binning.cuts.begin());
      binning.shrunk = true;
    }
  }

  const size_t n_bins = binning.cuts.size() + 1;
  for (size_t i = 0; i < n_bins; ++i) {
    if (options.strategy == BinStrategy::quantile) {
      binning.labels.push_back("q" + std::to_string(i + 1));
    } else {
      binning.labels.push_back(interval_label(binning.cuts, i));
    }
  }
  return binning;
}

std::vector<StratumStats> stratified_mre(const Dataset& dataset, const Binning& binning,
                                         const std::string& model, size_t min_n) {
  if (!dataset.has_model(model)) fail(ErrorCode::UnknownModel, "model '" + model + "' not in dataset");
  std::vector<std::vector<double>> errs(binning.n_bins());
  std::vector<std::vector<double>> signed_errs(binning.n_bins());
  for (const auto& rec : dataset.records) {
    auto it = rec.factors.find(binning.factor);
    if (it == rec.factors.end()) continue;
    auto pred = rec.predictions.find(model);
    if (pred == rec.predictions.end()) continue;
    const auto idx = binning.bin_of(it->second);
    if (!idx) continue;
    errs[*idx].push_back(relative_error(rec.y_true_g, pred->second));
    signed_errs[*idx].push_back((pred->second - rec.y_true_g) / rec.y_true_g);
  }
  std::vector<StratumStats> out(binning.n_bins());
  for (size_t i = 0; i < binning.n_bins(); ++i) {
    StratumStats& s = out[i];
    if (errs[i].empty()) {
      s.stats.label = binning.labels[i];
      s.stats.n = 0;
      s.stats.mre_pct = kNan;
    } else {
      s.stats = group_stats(binning.labels[i], errs[i], &signed_errs[i]);
    }
    s.low_support = s.stats.n < min_n;
  }
  return out;
}

TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) fail(ErrorCode::EmptySample, "both samples must be nonempty");
  const size_t n1 = a.size();
  const size_t n2 = b.size();
  const size_t n = n1 + n2;

  struct Tagged {
    double value;
    bool from_a;
  };
  std::vector<Tagged> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.push_back({v, true});
  for (double v : b) pooled.push_back({v, false});
  std::sort(pooled.begin(), pooled.end(),
            [](const Tagged& x, const Tagged& y) { return x.value < y.value; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  bool has_ties = false;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && pooled[j].value == pooled[i].value) ++j;
    const size_t t = j - i;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t m = i; m < j; ++m) {
      if (pooled[m].from_a) rank_sum_a += midrank;
    }
    if (t > 1) {
      has_ties = true;
      tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
    }
    i = j;
  }

  TestResult result;
  result.n1 = n1;
  result.n2 = n2;
  result.tie_corrected = has_ties;
  result.u = rank_sum_a - static_cast<double>(n1) * (n1 + 1) / 2.0;

  const double mean_u = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double nn = static_cast<double>(n);
  double variance = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                    ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (variance <= 0.0) {  // every pooled value identical
    result.z = 0.0;
    result.p = 1.0;
    result.method = "normal";
    return result;
  }
  const double sd = std::sqrt(variance);
  double centered = result.u - mean_u;
  // Continuity correction of 0.5 toward the mean.
  if (centered > 0.5) {
    centered -= 0.5;
  } else if (centered < -0.5) {
    centered += 0.5;
  } else {
    centered = 0.0;
  }
  result.z = centered / sd;
  result.p = std::min(1.0, 2.0 * phi_tail(std::abs(result.z)));
  result.method = "normal";

  if (!has_ties && std::max(n1, n2) <= kMwuExactMaxN) {
    result.p = exact_two_sided_p(n1, n2, result.u);
    result.method = "exact";
  }
  return result;
}

nlohmann::json TestResult::to_json() const {
  nlohmann::json j;
  j["u"] = u;
  j["z"] = z;
  j["p"] = p;
  j["n1"] = n1;
  j["n2"] = n2;
  j["tie_corrected"] = tie_corrected;
  j["method"] = method;
  return j;
}

FactorGap factor_gap(const Dataset& dataset, const Binning& binning, const std::string& model,
                     size_t min_n) {
  const auto strata = stratified_mre(dataset, binning, model, min_n);
  std::vector<size_t> qualifying;
  for (size_t i = 0; i < strata.size(); ++i) {
    if (strata[i].stats.n >= min_n) qualifying.push_back(i);
  }
  if (qualifying.size() < 2) {
    fail(ErrorCode::InsufficientSupport,
         "factor '" + binning.factor + "': " + std::to_string(qualifying.size()) +
             " bin(s) with n >= " + std::to_string(min_n) + ", need 2");
  }
  size_t best = qualifying.front();
  for (size_t idx : qualifying) {
    if (strata[idx].stats.mre_pct < strata[best].stats.mre_pct) best = idx;
  }
  size_t worst = qualifying.front() == best ? qualifying[1] : qualifying.front();
  for (size_t idx : qualifying) {
    if (idx == best) continue;
    if (strata[idx].stats.mre_pct > strata[worst].stats.mre_pct) worst = idx;
  }

  FactorGap gap;
  gap.factor = binning.factor;
  gap.model = model;
  gap.best = strata[best];
  gap.worst = strata[worst];
  gap.gap = gap_stats(strata[best].stats, strata[worst].stats);
  gap.test = mann_whitney_u(relative_errors_in_bin(dataset, binning, best, model),
                            relative_errors_in_bin(dataset, binning, worst, model));
  return gap;
}

nlohmann::json FactorGap::to_json() const {
  auto stratum_json = [](const StratumStats& s) {
    nlohmann::json j;
    j["bin"] = s.stats.label;
    j["n"] = s.stats.n;
    j["mre_pct"] = s.stats.mre_pct;
    j["low_support"] = s.low_support;
    return j;
  };
  nlohmann::json j;
  j["factor"] = factor;
  j["model"] = model;
  j["best"] = stratum_json(best);
  j["worst"] = stratum_json(worst);
  j["absolute_gap_pp"] = gap.absolute_gap_pp;
  j["relative_variation_pct"] = gap.relative_variation_pct;
  j["test"] = test.to_json();
  if (adjusted_p) {
    j["adjusted_p"] = *adjusted_p;
  } else {
    j["adjusted_p"] = nullptr;
  }
  return j;
}

nlohmann::json RadarData::to_json() const {
  nlohmann::json j;
  j["series"] = series;
  j["unit"] = unit;
  auto arr = nlohmann::json::array();
  for (const auto& axis : axes) {
    nlohmann::json ja;
    ja["factor"] = axis.factor;
    auto vals = nlohmann::json::array();
    for (const auto& v : axis.values) {
      if (v) {
        vals.push_back(*v);
      } else {
        vals.push_back(nullptr);
      }
    }
    ja["values"] = vals;
    ja["reason"] = axis.reason;
    arr.push_back(ja);
  }
  j["axes"] = arr;
  return j;
}

StratifiedAnalysis run_stratified(const Dataset& dataset, const std::vector<std::string>& factors,
                                  const std::vector<std::string>& models,
                                  const std::map<std::string, BinningOptions>& strategies,
                                  size_t min_n, bool bh_adjust_flag) {
  StratifiedAnalysis analysis;
  analysis.models = models;
  analysis.min_n = min_n;
  analysis.entries.resize(factors.size());
  parallel_for(factors.size(), [&](size_t fi) {
    auto& entry = analysis.entries[fi];
    entry.factor = factors[fi];
    try {
      const FactorSpec& spec = dataset.schema.require(entry.factor);
      auto it = strategies.find(entry.factor);
      const BinningOptions opts =
          it != strategies.end() ? it->second : default_binning_options(spec, 3);
      entry.binning = bin_factor(dataset, entry.factor, opts);
      entry.ok = true;
    } catch (const Error& e) {
      entry.error = e.what();
      return;
    }
    for (const auto& model : models) {
      entry.strata_by_model.push_back(stratified_mre(dataset, entry.binning, model, min_n));
      try {
        entry.gap_by_model.emplace_back(factor_gap(dataset, entry.binning, model, min_n));
        entry.gap_error_by_model.emplace_back();
      } catch (const Error& e) {
        entry.gap_by_model.emplace_back(std::nullopt);
        entry.gap_error_by_model.emplace_back(e.what());
      }
    }
  });

  if (bh_adjust_flag) {
    analysis.bh_adjusted = true;
    std::vector<double> raw;
    for (const auto& entry : analysis.entries) {
      for (const auto& gap : entry.gap_by_model) {
        if (gap) raw.push_back(gap->test.p);
      }
    }
    if (!raw.empty()) {
      const auto adjusted = bh_adjust(raw);
      size_t pos = 0;
      for (auto& entry : analysis.entries) {
        for (auto& gap : entry.gap_by_model) {
          if (gap) gap->adjusted_p = adjusted[pos++];
        }
      }
    }
  }
  return analysis;
}

RadarData StratifiedAnalysis::radar() const {
  RadarData data;
  data.series = models;
  for (const auto& entry : entries) {
    RadarAxis axis;
    axis.factor = entry.factor;
    if (!entry.ok) {
      axis.values.assign(models.size(), std::nullopt);
      axis.reason = entry.error;
    } else {
      for (size_t mi = 0; mi < models.size(); ++mi) {
        if (entry.gap_by_model[mi]) {
          axis.values.push_back(entry.gap_by_model[mi]->gap.absolute_gap_pp);
        } else {
          axis.values.push_back(std::nullopt);
          axis.reason = entry.gap_error_by_model[mi];
        }
      }
    }
    data.axes.push_back(std::move(axis));
  }
  return data;
}

nlohmann::json StratifiedAnalysis::to_json() const {
  nlohmann::json j;
  j["models"] = models;
  j["min_n"] = min_n;
  j["bh_adjusted"] = bh_adjusted;
  auto arr = nlohmann::json::array();
  for (const auto& entry : entries) {
    nlohmann::json je;
    je["factor"] = entry.factor;
    je["ok"] = entry.ok;
    if (!entry.ok) {
      je["error"] = entry.error;
      arr.push_back(je);
      continue;
    }
    je["binning"] = entry.binning.to_json();
    auto strata = nlohmann::json::array();
    for (size_t mi = 0; mi < models.size(); ++mi) {
      nlohmann::json jm;
      jm["model"] = models[mi];
      auto bins = nlohmann::json::array();
      for (const auto& s : entry.strata_by_model[mi]) {
        nlohmann::json jb;
        jb["bin"] = s.stats.label;
        jb["n"] = s.stats.n;
        if (std::isnan(s.stats.mre_pct)) {
          jb["mre_pct"] = nullptr;
        } else {
          jb["mre_pct"] = s.stats.mre_pct;
        }
        if (s.stats.median_pct) {
          jb["median_pct"] = *s.stats.median_pct;
        } else {
          jb["median_pct"] = nullptr;
        }
        jb["low_support"] = s.low_support;
        bins.push_back(jb);
      }
      jm["bins"] = bins;
      if (entry.gap_by_model[mi]) {
        jm["gap"] = entry.gap_by_model[mi]->to_json();
      } else {
        jm["gap"] = nullptr;
        jm["gap_error"] = entry.gap_error_by_model[mi];
      }
      strata.push_back(jm);
    }
    je["by_model"] = strata;
    arr.push_back(je);
  }
  j["factors"] = arr;
  j["radar"] = radar().to_json();
  return j;
}

RadarData global_gap_profile(const Dataset& dataset, const std::vector<std::string>& factors,
                             const std::vector<std::string>& models,
                             const std::map<std::string, BinningOptions>& strategies,
                             size_t min_n) {
  return run_stratified(dataset, factors, models, strategies, min_n).radar();
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
  const size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running_min = 1.0;
  for (size_t pos = m; pos-- > 0;) {
    const double candidate =
        p_values[order[pos]] * static_cast<double>(m) / static_cast<double>(pos + 1);
    running_min = std::min(running_min, candidate);
    adjusted[order[pos]] = running_min;
  }
  return adjusted;
}

}  // namespace biaslens
