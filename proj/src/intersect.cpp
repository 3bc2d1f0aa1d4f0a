#include "biaslens/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace biaslens {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

size_t find_col(const JointGrid& grid, const std::string& bin) {
  const auto& labels = grid.col_binning.labels;
  const auto it = std::find(labels.begin(), labels.end(), bin);
  if (it == labels.end()) {
    fail(ErrorCode::UnknownBin, "'" + bin + "' is not a column bin of factor '" +
                                    grid.col_binning.factor + "'");
  }
  return static_cast<size_t>(it - labels.begin());
}

size_t model_index(const JointGrid& grid, const std::string& model) {
  const auto it = std::find(grid.models.begin(), grid.models.end(), model);
  if (it == grid.models.end()) fail(ErrorCode::UnknownModel, "model '" + model + "' not in grid");
  return static_cast<size_t>(it - grid.models.begin());
}

}  // namespace

JointGrid joint_partition(const Dataset& dataset, const Binning& row_binning,
                          const Binning& col_binning, const std::vector<std::string>& models,
                          size_t min_n) {
  if (models.empty()) fail(ErrorCode::InvalidConfig, "joint partition needs >= 1 model");
  for (const auto& m : models) {
    if (!dataset.has_model(m)) fail(ErrorCode::UnknownModel, "model '" + m + "' not in dataset");
  }
  JointGrid grid;
  grid.row_binning = row_binning;
  grid.col_binning = col_binning;
  grid.models = models;
  grid.min_n = min_n;
  const size_t rows = row_binning.n_bins();
  const size_t cols = col_binning.n_bins();
  grid.cells.assign(rows, std::vector<JointCell>(cols));

  std::vector<std::vector<std::vector<std::vector<double>>>> errs(
      rows, std::vector<std::vector<std::vector<double>>>(
                cols, std::vector<std::vector<double>>(models.size())));
  for (const auto& rec : dataset.records) {
    const auto rit = rec.factors.find(row_binning.factor);
    const auto cit = rec.factors.find(col_binning.factor);
    if (rit == rec.factors.end() || cit == rec.factors.end()) continue;
    const auto ri = row_binning.bin_of(rit->second);
    const auto ci = col_binning.bin_of(cit->second);
    if (!ri || !ci) continue;
    bool covered = true;
    for (const auto& m : models) {
      if (!rec.has_prediction(m)) {
        covered = false;
        break;
      }
    }
    if (!covered) continue;
    for (size_t mi = 0; mi < models.size(); ++mi) {
      errs[*ri][*ci][mi].push_back(relative_error(rec.y_true_g, rec.predictions.at(models[mi])));
    }
    ++grid.n_total;
  }

  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      JointCell& cell = grid.cells[r][c];
      cell.n = errs[r][c].front().size();
      cell.low_support = cell.n < min_n;
      for (size_t mi = 0; mi < models.size(); ++mi) {
        cell.mre_pct.push_back(cell.n == 0 ? kNan : mre(errs[r][c][mi]));
      }
    }
  }
  return grid;
}

nlohmann::json JointGrid::to_json() const {
  nlohmann::json j;
  j["row_binning"] = row_binning.to_json();
  j["col_binning"] = col_binning.to_json();
  j["models"] = models;
  j["min_n"] = min_n;
  j["n_total"] = n_total;
  auto rows = nlohmann::json::array();
  for (const auto& row : cells) {
    auto cols = nlohmann::json::array();
    for (const auto& cell : row) {
      nlohmann::json jc;
      jc["n"] = cell.n;
      jc["low_support"] = cell.low_support;
      auto mres = nlohmann::json::array();
      for (double v : cell.mre_pct) {
        if (std::isnan(v)) {
          mres.push_back(nullptr);
        } else {
          mres.push_back(v);
        }
      }
      jc["mre_pct"] = mres;
      cols.push_back(jc);
    }
    rows.push_back(cols);
  }
  j["cells"] = rows;
  return j;
}

std::vector<double> collapse_columns(const JointGrid& grid, const std::string& model) {
  const size_t mi = model_index(grid, model);
  std::vector<double> out(grid.n_cols(), kNan);
  for (size_t c = 0; c < grid.n_cols(); ++c) {
    double weighted = 0.0;
    size_t n = 0;
    for (size_t r = 0; r < grid.n_rows(); ++r) {
      const JointCell& cell = grid.cells[r][c];
      if (cell.n == 0) continue;
      weighted += static_cast<double>(cell.n) * cell.mre_pct[mi];
      n += cell.n;
    }
    if (n > 0) out[c] = weighted / static_cast<double>(n);
  }
  return out;
}

GradientSummary within_stratum_gradients(const JointGrid& grid, const std::string& model,
                                         const std::string& low_bin, const std::string& high_bin) {
  const size_t mi = model_index(grid, model);
  const size_t low = find_col(grid, low_bin);
  const size_t high = find_col(grid, high_bin);

  GradientSummary summary;
  summary.row_factor = grid.row_binning.factor;
  summary.col_factor = grid.col_binning.factor;
  summary.model = model;
  summary.low_bin = low_bin;
  summary.high_bin = high_bin;

  double within_sum = 0.0;
  size_t within_count = 0;
  for (size_t r = 0; r < grid.n_rows(); ++r) {
    const JointCell& cl = grid.cells[r][low];
    const JointCell& ch = grid.cells[r][high];
    StratumGradient g;
    g.stratum = grid.row_binning.labels[r];
    g.n_low = cl.n;
    g.n_high = ch.n;
    g.mre_low_pct = cl.mre_pct[mi];
    g.mre_high_pct = ch.mre_pct[mi];
    g.low_support = cl.low_support || ch.low_support;
    if (!g.low_support && g.mre_low_pct > 0.0) {
      g.gradient_pct = relative_difference(g.mre_low_pct, g.mre_high_pct);
      within_sum += *g.gradient_pct;
      ++within_count;
    }
    summary.strata.push_back(std::move(g));
  }
  summary.mean_within_pct =
      within_count > 0 ? within_sum / static_cast<double>(within_count) : kNan;

  const auto marginal = collapse_columns(grid, model);
  const double marg_low = marginal[low];
  const double marg_high = marginal[high];
  if (std::isnan(marg_low) || std::isnan(marg_high) || marg_low <= 0.0) {
    summary.marginal_pct = kNan;
  } else {
    summary.marginal_pct = relative_difference(marg_low, marg_high);
  }
  if (!std::isnan(summary.marginal_pct) && summary.marginal_pct != 0.0 &&
      !std::isnan(summary.mean_within_pct)) {
    summary.attenuation = 1.0 - summary.mean_within_pct / summary.marginal_pct;
  }
  return summary;
}

nlohmann::json GradientSummary::to_json() const {
  nlohmann::json j;
  j["row_factor"] = row_factor;
  j["col_factor"] = col_factor;
  j["model"] = model;
  j["low_bin"] = low_bin;
  j["high_bin"] = high_bin;
  auto arr = nlohmann::json::array();
  for (const auto& g : strata) {
    nlohmann::json jg;
    jg["stratum"] = g.stratum;
    if (g.gradient_pct) {
      jg["gradient_pct"] = *g.gradient_pct;
    } else {
      jg["gradient_pct"] = nullptr;
    }
    jg["low_support"] = g.low_support;
    jg["n_low"] = g.n_low;
    jg["n_high"] = g.n_high;
    if (std::isnan(g.mre_low_pct)) {
      jg["mre_low_pct"] = nullptr;
    } else {
      jg["mre_low_pct"] = g.mre_low_pct;
    }
    if (std::isnan(g.mre_high_pct)) {
      jg["mre_high_pct"] = nullptr;
    } else {
      jg["mre_high_pct"] = g.mre_high_pct;
    }
    arr.push_back(jg);
  }
  j["strata"] = arr;
  if (std::isnan(marginal_pct)) {
    j["marginal_pct"] = nullptr;
  } else {
    j["marginal_pct"] = marginal_pct;
  }
  if (std::isnan(mean_within_pct)) {
    j["mean_within_pct"] = nullptr;
  } else {
    j["mean_within_pct"] = mean_within_pct;
  }
  if (attenuation) {
    j["attenuation"] = *attenuation;
  } else {
    j["attenuation"] = nullptr;
  }
  return j;
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::independent_effect:
      return "independent-effect";
    case Verdict::partially_confounded:
      return "partially-confounded";
    case Verdict::fully_confounded:
      return "fully-confounded";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

VerdictResult confounding_verdict(const GradientSummary& summary,
                                  const VerdictThresholds& thresholds) {
  VerdictResult result;
  result.thresholds = thresholds;

  const double marginal = summary.marginal_pct;
  size_t valid = 0;
  size_t low_support = 0;
  bool all_within_persist = true;
  bool all_share_sign = true;
  bool any_persists = false;
  for (const auto& g : summary.strata) {
    VerdictResult::EvidenceRow row;
    row.stratum = g.stratum;
    row.gradient_pct = g.gradient_pct;
    row.low_support = g.low_support;
    if (g.low_support) ++low_support;
    if (g.gradient_pct) {
      ++valid;
      row.within_persist = std::abs(*g.gradient_pct) <= thresholds.persist_pp;
      row.shares_marginal_sign = !std::isnan(marginal) && *g.gradient_pct * marginal > 0.0;
      if (!row.within_persist) {
        all_within_persist = false;
        any_persists = true;
      }
      if (!row.shares_marginal_sign) all_share_sign = false;
    }
    result.evidence.push_back(std::move(row));
  }
  if (2 * low_support > summary.strata.size()) {
    result.verdict = Verdict::inconclusive;
    result.rationale = "low-support strata are in the majority (" + std::to_string(low_support) +
                       " of " + std::to_string(summary.strata.size()) + ")";
    return result;
  }
  if (valid < 2) {
    fail(ErrorCode::TooFewStrata,
         "verdict needs >= 2 strata with gradients, got " + std::to_string(valid));
  }
  if (all_within_persist) {
    result.verdict = Verdict::fully_confounded;
    result.rationale = "every within-stratum gradient is within " +
                       format_double(thresholds.persist_pp) + " pp of zero";
    return result;
  }
  const bool attenuation_low = summary.attenuation && *summary.attenuation < thresholds.attenuate;
  if (all_share_sign && attenuation_low) {
    result.verdict = Verdict::independent_effect;
    result.rationale = "all gradients share the marginal's sign and attenuation " +
                       format_double(*summary.attenuation) + " < " +
                       format_double(thresholds.attenuate);
    return result;
  }
  if (summary.attenuation && *summary.attenuation >= thresholds.attenuate && any_persists) {
    result.verdict = Verdict::partially_confounded;
    result.rationale = "attenuation " + format_double(*summary.attenuation) + " >= " +
                       format_double(thresholds.attenuate) +
                       " but some gradients exceed the persistence threshold";
    return result;
  }
  result.verdict = Verdict::inconclusive;
  result.rationale = "gradient pattern matches neither the independent-effect nor a confounded profile";
  return result;
}

nlohmann::json VerdictResult::to_json() const {
  nlohmann::json j;
  j["verdict"] = to_string(verdict);
  j["thresholds"] = {{"persist_pp", thresholds.persist_pp}, {"attenuate", thresholds.attenuate}};
  j["rationale"] = rationale;
  auto arr = nlohmann::json::array();
  for (const auto& row : evidence) {
    nlohmann::json jr;
    jr["stratum"] = row.stratum;
    if (row.gradient_pct) {
      jr["gradient_pct"] = *row.gradient_pct;
    } else {
      jr["gradient_pct"] = nullptr;
    }
    jr["low_support"] = row.low_support;
    jr["within_persist"] = row.within_persist;
    jr["shares_marginal_sign"] = row.shares_marginal_sign;
    arr.push_back(jr);
  }
  j["evidence"] = arr;
  return j;
}

}  // namespace biaslens
