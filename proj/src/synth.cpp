#include "biaslens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "biaslens/clinical.hpp"

namespace biaslens {

namespace {

size_t bin_by_edges(const std::vector<double>& edges, double value) {
  return static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

// Mean-one lognormal factor: exp(sigma*z - sigma^2/2).
double lognormal_factor(double sigma, double z) { return std::exp(sigma * z - sigma * sigma / 2.0); }

double remap_value(const FactorDef& def, double source_value) {
  const size_t stratum = bin_by_edges(def.strata_edges, source_value);
  double lo = stratum == 0 ? def.source_min : def.strata_edges[stratum - 1];
  double hi = stratum == def.strata_edges.size() ? def.source_max : def.strata_edges[stratum];
  double u = (source_value - lo) / (hi - lo);
  u = std::clamp(u, 0.0, 1.0);
  const auto& weights = def.level_weights[stratum];
  double cum = 0.0;
  for (size_t level = 0; level < weights.size(); ++level) {
    const double next = cum + weights[level];
    if (u < next || level + 1 == weights.size()) {
      const double pos = weights[level] > 0.0 ? (u - cum) / weights[level] : 0.0;
      return def.levels[level][0] +
             std::clamp(pos, 0.0, 1.0) * (def.levels[level][1] - def.levels[level][0]);
    }
    cum = next;
  }
  return def.levels.back()[1];
}

const FactorDef* find_def(const SynthConfig& config, const std::string& name) {
  for (const auto& def : config.factors) {
    if (def.name == name) return &def;
  }
  return nullptr;
}

double binomial2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

void SynthConfig::validate() const {
  if (n == 0) fail(ErrorCode::InvalidConfig, "n must be positive");
  if (factors.empty()) fail(ErrorCode::InvalidConfig, "at least one factor required");
  if (models.empty()) fail(ErrorCode::InvalidConfig, "at least one model required");
  if (y_noise_scale < 0.0) fail(ErrorCode::InvalidConfig, "y noise scale must be >= 0");

  std::set<std::string> seen;
  for (size_t i = 0; i < factors.size(); ++i) {
    const FactorDef& def = factors[i];
    if (!seen.insert(def.name).second) {
      fail(ErrorCode::InvalidConfig, "duplicate factor '" + def.name + "'");
    }
    auto source_defined_earlier = [&](const std::string& source) {
      for (size_t j = 0; j < i; ++j) {
        if (factors[j].name == source) return true;
      }
      return false;
    };
    if (def.dist == "uniform") {
      if (!(def.a < def.b)) fail(ErrorCode::InvalidConfig, def.name + ": uniform needs a < b");
    } else if (def.dist == "normal") {
      if (def.b < 0.0) fail(ErrorCode::InvalidConfig, def.name + ": sd must be >= 0");
      for (const auto& shift : def.shifts) {
        if (!source_defined_earlier(shift.source)) {
          fail(ErrorCode::InvalidConfig, def.name + ": shift source '" + shift.source +
                                             "' must be an earlier numeric factor");
        }
      }
    } else if (def.dist == "categorical") {
      if (def.kind != FactorKind::categorical || def.categories.empty()) {
        fail(ErrorCode::InvalidConfig, def.name + ": categorical needs categories");
      }
      if (!def.weights.empty() && def.weights.size() != def.categories.size()) {
        fail(ErrorCode::InvalidConfig, def.name + ": weights must match categories");
      }
    } else if (def.dist == "constant") {
      // no parameters beyond a
    } else if (def.dist == "remap") {
      if (!source_defined_earlier(def.source)) {
        fail(ErrorCode::InvalidConfig,
             def.name + ": remap source '" + def.source + "' must be an earlier numeric factor");
      }
      if (def.levels.empty() || def.level_weights.size() != def.strata_edges.size() + 1) {
        fail(ErrorCode::InvalidConfig, def.name + ": remap needs level_weights per source stratum");
      }
      for (const auto& w : def.level_weights) {
        if (w.size() != def.levels.size()) {
          fail(ErrorCode::InvalidConfig, def.name + ": level weight row size mismatch");
        }
        double total = 0.0;
        for (double v : w) {
          if (v < 0.0) fail(ErrorCode::InvalidConfig, def.name + ": negative level weight");
          total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) {
          fail(ErrorCode::InvalidConfig, def.name + ": level weights must sum to 1");
        }
      }
      if (!(def.source_min < def.source_max)) {
        fail(ErrorCode::InvalidConfig, def.name + ": remap needs source_min < source_max");
      }
    } else {
      fail(ErrorCode::InvalidConfig, def.name + ": unknown distribution '" + def.dist + "'");
    }
  }
  if (planes) {
    if (planes->names.size() < 2) fail(ErrorCode::InvalidConfig, "plane block needs >= 2 names");
    if (!seen.count(planes->base)) {
      fail(ErrorCode::InvalidConfig, "plane base '" + planes->base + "' is not a factor");
    }
    for (const auto& name : planes->names) {
      if (!seen.insert(name).second) {
        fail(ErrorCode::InvalidConfig, "plane name collides with factor '" + name + "'");
      }
    }
  }
  if (!seen.count(ga_factor)) {
    fail(ErrorCode::InvalidConfig, "ga factor '" + ga_factor + "' is not defined");
  }
  for (const auto& model : models) {
    if (!(model.base_error > 0.0)) {
      fail(ErrorCode::InvalidConfig, model.name + ": base error must be positive");
    }
    if (model.noise_scale < 0.0) {
      fail(ErrorCode::InvalidConfig, model.name + ": noise scale must be >= 0");
    }
    for (const auto& effect : model.effects) {
      if (!seen.count(effect.factor)) {
        fail(ErrorCode::InvalidConfig, model.name + ": effect factor '" + effect.factor + "' unknown");
      }
      if (effect.multipliers.size() != effect.edges.size() + 1) {
        fail(ErrorCode::InvalidConfig, model.name + ": effect needs edges.size()+1 multipliers");
      }
    }
  }
  if (embedding) {
    if (embedding->dim < 2) fail(ErrorCode::InvalidConfig, "embedding dimension must be >= 2");
    if (!seen.count(embedding->keyed_by)) {
      fail(ErrorCode::InvalidConfig, "embedding key '" + embedding->keyed_by + "' is not a factor");
    }
    if (static_cast<size_t>(embedding->dim) < embedding->edges.size() + 1) {
      fail(ErrorCode::InvalidConfig, "embedding dimension must cover the cluster count");
    }
  }
}

SynthResult generate(const SynthConfig& config) {
  config.validate();
  if (config.draw_order_version != 1) {
    fail(ErrorCode::InvalidConfig,
         "unsupported draw order version " + std::to_string(config.draw_order_version));
  }
  const GrowthCurve curve = default_clinical_config().curve;

  SynthResult result;
  Dataset& ds = result.dataset;
  GroundTruth& truth = result.truth;

  for (const auto& def : config.factors) {
    FactorSpec spec;
    spec.name = def.name;
    spec.kind = def.kind;
    spec.unit = def.unit;
    spec.cutpoints = def.cutpoints;
    if (def.kind == FactorKind::categorical) spec.categories = def.categories;
    ds.schema.factors.push_back(spec);
  }
  if (config.planes) {
    for (const auto& name : config.planes->names) {
      FactorSpec spec;
      spec.name = name;
      spec.kind = FactorKind::continuous;
      const FactorDef* base = find_def(config, config.planes->base);
      if (base) spec.unit = base->unit;
      ds.schema.factors.push_back(spec);
    }
  }
  ds.schema.validate();
  for (const auto& model : config.models) ds.model_names.push_back(model.name);
  if (config.embedding) ds.embedding_dim = static_cast<uint32_t>(config.embedding->dim);

  // Per-model effect bins are recorded for planted factors.
  std::set<std::string> planted(config.planted_factors.begin(), config.planted_factors.end());
  for (const auto& f : planted) truth.factor_bins[f] = {};
  for (const auto& model : config.models) truth.realized_error[model.name] = {};

  const size_t id_width = std::max<size_t>(6, std::to_string(config.n).size());
  Rng rng(config.seed);
  ds.records.reserve(config.n);
  for (size_t i = 0; i < config.n; ++i) {
    Record rec;
    std::string index = std::to_string(i + 1);
    rec.id = "r" + std::string(id_width - index.size(), '0') + index;

    std::map<std::string, double> numeric;
    for (const auto& def : config.factors) {
      if (def.dist == "uniform") {
        const double v = rng.uniform(def.a, def.b);
        numeric[def.name] = v;
        rec.factors[def.name] = v;
      } else if (def.dist == "normal") {
        double mean = def.a;
        for (const auto& shift : def.shifts) mean += shift.coef * (numeric[shift.source] - shift.center);
        const double v = mean + def.b * rng.normal();
        numeric[def.name] = v;
        rec.factors[def.name] = v;
      } else if (def.dist == "categorical") {
        const double u = rng.uniform01();
        double total = 0.0;
        std::vector<double> weights = def.weights;
        if (weights.empty()) weights.assign(def.categories.size(), 1.0);
        for (double w : weights) total += w;
        double cum = 0.0;
        size_t pick = def.categories.size() - 1;
        for (size_t c = 0; c < weights.size(); ++c) {
          cum += weights[c] / total;
          if (u < cum) {
            pick = c;
            break;
          }
        }
        rec.factors[def.name] = def.categories[pick];
      } else if (def.dist == "constant") {
        numeric[def.name] = def.a;
        rec.factors[def.name] = def.a;
      } else {  // remap
        const double v = remap_value(def, numeric.at(def.source));
        numeric[def.name] = v;
        rec.factors[def.name] = v;
      }
    }

    if (config.planes) {
      const double base = numeric.at(config.planes->base);
      double sum = 0.0;
      for (size_t p = 0; p + 1 < config.planes->names.size(); ++p) {
        const double jitter = config.planes->jitter_sd * rng.normal();
        sum += jitter;
        numeric[config.planes->names[p]] = base + jitter;
        rec.factors[config.planes->names[p]] = base + jitter;
      }
      numeric[config.planes->names.back()] = base - sum;
      rec.factors[config.planes->names.back()] = base - sum;
    }

    const double ga_weeks = numeric.at(config.ga_factor);
    const double ga_days =
        std::clamp(ga_weeks * 7.0, curve.ga_min_days, curve.ga_max_days);
    const double z_y = rng.normal();
    rec.y_true_g = growth_curve_weight(ga_days, curve) * lognormal_factor(config.y_noise_scale, z_y);

    for (const auto& model : config.models) {
      double expected = model.base_error;
      for (const auto& effect : model.effects) {
        expected *= effect.multipliers[bin_by_edges(effect.edges, numeric.at(effect.factor))];
      }
      const double z_e = rng.normal();
      const double u_sign = rng.uniform01();
      double realized = std::min(expected * lognormal_factor(model.noise_scale, z_e), 0.95);
      const double sign = u_sign < 0.5 ? 1.0 : -1.0;
      rec.predictions[model.name] = rec.y_true_g * (1.0 + sign * realized);
      truth.realized_error[model.name].push_back(realized);
    }

    int cluster = -1;
    if (config.embedding) {
      cluster = static_cast<int>(bin_by_edges(config.embedding->edges,
                                              numeric.at(config.embedding->keyed_by)));
      std::vector<float> emb(static_cast<size_t>(config.embedding->dim), 0.0f);
      for (int j = 0; j < config.embedding->dim; ++j) {
        const double center = j == cluster ? config.embedding->separation : 0.0;
        emb[static_cast<size_t>(j)] =
            static_cast<float>(center + config.embedding->spread * rng.normal());
      }
      rec.embedding = std::move(emb);
    }
    truth.embedding_cluster.push_back(cluster);

    for (const auto& f : planted) {
      const ErrorEffect* effect = nullptr;
      for (const auto& model : config.models) {
        for (const auto& e : model.effects) {
          if (e.factor == f) {
            effect = &e;
            break;
          }
        }
        if (effect) break;
      }
      if (effect) {
        truth.factor_bins[f].push_back(
            static_cast<int>(bin_by_edges(effect->edges, numeric.at(f))));
      } else {
        truth.factor_bins[f].push_back(-1);
      }
    }

    truth.ids.push_back(rec.id);
    ds.records.push_back(std::move(rec));
  }

  truth.planted["scenario"] = config.scenario;
  truth.planted["expected_verdict"] = config.expected_verdict;
  truth.planted["verdict_pair"] = {config.verdict_row, config.verdict_col};
  truth.planted["planted_factors"] = config.planted_factors;
  truth.planted["draw_order_version"] = config.draw_order_version;
  auto effects = nlohmann::json::array();
  for (const auto& model : config.models) {
    for (const auto& effect : model.effects) {
      effects.push_back({{"model", model.name},
                         {"factor", effect.factor},
                         {"multipliers", effect.multipliers}});
    }
  }
  truth.planted["effects"] = effects;
  return result;
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json j;
  j["ids"] = ids;
  j["factor_bins"] = factor_bins;
  j["embedding_cluster"] = embedding_cluster;
  j["realized_error"] = realized_error;
  j["planted"] = planted;
  return j;
}

GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
  GroundTruth truth;
  try {
    truth.ids = j.at("ids").get<std::vector<std::string>>();
    truth.factor_bins = j.at("factor_bins").get<std::map<std::string, std::vector<int>>>();
    truth.embedding_cluster = j.at("embedding_cluster").get<std::vector<int>>();
    truth.realized_error =
        j.at("realized_error").get<std::map<std::string, std::vector<double>>>();
    truth.planted = j.value("planted", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("ground truth: ") + e.what());
  }
  return truth;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "label vectors differ in length");
  if (a.empty()) fail(ErrorCode::EmptySample, "empty labelings");
  std::map<std::pair<int, int>, size_t> table;
  std::map<int, size_t> row_sum, col_sum;
  for (size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++row_sum[a[i]];
    ++col_sum[b[i]];
  }
  double sum_cells = 0.0;
  for (const auto& [key, count] : table) {
    (void)key;
    sum_cells += binomial2(static_cast<double>(count));
  }
  double sum_rows = 0.0;
  for (const auto& [label, count] : row_sum) {
    (void)label;
    sum_rows += binomial2(static_cast<double>(count));
  }
  double sum_cols = 0.0;
  for (const auto& [label, count] : col_sum) {
    (void)label;
    sum_cols += binomial2(static_cast<double>(count));
  }
  const double total = binomial2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = (sum_rows + sum_cols) / 2.0;
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (sum_cells - expected) / (max_index - expected);
}

RecoveryReport score_recovery(const GroundTruth& truth, const SliceResult* slices,
                              const StratifiedAnalysis* stratified, const VerdictResult* verdict) {
  RecoveryReport report;
  if (truth.planted.contains("planted_factors")) {
    report.planted_factors = truth.planted["planted_factors"].get<std::vector<std::string>>();
  }
  if (truth.planted.contains("expected_verdict")) {
    report.expected_verdict = truth.planted["expected_verdict"].get<std::string>();
  }

  if (slices) {
    std::vector<int> planted_labels;
    std::vector<int> discovered;
    for (size_t i = 0; i < truth.ids.size(); ++i) {
      if (truth.embedding_cluster[i] < 0) continue;
      const auto it = slices->labels.find(truth.ids[i]);
      if (it == slices->labels.end()) {
        fail(ErrorCode::MismatchedProvenance,
             "record '" + truth.ids[i] + "' has a planted cluster but no discovered slice");
      }
      planted_labels.push_back(truth.embedding_cluster[i]);
      discovered.push_back(it->second);
    }
    if (planted_labels.size() != slices->labels.size()) {
      fail(ErrorCode::MismatchedProvenance, "slice result covers records outside the ground truth");
    }
    if (!planted_labels.empty()) {
      report.ari = adjusted_rand_index(planted_labels, discovered);
    }
  }

  if (stratified && !report.planted_factors.empty()) {
    bool all_flagged = true;
    for (size_t mi = 0; mi < stratified->models.size(); ++mi) {
      // Rank all successful gaps for this model by descending absolute gap.
      std::vector<std::pair<double, std::string>> ranked;
      for (const auto& entry : stratified->entries) {
        if (entry.ok && entry.gap_by_model[mi]) {
          ranked.emplace_back(entry.gap_by_model[mi]->gap.absolute_gap_pp, entry.factor);
        }
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& x, const auto& y) { return x.first > y.first; });
      for (const auto& factor : report.planted_factors) {
        bool found = false;
        for (size_t pos = 0; pos < std::min(ranked.size(), report.planted_factors.size()); ++pos) {
          if (ranked[pos].second == factor) {
            found = true;
            break;
          }
        }
        if (!found) {
          all_flagged = false;
          continue;
        }
        for (const auto& entry : stratified->entries) {
          if (entry.factor == factor && entry.ok && entry.gap_by_model[mi]) {
            if (!(entry.gap_by_model[mi]->test.p < 0.001)) all_flagged = false;
          }
        }
      }
    }
    report.planted_factors_flagged = all_flagged;
  }

  if (verdict && !report.expected_verdict.empty()) {
    report.observed_verdict = to_string(verdict->verdict);
    report.verdict_matches = report.observed_verdict == report.expected_verdict;
  }
  return report;
}

RecoveryReport score_recovery_summary(const GroundTruth& truth, const nlohmann::json& summary) {
  RecoveryReport report;
  if (truth.planted.contains("planted_factors")) {
    report.planted_factors = truth.planted["planted_factors"].get<std::vector<std::string>>();
  }
  if (truth.planted.contains("expected_verdict")) {
    report.expected_verdict = truth.planted["expected_verdict"].get<std::string>();
  }

  const nlohmann::json slices = summary.value("slice_discovery", nlohmann::json());
  if (slices.is_object() && slices.contains("result") && slices["result"].contains("labels")) {
    const nlohmann::json& labels = slices["result"]["labels"];
    std::vector<int> planted_labels;
    std::vector<int> discovered;
    for (size_t i = 0; i < truth.ids.size(); ++i) {
      if (truth.embedding_cluster[i] < 0) continue;
      const auto it = labels.find(truth.ids[i]);
      if (it == labels.end()) {
        fail(ErrorCode::MismatchedProvenance,
             "record '" + truth.ids[i] + "' has a planted cluster but no discovered slice");
      }
      planted_labels.push_back(truth.embedding_cluster[i]);
      discovered.push_back(it->get<int>());
    }
    if (planted_labels.size() != labels.size()) {
      fail(ErrorCode::MismatchedProvenance, "slice result covers records outside the ground truth");
    }
    if (!planted_labels.empty()) {
      report.ari = adjusted_rand_index(planted_labels, discovered);
    }
  }

  const nlohmann::json stratified = summary.value("stratified", nlohmann::json());
  if (stratified.is_object() && !report.planted_factors.empty()) {
    const auto models = stratified.at("models").get<std::vector<std::string>>();
    bool all_flagged = true;
    for (size_t mi = 0; mi < models.size(); ++mi) {
      std::vector<std::pair<double, std::string>> ranked;
      std::map<std::string, double> p_by_factor;
      for (const nlohmann::json& entry : stratified.at("factors")) {
        if (!entry.value("ok", false)) continue;
        const nlohmann::json& by_model = entry.at("by_model");
        if (mi >= by_model.size()) continue;
        const nlohmann::json& jm = by_model[mi];
        if (!jm.contains("gap") || jm["gap"].is_null()) continue;
        const auto factor = entry.at("factor").get<std::string>();
        ranked.emplace_back(jm["gap"].at("absolute_gap_pp").get<double>(), factor);
        p_by_factor[factor] = jm["gap"].at("test").at("p").get<double>();
      }
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& x, const auto& y) { return x.first > y.first; });
      for (const auto& factor : report.planted_factors) {
        bool found = false;
        for (size_t pos = 0; pos < std::min(ranked.size(), report.planted_factors.size()); ++pos) {
          if (ranked[pos].second == factor) {
            found = true;
            break;
          }
        }
        if (!found) {
          all_flagged = false;
          continue;
        }
        const auto pit = p_by_factor.find(factor);
        if (pit == p_by_factor.end() || !(pit->second < 0.001)) all_flagged = false;
      }
    }
    report.planted_factors_flagged = all_flagged;
  }

  const nlohmann::json intersectional = summary.value("intersectional", nlohmann::json());
  if (intersectional.is_object() && !report.expected_verdict.empty() &&
      truth.planted.contains("verdict_pair")) {
    const auto pair = truth.planted["verdict_pair"].get<std::vector<std::string>>();
    for (const nlohmann::json& jp : intersectional.at("pairs")) {
      if (pair.size() != 2 || jp.value("row", std::string()) != pair[0] ||
          jp.value("col", std::string()) != pair[1]) {
        continue;
      }
      if (!jp.contains("by_model")) break;  // the pair itself failed
      bool all_match = true;
      std::string observed;
      for (const nlohmann::json& jm : jp.at("by_model")) {
        if (!jm.contains("verdict") || jm["verdict"].is_null()) {
          all_match = false;
          if (observed.empty()) observed = "error";
          continue;
        }
        const auto v = jm["verdict"].at("verdict").get<std::string>();
        if (observed.empty() || observed == "error") {
          observed = v;
        } else if (observed != v) {
          observed = "mixed";
        }
        if (v != report.expected_verdict) all_match = false;
      }
      if (!observed.empty()) {
        report.observed_verdict = observed;
        report.verdict_matches = all_match;
      }
      break;
    }
  }
  return report;
}

bool RecoveryReport::all_passed() const {
  if (planted_factors_flagged && !*planted_factors_flagged) return false;
  if (verdict_matches && !*verdict_matches) return false;
  return true;
}

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j;
  if (ari) {
    j["ari"] = *ari;
  } else {
    j["ari"] = nullptr;
  }
  if (planted_factors_flagged) {
    j["planted_factors_flagged"] = *planted_factors_flagged;
  } else {
    j["planted_factors_flagged"] = nullptr;
  }
  j["planted_factors"] = planted_factors;
  if (verdict_matches) {
    j["verdict_matches"] = *verdict_matches;
  } else {
    j["verdict_matches"] = nullptr;
  }
  j["expected_verdict"] = expected_verdict;
  j["observed_verdict"] = observed_verdict;
  j["all_passed"] = all_passed();
  return j;
}

namespace {

std::vector<double> ga_tertiles() {
  return {28.0 + 13.0 / 3.0, 28.0 + 26.0 / 3.0};
}

}  // namespace

SynthConfig scenario_independent(size_t n, uint64_t seed) {
  SynthConfig config;
  config.n = n;
  config.seed = seed;
  config.scenario = "independent";

  FactorDef ga;
  ga.name = "ga_weeks";
  ga.dist = "uniform";
  ga.a = 28.0;
  ga.b = 41.0;
  ga.cutpoints = ga_tertiles();
  ga.unit = "weeks";
  config.factors.push_back(ga);

  FactorDef bmi;
  bmi.name = "bmi";
  bmi.dist = "normal";
  bmi.a = 24.0;
  bmi.b = 4.0;
  bmi.cutpoints = {18.5, 25.0};
  bmi.unit = "kg/m2";
  config.factors.push_back(bmi);

  FactorDef parity;
  parity.name = "parity";
  parity.kind = FactorKind::categorical;
  parity.dist = "categorical";
  parity.categories = {"nulliparous", "multiparous"};
  parity.weights = {0.45, 0.55};
  config.factors.push_back(parity);

  // Tertile edges of N(0.25, 0.05/sqrt(3)).
  const std::vector<double> ps_edges = {0.2375663, 0.2624337};
  FactorDef ps;
  ps.name = "ps_avg";
  ps.dist = "normal";
  ps.a = 0.25;
  ps.b = 0.05 / std::sqrt(3.0);
  ps.cutpoints = ps_edges;
  config.factors.push_back(ps);

  PlaneDef planes;
  planes.base = "ps_avg";
  planes.names = {"ps_plane1", "ps_plane2", "ps_plane3"};
  planes.jitter_sd = 0.03;
  config.planes = planes;

  ModelDef dl;
  dl.name = "dl";
  dl.base_error = 0.065;
  dl.noise_scale = 0.15;
  dl.effects.push_back({"ps_avg", ps_edges, {1.25, 1.0, 1.0}});
  config.models.push_back(dl);

  ModelDef hadlock;
  hadlock.name = "hadlock";
  hadlock.base_error = 0.077;
  hadlock.noise_scale = 0.15;
  hadlock.effects.push_back({"ps_avg", ps_edges, {1.18, 1.0, 1.0}});
  config.models.push_back(hadlock);

  EmbeddingDef emb;
  emb.dim = 8;
  emb.keyed_by = "ps_avg";
  emb.edges = ps_edges;
  emb.separation = 6.0;
  emb.spread = 1.0;
  config.embedding = emb;

  config.planted_factors = {"ps_avg"};
  config.expected_verdict = "independent-effect";
  config.verdict_row = "bmi";
  config.verdict_col = "ps_avg";
  return config;
}

SynthConfig scenario_confounded(size_t n, uint64_t seed) {
  SynthConfig config;
  config.n = n;
  config.seed = seed;
  config.scenario = "confounded";

  const std::vector<double> ga_edges = ga_tertiles();

  FactorDef ga;
  ga.name = "ga_weeks";
  ga.dist = "uniform";
  ga.a = 28.0;
  ga.b = 41.0;
  ga.cutpoints = ga_edges;
  ga.unit = "weeks";
  config.factors.push_back(ga);

  FactorDef bmi;
  bmi.name = "bmi";
  bmi.dist = "normal";
  bmi.a = 24.0;
  bmi.b = 4.0;
  bmi.cutpoints = {18.5, 25.0};
  bmi.unit = "kg/m2";
  config.factors.push_back(bmi);

  FactorDef parity;
  parity.name = "parity";
  parity.kind = FactorKind::categorical;
  parity.dist = "categorical";
  parity.categories = {"nulliparous", "multiparous"};
  parity.weights = {0.45, 0.55};
  config.factors.push_back(parity);

  // PS is an exact function of GA. Skewed level weights keep every
  // (GA stratum, PS bin) cell populated while low GA maps mostly to low PS.
  FactorDef ps;
  ps.name = "ps_avg";
  ps.dist = "remap";
  ps.source = "ga_weeks";
  ps.source_min = 28.0;
  ps.source_max = 41.0;
  ps.strata_edges = ga_edges;
  ps.levels = {{{0.18, 0.22}}, {{0.22, 0.26}}, {{0.26, 0.30}}};
  ps.level_weights = {{0.7, 0.15, 0.15}, {0.15, 0.7, 0.15}, {0.15, 0.15, 0.7}};
  ps.cutpoints = {0.22, 0.26};
  config.factors.push_back(ps);

  PlaneDef planes;
  planes.base = "ps_avg";
  planes.names = {"ps_plane1", "ps_plane2", "ps_plane3"};
  planes.jitter_sd = 0.03;
  config.planes = planes;

  ModelDef dl;
  dl.name = "dl";
  dl.base_error = 0.065;
  dl.noise_scale = 0.15;
  dl.effects.push_back({"ga_weeks", ga_edges, {1.3, 1.15, 1.0}});
  config.models.push_back(dl);

  ModelDef hadlock;
  hadlock.name = "hadlock";
  hadlock.base_error = 0.077;
  hadlock.noise_scale = 0.15;
  hadlock.effects.push_back({"ga_weeks", ga_edges, {1.25, 1.12, 1.0}});
  config.models.push_back(hadlock);

  EmbeddingDef emb;
  emb.dim = 8;
  emb.keyed_by = "ga_weeks";
  emb.edges = ga_edges;
  emb.separation = 6.0;
  emb.spread = 1.0;
  config.embedding = emb;

  config.planted_factors = {"ga_weeks"};
  config.expected_verdict = "fully-confounded";
  config.verdict_row = "ga_weeks";
  config.verdict_col = "ps_avg";
  return config;
}

SynthConfig scenario_by_name(const std::string& name, size_t n, uint64_t seed) {
  if (name == "independent") return scenario_independent(n, seed);
  if (name == "confounded") return scenario_confounded(n, seed);
  fail(ErrorCode::InvalidConfig, "unknown scenario '" + name + "' (independent, confounded)");
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["seed"] = seed;
  j["draw_order_version"] = draw_order_version;
  j["scenario"] = scenario;
  j["ga_factor"] = ga_factor;
  j["y_noise_scale"] = y_noise_scale;
  auto jf = nlohmann::json::array();
  for (const auto& def : factors) {
    nlohmann::json f;
    f["name"] = def.name;
    f["kind"] = to_string(def.kind);
    f["dist"] = def.dist;
    f["a"] = def.a;
    f["b"] = def.b;
    if (!def.categories.empty()) f["categories"] = def.categories;
    if (!def.weights.empty()) f["weights"] = def.weights;
    if (!def.shifts.empty()) {
      auto js = nlohmann::json::array();
      for (const auto& s : def.shifts) {
        js.push_back({{"source", s.source}, {"coef", s.coef}, {"center", s.center}});
      }
      f["shifts"] = js;
    }
    if (def.dist == "remap") {
      f["source"] = def.source;
      f["source_min"] = def.source_min;
      f["source_max"] = def.source_max;
      f["strata_edges"] = def.strata_edges;
      auto jl = nlohmann::json::array();
      for (const auto& level : def.levels) jl.push_back({level[0], level[1]});
      f["levels"] = jl;
      f["level_weights"] = def.level_weights;
    }
    if (!def.cutpoints.empty()) f["cutpoints"] = def.cutpoints;
    if (!def.unit.empty()) f["unit"] = def.unit;
    jf.push_back(f);
  }
  j["factors"] = jf;
  if (planes) {
    j["planes"] = {{"base", planes->base}, {"names", planes->names}, {"jitter_sd", planes->jitter_sd}};
  }
  auto jm = nlohmann::json::array();
  for (const auto& model : models) {
    nlohmann::json m;
    m["name"] = model.name;
    m["base_error"] = model.base_error;
    m["noise_scale"] = model.noise_scale;
    auto je = nlohmann::json::array();
    for (const auto& effect : model.effects) {
      je.push_back({{"factor", effect.factor},
                    {"edges", effect.edges},
                    {"multipliers", effect.multipliers}});
    }
    m["effects"] = je;
    jm.push_back(m);
  }
  j["models"] = jm;
  if (embedding) {
    j["embedding"] = {{"dim", embedding->dim},
                      {"keyed_by", embedding->keyed_by},
                      {"edges", embedding->edges},
                      {"separation", embedding->separation},
                      {"spread", embedding->spread}};
  }
  j["planted_factors"] = planted_factors;
  j["expected_verdict"] = expected_verdict;
  j["verdict_row"] = verdict_row;
  j["verdict_col"] = verdict_col;
  return j;
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig config;
  try {
    config.n = j.at("n").get<size_t>();
    config.seed = j.value("seed", 0ULL);
    config.draw_order_version = j.value("draw_order_version", 1);
    config.scenario = j.value("scenario", std::string());
    config.ga_factor = j.value("ga_factor", std::string("ga_weeks"));
    config.y_noise_scale = j.value("y_noise_scale", 0.05);
    for (const auto& f : j.at("factors")) {
      FactorDef def;
      def.name = f.at("name").get<std::string>();
      def.kind = factor_kind_from_string(f.value("kind", std::string("continuous")));
      def.dist = f.at("dist").get<std::string>();
      def.a = f.value("a", 0.0);
      def.b = f.value("b", 0.0);
      def.categories = f.value("categories", std::vector<std::string>{});
      def.weights = f.value("weights", std::vector<double>{});
      if (f.contains("shifts")) {
        for (const auto& s : f["shifts"]) {
          def.shifts.push_back({s.at("source").get<std::string>(), s.value("coef", 0.0),
                                s.value("center", 0.0)});
        }
      }
      if (def.dist == "remap") {
        def.source = f.at("source").get<std::string>();
        def.source_min = f.at("source_min").get<double>();
        def.source_max = f.at("source_max").get<double>();
        def.strata_edges = f.at("strata_edges").get<std::vector<double>>();
        for (const auto& level : f.at("levels")) {
          def.levels.push_back({level.at(0).get<double>(), level.at(1).get<double>()});
        }
        def.level_weights = f.at("level_weights").get<std::vector<std::vector<double>>>();
      }
      def.cutpoints = f.value("cutpoints", std::vector<double>{});
      def.unit = f.value("unit", std::string());
      config.factors.push_back(std::move(def));
    }
    if (j.contains("planes")) {
      PlaneDef planes;
      planes.base = j["planes"].at("base").get<std::string>();
      planes.names = j["planes"].at("names").get<std::vector<std::string>>();
      planes.jitter_sd = j["planes"].value("jitter_sd", 0.03);
      config.planes = planes;
    }
    for (const auto& m : j.at("models")) {
      ModelDef model;
      model.name = m.at("name").get<std::string>();
      model.base_error = m.at("base_error").get<double>();
      model.noise_scale = m.value("noise_scale", 0.0);
      if (m.contains("effects")) {
        for (const auto& e : m["effects"]) {
          ErrorEffect effect;
          effect.factor = e.at("factor").get<std::string>();
          effect.edges = e.value("edges", std::vector<double>{});
          effect.multipliers = e.at("multipliers").get<std::vector<double>>();
          model.effects.push_back(std::move(effect));
        }
      }
      config.models.push_back(std::move(model));
    }
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      EmbeddingDef emb;
      emb.dim = j["embedding"].at("dim").get<int>();
      emb.keyed_by = j["embedding"].at("keyed_by").get<std::string>();
      emb.edges = j["embedding"].value("edges", std::vector<double>{});
      emb.separation = j["embedding"].value("separation", 6.0);
      emb.spread = j["embedding"].value("spread", 1.0);
      config.embedding = emb;
    }
    config.planted_factors = j.value("planted_factors", std::vector<std::string>{});
    config.expected_verdict = j.value("expected_verdict", std::string());
    config.verdict_row = j.value("verdict_row", std::string());
    config.verdict_col = j.value("verdict_col", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("synth config: ") + e.what());
  }
  return config;
}

}  // namespace biaslens
