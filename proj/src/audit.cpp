#include "biaslens/audit.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include "biaslens/ingest.hpp"
#include "biaslens/report.hpp"
#include "biaslens/stratify.hpp"

namespace biaslens {

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

nlohmann::json config_echo(const RunConfig& config, const std::vector<std::string>& factors,
                           const std::vector<std::pair<std::string, std::string>>& pairs,
                           const std::string& ranking_model) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["variance_target"] = config.variance_target;
  j["pca_cap"] = config.pca_cap;
  j["k_min"] = config.k_min;
  j["k_max"] = config.k_max;
  j["restarts"] = config.restarts;
  j["quantiles"] = config.quantiles;
  j["min_n"] = config.min_n;
  j["factors"] = factors;
  auto jp = nlohmann::json::array();
  for (const auto& [row, col] : pairs) jp.push_back({row, col});
  j["pairs"] = jp;
  j["ranking_model"] = ranking_model;
  j["bh_adjust"] = config.bh_adjust;
  j["thresholds"] = {{"persist_pp", config.thresholds.persist_pp},
                     {"attenuate", config.thresholds.attenuate}};
  return j;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig config;
  try {
    if (j.contains("stages")) {
      config.stage_discover = false;
      config.stage_stratify = false;
      config.stage_intersect = false;
      for (const auto& stage : j["stages"]) {
        const std::string s = stage.get<std::string>();
        if (s == "discover") {
          config.stage_discover = true;
        } else if (s == "stratify") {
          config.stage_stratify = true;
        } else if (s == "intersect") {
          config.stage_intersect = true;
        } else {
          fail(ErrorCode::InvalidConfig, "unknown stage '" + s + "'");
        }
      }
    }
    config.seed = j.value("seed", 0ULL);
    config.seed_source = j.value("seed_source", std::string("cli"));
    config.variance_target = j.value("variance_target", 0.99);
    config.pca_cap = j.value("pca_cap", 128);
    config.k_min = j.value("k_min", 5);
    config.k_max = j.value("k_max", 20);
    config.restarts = j.value("restarts", 5);
    config.quantiles = j.value("quantiles", 3);
    config.min_n = j.value("min_n", static_cast<size_t>(30));
    config.factors = j.value("factors", std::vector<std::string>{});
    if (j.contains("pairs")) {
      for (const auto& pair : j["pairs"]) {
        config.pairs.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
    }
    config.ranking_model = j.value("ranking_model", std::string());
    config.bh_adjust = j.value("bh_adjust", false);
    if (j.contains("thresholds")) {
      config.thresholds.persist_pp = j["thresholds"].value("persist_pp", 3.0);
      config.thresholds.attenuate = j["thresholds"].value("attenuate", 0.5);
    }
    config.stamp = j.value("stamp", false);
    config.records_path = j.value("records_path", std::string());
    config.schema_path = j.value("schema_path", std::string());
    config.embeddings_path = j.value("embeddings_path", std::string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("run config: ") + e.what());
  }
  return config;
}

std::string compute_audit_id(const RunConfig& config,
                             const std::map<std::string, std::string>& input_digests,
                             const std::vector<std::string>& resolved_factors,
                             const std::vector<std::pair<std::string, std::string>>& resolved_pairs,
                             const std::string& resolved_ranking_model) {
  nlohmann::json key;
  key["inputs"] = input_digests;
  key["params"] = config_echo(config, resolved_factors, resolved_pairs, resolved_ranking_model);
  return sha256_hex(key.dump()).substr(0, 12);
}

AuditOutcome run_audit(const Dataset& dataset, const RunConfig& config,
                       const std::map<std::string, std::string>& input_digests,
                       const std::string& out_dir) {
  if (dataset.model_names.empty()) {
    fail(ErrorCode::InvalidConfig, "dataset has no prediction columns");
  }

  std::vector<std::string> factors = config.factors;
  if (factors.empty()) {
    for (const auto& spec : dataset.schema.factors) factors.push_back(spec.name);
  } else {
    for (const auto& f : factors) dataset.schema.require(f);
  }
  if (factors.empty()) fail(ErrorCode::InvalidConfig, "dataset has no factors to analyze");

  std::vector<std::pair<std::string, std::string>> pairs = config.pairs;
  if (pairs.empty()) {
    for (size_t i = 0; i < factors.size(); ++i) {
      for (size_t j = i + 1; j < factors.size(); ++j) {
        pairs.emplace_back(factors[i], factors[j]);
      }
    }
  } else {
    for (const auto& [row, col] : pairs) {
      dataset.schema.require(row);
      dataset.schema.require(col);
    }
  }

  std::string ranking_model = config.ranking_model;
  if (ranking_model.empty()) {
    ranking_model = dataset.model_names.front();
  } else if (!dataset.has_model(ranking_model)) {
    fail(ErrorCode::UnknownModel, "ranking model '" + ranking_model + "' not in dataset");
  }

  AuditOutcome outcome;
  outcome.audit_id = compute_audit_id(config, input_digests, factors, pairs, ranking_model);

  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  summary["audit_id"] = outcome.audit_id;
  summary["config"] = config_echo(config, factors, pairs, ranking_model);
  summary["config"]["stages"] = nlohmann::json::array();
  if (config.stage_discover) summary["config"]["stages"].push_back("discover");
  if (config.stage_stratify) summary["config"]["stages"].push_back("stratify");
  if (config.stage_intersect) summary["config"]["stages"].push_back("intersect");

  nlohmann::json inputs;
  for (const auto& [name, digest] : input_digests) inputs[name] = {{"sha256", digest}};
  summary["inputs"] = inputs;

  const ValidationReport validation = validate(dataset);
  summary["dataset"] = {{"n_records", dataset.records.size()},
                        {"models", dataset.model_names},
                        {"factors", factors},
                        {"embedded", dataset.embedded_count()},
                        {"validation", validation.to_json()}};

  std::map<std::string, BinningOptions> strategies;
  for (const auto& f : factors) {
    strategies[f] = default_binning_options(dataset.schema.require(f), config.quantiles);
  }

  const std::string prefix = outcome.audit_id + "_";
  std::filesystem::create_directories(out_dir);
  auto write_out = [&](const std::string& name, const std::string& content) {
    write_file((std::filesystem::path(out_dir) / name).string(), content);
    outcome.written.push_back(name);
  };

  std::string started = config.stamp ? iso_timestamp() : std::string();

  // Stage 1
  summary["slice_discovery"] = nullptr;
  if (config.stage_discover) {
    try {
      DiscoveryConfig dc;
      dc.variance_target = config.variance_target;
      dc.cap = config.pca_cap;
      dc.k_min = config.k_min;
      dc.k_max = config.k_max;
      dc.restarts = config.restarts;
      dc.seed = config.seed;
      const SliceResult slices = discover_slices(dataset, ranking_model, dc);
      std::vector<Binning> binnings;
      for (const auto& f : factors) {
        try {
          binnings.push_back(bin_factor(dataset, f, strategies[f]));
        } catch (const Error&) {
          // factors that cannot bin are simply absent from the profiles
        }
      }
      const SliceProfile best = characterize_slice(dataset, slices, slices.best_slice(), binnings);
      const SliceProfile worst =
          characterize_slice(dataset, slices, slices.worst_slice(), binnings);
      const auto divergence = compare_slices(best, worst);

      nlohmann::json js;
      js["result"] = slices.to_json();
      js["best_slice"] = slices.best_slice();
      js["worst_slice"] = slices.worst_slice();
      js["profiles"] = {{"best", best.to_json()}, {"worst", worst.to_json()}};
      auto jd = nlohmann::json::array();
      for (const auto& d : divergence) jd.push_back(d.to_json());
      js["divergence"] = jd;
      summary["slice_discovery"] = js;

      RadarStyle style;
      style.title = "best vs worst slice composition";
      write_out(prefix + "radar_slices.svg", render_radar(slice_share_radar(best, worst), style));
    } catch (const Error& e) {
      summary["slice_discovery"] = {{"error", e.what()}};
    }
  }

  // Stage 2
  summary["stratified"] = nullptr;
  std::optional<StratifiedAnalysis> stratified;
  if (config.stage_stratify) {
    stratified = run_stratified(dataset, factors, dataset.model_names, strategies, config.min_n,
                                config.bh_adjust);
    summary["stratified"] = stratified->to_json();
    RadarStyle style;
    style.title = "best-to-worst MRE gap by factor";
    write_out(prefix + "radar_gaps.svg", render_radar(stratified->radar(), style));
  }

  // Stage 3
  summary["intersectional"] = nullptr;
  if (config.stage_intersect) {
    nlohmann::json ji;
    ji["min_n"] = config.min_n;
    auto jpairs = nlohmann::json::array();
    for (const auto& [row_factor, col_factor] : pairs) {
      nlohmann::json jp;
      jp["row"] = row_factor;
      jp["col"] = col_factor;
      try {
        const Binning row_binning = bin_factor(dataset, row_factor, strategies[row_factor]);
        const Binning col_binning = bin_factor(dataset, col_factor, strategies[col_factor]);
        const JointGrid grid =
            joint_partition(dataset, row_binning, col_binning, dataset.model_names, config.min_n);
        jp["grid"] = grid.to_json();
        auto jmodels = nlohmann::json::array();
        for (const auto& model : dataset.model_names) {
          nlohmann::json jm;
          jm["model"] = model;
          const GradientSummary gradients = within_stratum_gradients(
              grid, model, col_binning.labels.front(), col_binning.labels.back());
          jm["gradients"] = gradients.to_json();
          try {
            jm["verdict"] = confounding_verdict(gradients, config.thresholds).to_json();
          } catch (const Error& e) {
            jm["verdict"] = nullptr;
            jm["verdict_error"] = e.what();
          }
          jmodels.push_back(jm);
          write_out(prefix + "heatmap_" + sanitize(row_factor) + "_" + sanitize(col_factor) + "_" +
                        sanitize(model) + ".svg",
                    render_heatmap(grid, model));
        }
        jp["by_model"] = jmodels;
      } catch (const Error& e) {
        jp["error"] = e.what();
      }
      jpairs.push_back(jp);
    }
    ji["pairs"] = jpairs;
    summary["intersectional"] = ji;
  }

  if (config.stamp) {
    summary["timestamps"] = {{"started", started}, {"finished", iso_timestamp()}};
  } else {
    summary["timestamps"] = nullptr;
  }

  write_out(prefix + "summary.json", emit_summary(summary));

  nlohmann::json manifest;
  manifest["audit_id"] = outcome.audit_id;
  manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  manifest["seed"] = config.seed;
  manifest["seed_source"] = config.seed_source;
  manifest["config"] = summary["config"];
  manifest["config"]["records_path"] = config.records_path;
  manifest["config"]["schema_path"] = config.schema_path;
  manifest["config"]["embeddings_path"] =
      config.embeddings_path.empty() ? nlohmann::json() : nlohmann::json(config.embeddings_path);
  manifest["inputs"] = inputs;
  std::sort(outcome.written.begin(), outcome.written.end());
  {
    auto outputs = outcome.written;
    outputs.push_back("manifest.json");
    std::sort(outputs.begin(), outputs.end());
    manifest["outputs"] = outputs;
  }
  manifest["timestamp"] = config.stamp ? nlohmann::json(iso_timestamp()) : nlohmann::json();
  write_out("manifest.json", emit_summary(manifest));
  std::sort(outcome.written.begin(), outcome.written.end());

  outcome.summary = summary;
  outcome.manifest = manifest;
  return outcome;
}

}  // namespace biaslens
