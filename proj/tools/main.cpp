// biaslens command line tool. Talks to the library through the public C
// interface only.
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biaslens.h"

namespace {

struct OwnedStr {
  char* p = nullptr;
  ~OwnedStr() { bl_string_free(p); }
  OwnedStr() = default;
  OwnedStr(const OwnedStr&) = delete;
  OwnedStr& operator=(const OwnedStr&) = delete;
};

struct OwnedDataset {
  bl_dataset* p = nullptr;
  ~OwnedDataset() { bl_dataset_free(p); }
  OwnedDataset() = default;
  OwnedDataset(const OwnedDataset&) = delete;
  OwnedDataset& operator=(const OwnedDataset&) = delete;
};

struct AuditOpts {
  std::string records;
  std::string schema;
  std::string embeddings;
  std::string out;
  std::optional<uint64_t> seed;
  double variance_target = 0.99;
  int pca_cap = 128;
  int k_min = 5;
  int k_max = 20;
  int restarts = 5;
  int quantiles = 3;
  uint64_t min_n = 30;
  std::vector<std::string> factors;
  std::vector<std::string> pairs;  // "row:col" entries
  std::string ranking_model;
  bool bh_adjust = false;
  bool stamp = false;
  double persist_pp = 3.0;
  double attenuate = 0.5;
};

void add_audit_options(CLI::App* cmd, AuditOpts& o) {
  cmd->add_option("--records", o.records, "records CSV")->required();
  cmd->add_option("--schema", o.schema, "factor schema JSON")->required();
  cmd->add_option("--embeddings", o.embeddings, "embeddings CSV or binary sidecar");
  cmd->add_option("--out", o.out, "output directory")->required();
  cmd->add_option("--seed", o.seed, "RNG seed (default: drawn from system entropy)");
  cmd->add_option("--variance-target", o.variance_target, "PCA retained-variance target");
  cmd->add_option("--pca-cap", o.pca_cap, "PCA dimension cap");
  cmd->add_option("--k-min", o.k_min, "smallest cluster count to try");
  cmd->add_option("--k-max", o.k_max, "largest cluster count to try");
  cmd->add_option("--restarts", o.restarts, "EM restarts per cluster count");
  cmd->add_option("--quantiles", o.quantiles, "quantile bin count for continuous factors");
  cmd->add_option("--min-n", o.min_n, "minimum stratum size");
  cmd->add_option("--factors", o.factors, "factors to analyze (default: all)")->delimiter(',');
  cmd->add_option("--pairs", o.pairs, "factor pairs row:col (default: all pairs)")
      ->delimiter(',');
  cmd->add_option("--ranking-model", o.ranking_model, "model that orders slices");
  cmd->add_flag("--bh-adjust", o.bh_adjust, "Benjamini-Hochberg adjust gap p-values");
  cmd->add_option("--persist-pp", o.persist_pp, "verdict: persisting-gradient bound, pp");
  cmd->add_option("--attenuate", o.attenuate, "verdict: attenuation threshold");
  cmd->add_flag("--stamp", o.stamp, "record wall-clock timestamps (breaks byte determinism)");
}

uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<uint64_t>(rd()) << 32) ^ static_cast<uint64_t>(rd());
}

int fail_usage(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 2;
}

int report_error(bl_status status) {
  std::cerr << "error: " << bl_last_error() << "\n";
  return status == BL_ERR_ARGUMENT ? 2 : 1;
}

bool parse_pairs(const std::vector<std::string>& raw, nlohmann::json& out, std::string& message) {
  out = nlohmann::json::array();
  for (const auto& entry : raw) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == entry.size()) {
      message = "bad pair '" + entry + "', expected row:col";
      return false;
    }
    out.push_back({entry.substr(0, colon), entry.substr(colon + 1)});
  }
  return true;
}

nlohmann::json build_config(const AuditOpts& o, const std::vector<std::string>& stages,
                            uint64_t seed, const std::string& seed_source,
                            const nlohmann::json& pairs) {
  nlohmann::json j;
  if (!stages.empty()) j["stages"] = stages;
  j["seed"] = seed;
  j["seed_source"] = seed_source;
  j["variance_target"] = o.variance_target;
  j["pca_cap"] = o.pca_cap;
  j["k_min"] = o.k_min;
  j["k_max"] = o.k_max;
  j["restarts"] = o.restarts;
  j["quantiles"] = o.quantiles;
  j["min_n"] = o.min_n;
  if (!o.factors.empty()) j["factors"] = o.factors;
  if (!pairs.empty()) j["pairs"] = pairs;
  if (!o.ranking_model.empty()) j["ranking_model"] = o.ranking_model;
  j["bh_adjust"] = o.bh_adjust;
  j["thresholds"] = {{"persist_pp", o.persist_pp}, {"attenuate", o.attenuate}};
  j["stamp"] = o.stamp;
  return j;
}

int run_pipeline(const AuditOpts& o, const std::vector<std::string>& stages) {
  nlohmann::json pairs;
  std::string message;
  if (!parse_pairs(o.pairs, pairs, message)) return fail_usage(message);

  const uint64_t seed = o.seed ? *o.seed : entropy_seed();
  const std::string seed_source = o.seed ? "cli" : "entropy";
  const auto config = build_config(o, stages, seed, seed_source, pairs);

  OwnedDataset ds;
  bl_status st = bl_dataset_load(o.records.c_str(), o.schema.c_str(),
                                 o.embeddings.empty() ? nullptr : o.embeddings.c_str(), &ds.p);
  if (st != BL_OK) return report_error(st);

  OwnedStr summary;
  st = bl_run_audit(ds.p, config.dump().c_str(), o.out.c_str(), &summary.p);
  if (st != BL_OK) return report_error(st);

  const auto doc = nlohmann::json::parse(summary.p);
  std::cout << doc.value("audit_id", std::string()) << "\n";
  return 0;
}

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct SynthOpts {
  std::string scenario;
  std::string config_path;
  std::string out;
  uint64_t n = 20000;
  std::optional<uint64_t> seed;
  bool audit = false;
  AuditOpts audit_opts;  // analysis knobs for --audit
};

int run_synth(const SynthOpts& o) {
  if (o.scenario.empty() && o.config_path.empty()) {
    return fail_usage("one of --scenario or --config is required");
  }

  std::string config_text;
  uint64_t seed = o.seed ? *o.seed : entropy_seed();
  if (!o.scenario.empty()) {
    OwnedStr cfg;
    const bl_status st = bl_synth_scenario(o.scenario.c_str(), o.n, seed, &cfg.p);
    if (st != BL_OK) return report_error(st);
    config_text = cfg.p;
  } else {
    const auto text = slurp(o.config_path);
    if (!text) {
      std::cerr << "error: cannot read " << o.config_path << "\n";
      return 1;
    }
    config_text = *text;
  }

  OwnedStr files;
  bl_status st = bl_synth_generate(config_text.c_str(), o.out.c_str(), &files.p);
  if (st != BL_OK) return report_error(st);
  std::cout << files.p << "\n";
  if (!o.audit) return 0;

  nlohmann::json config_doc;
  nlohmann::json file_list;
  try {
    config_doc = nlohmann::json::parse(config_text);
    file_list = nlohmann::json::parse(files.p);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const std::filesystem::path base(o.out);
  const bool has_embeddings =
      std::find(file_list.begin(), file_list.end(), nlohmann::json("embeddings.bin")) !=
      file_list.end();

  AuditOpts a = o.audit_opts;
  a.records = (base / "records.csv").string();
  a.schema = (base / "schema.json").string();
  if (has_embeddings) a.embeddings = (base / "embeddings.bin").string();
  a.out = o.out;
  a.seed = config_doc.value("seed", seed);
  const std::string row = config_doc.value("verdict_row", std::string());
  const std::string col = config_doc.value("verdict_col", std::string());
  nlohmann::json pairs = nlohmann::json::array();
  if (!row.empty() && !col.empty()) pairs.push_back({row, col});

  OwnedDataset ds;
  st = bl_dataset_load(a.records.c_str(), a.schema.c_str(),
                       a.embeddings.empty() ? nullptr : a.embeddings.c_str(), &ds.p);
  if (st != BL_OK) return report_error(st);

  const auto audit_config = build_config(a, {}, *a.seed, "cli", pairs);
  OwnedStr summary;
  st = bl_run_audit(ds.p, audit_config.dump().c_str(), o.out.c_str(), &summary.p);
  if (st != BL_OK) return report_error(st);

  const auto truth = slurp((base / "truth.json").string());
  if (!truth) {
    std::cerr << "error: cannot read generated truth.json\n";
    return 1;
  }
  OwnedStr recovery;
  st = bl_score_recovery(truth->c_str(), summary.p, &recovery.p);
  if (st != BL_OK) return report_error(st);
  std::ofstream rec((base / "recovery.json").string(), std::ios::binary);
  rec << recovery.p;
  if (!rec) {
    std::cerr << "error: cannot write recovery.json\n";
    return 1;
  }
  std::cout << nlohmann::json::parse(recovery.p).dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biaslens: audit regression models for intersectional error disparities"};
  app.require_subcommand(1);

  int rc = 0;

  AuditOpts discover_opts;
  auto* discover = app.add_subcommand("discover", "stage 1: embedding slice discovery");
  add_audit_options(discover, discover_opts);
  discover->callback([&] { rc = run_pipeline(discover_opts, {"discover"}); });

  AuditOpts stratify_opts;
  auto* stratify = app.add_subcommand("stratify", "stage 2: stratified factor analysis");
  add_audit_options(stratify, stratify_opts);
  stratify->callback([&] { rc = run_pipeline(stratify_opts, {"stratify"}); });

  AuditOpts intersect_opts;
  auto* intersect = app.add_subcommand("intersect", "stage 3: intersectional confounding");
  add_audit_options(intersect, intersect_opts);
  intersect->callback([&] { rc = run_pipeline(intersect_opts, {"intersect"}); });

  AuditOpts audit_opts;
  auto* audit = app.add_subcommand("audit", "run all three stages");
  add_audit_options(audit, audit_opts);
  audit->callback([&] { rc = run_pipeline(audit_opts, {}); });

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  auto* scn = synth->add_option("--scenario", synth_opts.scenario,
                                "built-in scenario: independent or confounded");
  auto* cfg = synth->add_option("--config", synth_opts.config_path, "generator config JSON");
  scn->excludes(cfg);
  synth->add_option("--n", synth_opts.n, "record count (with --scenario)");
  synth->add_option("--seed", synth_opts.seed, "RNG seed (default: drawn from system entropy)");
  synth->add_option("--out", synth_opts.out, "output directory")->required();
  synth->add_flag("--audit", synth_opts.audit, "audit the generated data and score recovery");
  synth->add_option("--quantiles", synth_opts.audit_opts.quantiles, "audit: quantile bin count");
  synth->add_option("--min-n", synth_opts.audit_opts.min_n, "audit: minimum stratum size");
  synth->add_option("--k-min", synth_opts.audit_opts.k_min, "audit: smallest cluster count");
  synth->add_option("--k-max", synth_opts.audit_opts.k_max, "audit: largest cluster count");
  synth->callback([&] { rc = run_synth(synth_opts); });

  double hc = 0.0, ac = 0.0, fl = 0.0;
  auto* efw = app.add_subcommand("efw", "Hadlock estimated fetal weight, grams");
  efw->add_option("--hc", hc, "head circumference, cm")->required();
  efw->add_option("--ac", ac, "abdominal circumference, cm")->required();
  efw->add_option("--fl", fl, "femur length, cm")->required();
  efw->callback([&] {
    double grams = 0.0;
    const bl_status st = bl_hadlock_efw(hc, ac, fl, &grams);
    if (st != BL_OK) {
      rc = report_error(st);
      return;
    }
    std::cout << nlohmann::json(grams).dump() << "\n";
  });

  std::string v_records, v_schema, v_embeddings;
  auto* validate = app.add_subcommand("validate", "check dataset files and report coverage");
  validate->add_option("--records", v_records, "records CSV")->required();
  validate->add_option("--schema", v_schema, "factor schema JSON")->required();
  validate->add_option("--embeddings", v_embeddings, "embeddings CSV or binary sidecar");
  validate->callback([&] {
    OwnedDataset ds;
    bl_status st = bl_dataset_load(v_records.c_str(), v_schema.c_str(),
                                   v_embeddings.empty() ? nullptr : v_embeddings.c_str(), &ds.p);
    if (st != BL_OK) {
      rc = report_error(st);
      return;
    }
    OwnedStr report;
    st = bl_dataset_validate(ds.p, &report.p);
    if (st != BL_OK) {
      rc = report_error(st);
      return;
    }
    std::cout << report.p;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
