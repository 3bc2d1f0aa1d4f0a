#include "biaslens.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/audit.hpp"
#include "biaslens/clinical.hpp"
#include "biaslens/common.hpp"
#include "biaslens/ingest.hpp"
#include "biaslens/report.hpp"
#include "biaslens/synth.hpp"

struct bl_dataset {
  biaslens::Dataset data;
  std::map<std::string, std::string> digests;
  std::string records_path;
  std::string schema_path;
  std::string embeddings_path;  // empty when not loaded
};

namespace {

thread_local std::string t_last_error;

bl_status map_code(biaslens::ErrorCode code) {
  using EC = biaslens::ErrorCode;
  switch (code) {
    case EC::IoError:
      return BL_ERR_IO;
    case EC::ParseError:
    case EC::SchemaMismatch:
    case EC::DuplicateId:
    case EC::InvalidConfig:
      return BL_ERR_PARSE;
    default:
      return BL_ERR_ANALYSIS;
  }
}

bl_status set_error(bl_status status, const std::string& message) {
  t_last_error = message;
  return status;
}

bl_status require(bool ok, const char* what) {
  return ok ? BL_OK : set_error(BL_ERR_ARGUMENT, std::string("argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bl_status emit(char** slot, const nlohmann::json& doc) {
  if (slot == nullptr) return BL_OK;
  *slot = dup_string(biaslens::emit_summary(doc));
  return *slot == nullptr ? set_error(BL_ERR_INTERNAL, "allocation failed") : BL_OK;
}

template <typename Fn>
bl_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const biaslens::Error& e) {
    return set_error(map_code(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(BL_ERR_PARSE, e.what());
  } catch (const std::exception& e) {
    return set_error(BL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(BL_ERR_INTERNAL, "unknown failure");
  }
}

nlohmann::json parse_doc(const char* text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    biaslens::fail(biaslens::ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* bl_version(void) { return biaslens::kToolVersion; }

const char* bl_last_error(void) { return t_last_error.c_str(); }

void bl_string_free(char* s) { std::free(s); }

bl_status bl_dataset_load(const char* records_path, const char* schema_path,
                          const char* embeddings_path, bl_dataset** out) {
  if (auto st = require(records_path && schema_path && out, "paths and out must be non-null"))
    return st;
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<bl_dataset>();
    handle->records_path = records_path;
    handle->schema_path = schema_path;
    std::optional<std::string> emb;
    if (embeddings_path != nullptr && embeddings_path[0] != '\0') {
      emb = embeddings_path;
      handle->embeddings_path = embeddings_path;
    }
    handle->data = biaslens::load_dataset(records_path, schema_path, emb);
    handle->digests["records"] = biaslens::sha256_hex(biaslens::read_file(records_path));
    handle->digests["schema"] = biaslens::sha256_hex(biaslens::read_file(schema_path));
    if (emb) handle->digests["embeddings"] = biaslens::sha256_hex(biaslens::read_file(*emb));
    *out = handle.release();
    return BL_OK;
  });
}

void bl_dataset_free(bl_dataset* dataset) { delete dataset; }

bl_status bl_dataset_validate(const bl_dataset* dataset, char** report_json) {
  if (auto st = require(dataset && report_json, "dataset and report_json must be non-null"))
    return st;
  *report_json = nullptr;
  return guarded([&] { return emit(report_json, biaslens::validate(dataset->data).to_json()); });
}

bl_status bl_run_audit(const bl_dataset* dataset, const char* config_json, const char* out_dir,
                       char** summary_json) {
  if (auto st = require(dataset && config_json && out_dir, "dataset, config, out_dir required"))
    return st;
  if (summary_json != nullptr) *summary_json = nullptr;
  return guarded([&] {
    auto config = biaslens::RunConfig::from_json(parse_doc(config_json, "config"));
    config.records_path = dataset->records_path;
    config.schema_path = dataset->schema_path;
    config.embeddings_path = dataset->embeddings_path;
    const auto outcome = biaslens::run_audit(dataset->data, config, dataset->digests, out_dir);
    return emit(summary_json, outcome.summary);
  });
}

bl_status bl_synth_scenario(const char* name, uint64_t n, uint64_t seed, char** config_json) {
  if (auto st = require(name && config_json, "name and config_json must be non-null")) return st;
  *config_json = nullptr;
  return guarded([&] {
    const auto config = biaslens::scenario_by_name(name, static_cast<size_t>(n), seed);
    return emit(config_json, config.to_json());
  });
}

bl_status bl_synth_generate(const char* config_json, const char* out_dir, char** file_list_json) {
  if (auto st = require(config_json && out_dir, "config_json and out_dir must be non-null"))
    return st;
  if (file_list_json != nullptr) *file_list_json = nullptr;
  return guarded([&] {
    const auto config = biaslens::SynthConfig::from_json(parse_doc(config_json, "config"));
    const auto result = biaslens::generate(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      biaslens::fail(biaslens::ErrorCode::IoError,
                     std::string(out_dir) + ": " + ec.message());
    }
    const std::filesystem::path base(out_dir);
    std::vector<std::string> written;
    biaslens::save_records_csv(result.dataset, (base / "records.csv").string());
    written.push_back("records.csv");
    biaslens::save_schema_json(result.dataset, (base / "schema.json").string());
    written.push_back("schema.json");
    if (result.dataset.embedding_dim > 0) {
      biaslens::save_embeddings_binary(result.dataset, (base / "embeddings.bin").string());
      written.push_back("embeddings.bin");
    }
    biaslens::write_file((base / "truth.json").string(),
                         biaslens::emit_summary(result.truth.to_json()));
    written.push_back("truth.json");
    biaslens::write_file((base / "synth_config.json").string(),
                         biaslens::emit_summary(config.to_json()));
    written.push_back("synth_config.json");
    std::sort(written.begin(), written.end());
    return emit(file_list_json, nlohmann::json(written));
  });
}

bl_status bl_score_recovery(const char* truth_json, const char* summary_json,
                            char** report_json) {
  if (auto st = require(truth_json && summary_json && report_json, "all arguments required"))
    return st;
  *report_json = nullptr;
  return guarded([&] {
    const auto truth = biaslens::GroundTruth::from_json(parse_doc(truth_json, "truth"));
    const auto report =
        biaslens::score_recovery_summary(truth, parse_doc(summary_json, "summary"));
    return emit(report_json, report.to_json());
  });
}

bl_status bl_hadlock_efw(double hc_cm, double ac_cm, double fl_cm, double* grams) {
  if (auto st = require(grams != nullptr, "grams must be non-null")) return st;
  return guarded([&] {
    const auto config = biaslens::default_clinical_config();
    *grams = biaslens::hadlock_efw({hc_cm, ac_cm, fl_cm}, config.hadlock);
    return BL_OK;
  });
}

bl_status bl_reference_weight(double birth_weight_g, double ga_scan_days,
                              double ga_delivery_days, double* grams) {
  if (auto st = require(grams != nullptr, "grams must be non-null")) return st;
  return guarded([&] {
    const auto config = biaslens::default_clinical_config();
    *grams = biaslens::reference_weight_at_scan(birth_weight_g, ga_scan_days, ga_delivery_days,
                                                config.curve);
    return BL_OK;
  });
}

}  // extern "C"
