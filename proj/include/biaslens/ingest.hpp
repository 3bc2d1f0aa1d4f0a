// Loading, validating and writing datasets.
//
// File formats:
//   records:    CSV with header. Required columns `id`, `y_true_g`; one
//               `pred_<model>_g` column per model; one column per schema factor.
//               An empty cell is a missing value.
//   schema:     JSON: {"factors": [{"name", "kind", "unit", "cutpoints"?, "categories"?}]}
//   embeddings: either CSV `id,e0,...,e<D-1>` or a binary sidecar:
//               magic "BLNS", u32le count, u32le dimension, then per record
//               u32le id length, the UTF-8 id, and `dimension` f32le values.
#pragma once

#include <optional>
#include <string>

#include "biaslens/dataset.hpp"

namespace biaslens {

Dataset load_dataset(const std::string& records_path, const std::string& schema_path,
                     const std::optional<std::string>& embeddings_path = std::nullopt);

// Report-only: missingness, coverage, warnings. Never mutates the dataset.
ValidationReport validate(const Dataset& dataset);

// Writers for the same formats load_dataset reads. Numeric cells use the
// shortest round-trip representation, so load -> save -> load is lossless.
void save_records_csv(const Dataset& dataset, const std::string& path);
void save_schema_json(const Dataset& dataset, const std::string& path);
void save_embeddings_binary(const Dataset& dataset, const std::string& path);
void save_embeddings_csv(const Dataset& dataset, const std::string& path);

}  // namespace biaslens
