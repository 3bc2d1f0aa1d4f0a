// Core data model: prediction records, the factor schema, and the dataset container.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "biaslens/common.hpp"

namespace biaslens {

enum class FactorKind { continuous, categorical };

const char* to_string(FactorKind kind);
FactorKind factor_kind_from_string(const std::string& s);

struct FactorSpec {
  std::string name;
  FactorKind kind = FactorKind::continuous;
  std::string unit;
  std::vector<double> cutpoints;        // optional fixed interior cut-points, strictly increasing
  std::vector<std::string> categories;  // optional category order
};

struct FactorSchema {
  std::vector<FactorSpec> factors;

  const FactorSpec* find(const std::string& name) const;
  const FactorSpec& require(const std::string& name) const;
  // Checks name uniqueness and cut-point ordering.
  void validate() const;

  nlohmann::json to_json() const;
  static FactorSchema from_json(const nlohmann::json& j);
};

// A factor value is a number (continuous) or a category label. Missing values
// are simply absent from Record::factors.
using FactorValue = std::variant<double, std::string>;

struct Record {
  std::string id;
  double y_true_g = 0.0;
  std::map<std::string, double> predictions;  // model name -> grams
  std::optional<std::vector<float>> embedding;
  std::map<std::string, FactorValue> factors;

  bool has_prediction(const std::string& model) const { return predictions.count(model) > 0; }
};

struct Dataset {
  std::vector<Record> records;
  FactorSchema schema;
  std::optional<uint32_t> embedding_dim;
  std::vector<std::string> model_names;  // ordered as in the records header

  size_t embedded_count() const;
  bool has_model(const std::string& name) const;

  // Indices of records that carry an embedding, in record order.
  std::vector<size_t> embedded_indices() const;
};

struct ValidationReport {
  size_t n_records = 0;
  std::map<std::string, double> factor_missingness;  // factor -> fraction missing
  std::map<std::string, double> model_coverage;      // model -> fraction with a prediction
  double embedding_coverage = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

}  // namespace biaslens
