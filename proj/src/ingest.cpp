#include "biaslens/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <set>
#include <sstream>

namespace biaslens {

const char* to_string(FactorKind kind) {
  return kind == FactorKind::continuous ? "continuous" : "categorical";
}

FactorKind factor_kind_from_string(const std::string& s) {
  if (s == "continuous") return FactorKind::continuous;
  if (s == "categorical") return FactorKind::categorical;
  fail(ErrorCode::SchemaMismatch, "unknown factor kind '" + s + "'");
}

const FactorSpec* FactorSchema::find(const std::string& name) const {
  for (const auto& f : factors) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FactorSpec& FactorSchema::require(const std::string& name) const {
  if (const FactorSpec* f = find(name)) return *f;
  fail(ErrorCode::UnknownFactor, "factor '" + name + "' not in schema");
}

void FactorSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& f : factors) {
    if (f.name.empty()) fail(ErrorCode::SchemaMismatch, "factor with empty name");
    if (!seen.insert(f.name).second) {
      fail(ErrorCode::SchemaMismatch, "duplicate factor name '" + f.name + "'");
    }
    for (size_t i = 1; i < f.cutpoints.size(); ++i) {
      if (!(f.cutpoints[i - 1] < f.cutpoints[i])) {
        fail(ErrorCode::SchemaMismatch, "cutpoints for '" + f.name + "' not strictly increasing");
      }
    }
  }
}

nlohmann::json FactorSchema::to_json() const {
  nlohmann::json out;
  out["factors"] = nlohmann::json::array();
  for (const auto& f : factors) {
    nlohmann::json jf;
    jf["name"] = f.name;
    jf["kind"] = to_string(f.kind);
    jf["unit"] = f.unit;
    if (!f.cutpoints.empty()) jf["cutpoints"] = f.cutpoints;
    if (!f.categories.empty()) jf["categories"] = f.categories;
    out["factors"].push_back(jf);
  }
  return out;
}

FactorSchema FactorSchema::from_json(const nlohmann::json& j) {
  FactorSchema schema;
  if (!j.contains("factors") || !j["factors"].is_array()) {
    fail(ErrorCode::ParseError, "schema JSON lacks a 'factors' array");
  }
  for (const auto& jf : j["factors"]) {
    FactorSpec f;
    f.name = jf.at("name").get<std::string>();
    f.kind = factor_kind_from_string(jf.at("kind").get<std::string>());
    f.unit = jf.value("unit", std::string());
    if (jf.contains("cutpoints")) f.cutpoints = jf["cutpoints"].get<std::vector<double>>();
    if (jf.contains("categories")) f.categories = jf["categories"].get<std::vector<std::string>>();
    schema.factors.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

size_t Dataset::embedded_count() const {
  size_t n = 0;
  for (const auto& r : records) {
    if (r.embedding) ++n;
  }
  return n;
}

bool Dataset::has_model(const std::string& name) const {
  return std::find(model_names.begin(), model_names.end(), name) != model_names.end();
}

std::vector<size_t> Dataset::embedded_indices() const {
  std::vector<size_t> idx;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].embedding) idx.push_back(i);
  }
  return idx;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json out;
  out["n_records"] = n_records;
  out["factor_missingness"] = factor_missingness;
  out["model_coverage"] = model_coverage;
  out["embedding_coverage"] = embedding_coverage;
  out["warnings"] = warnings;
  return out;
}

namespace {

// Minimal RFC-style CSV: quoted fields with "" escapes, no embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line, size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": stray quote");
      }
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

double parse_number(const std::string& field, const std::string& what, size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line_no) + ": " + what + " is not a number ('" + field + "')");
  }
  return value;
}

std::vector<std::string> read_lines(const std::string& content) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : content) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

struct HeaderLayout {
  int id_col = -1;
  int y_true_col = -1;
  std::vector<std::pair<int, std::string>> pred_cols;    // column -> model name
  std::vector<std::pair<int, std::string>> factor_cols;  // column -> factor name
};

HeaderLayout parse_header(const std::vector<std::string>& header, const FactorSchema& schema) {
  HeaderLayout layout;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "id") {
      layout.id_col = static_cast<int>(c);
    } else if (name == "y_true_g") {
      layout.y_true_col = static_cast<int>(c);
    } else if (name.rfind("pred_", 0) == 0 && name.size() > 7 && name.compare(name.size() - 2, 2, "_g") == 0) {
      layout.pred_cols.emplace_back(static_cast<int>(c), name.substr(5, name.size() - 7));
    } else if (schema.find(name)) {
      layout.factor_cols.emplace_back(static_cast<int>(c), name);
    } else {
      fail(ErrorCode::SchemaMismatch, "column '" + name + "' is not declared in the schema");
    }
  }
  if (layout.id_col < 0) fail(ErrorCode::ParseError, "records header lacks an 'id' column");
  if (layout.y_true_col < 0) fail(ErrorCode::ParseError, "records header lacks a 'y_true_g' column");
  return layout;
}

void attach_embedding(Dataset& dataset, std::map<std::string, size_t>& index, const std::string& id,
                      std::vector<float> vec, uint32_t dim, const std::string& origin) {
  auto it = index.find(id);
  if (it == index.end()) {
    fail(ErrorCode::ParseError, origin + ": embedding for unknown record id '" + id + "'");
  }
  if (vec.size() != dim) {
    fail(ErrorCode::DimensionMismatch,
         origin + ": embedding for '" + id + "' has length " + std::to_string(vec.size()) +
             ", expected " + std::to_string(dim));
  }
  dataset.records[it->second].embedding = std::move(vec);
}

void load_embeddings_csv(Dataset& dataset, std::map<std::string, size_t>& index,
                         const std::string& content, const std::string& path) {
  const auto lines = read_lines(content);
  if (lines.empty()) fail(ErrorCode::ParseError, path + ": empty embeddings file");
  const auto header = split_csv_line(lines[0], 1);
  if (header.size() < 2 || header[0] != "id") {
    fail(ErrorCode::ParseError, path + ": embeddings header must start with 'id'");
  }
  const uint32_t dim = static_cast<uint32_t>(header.size() - 1);
  dataset.embedding_dim = dim;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_csv_line(lines[li], li + 1);
    if (fields.size() != header.size()) {
      fail(ErrorCode::DimensionMismatch,
           path + " line " + std::to_string(li + 1) + ": expected " + std::to_string(dim) +
               " values, got " + std::to_string(fields.size() - 1));
    }
    std::vector<float> vec(dim);
    for (uint32_t d = 0; d < dim; ++d) {
      vec[d] = static_cast<float>(parse_number(fields[d + 1], "embedding value", li + 1));
    }
    attach_embedding(dataset, index, fields[0], std::move(vec), dim, path);
  }
}

void load_embeddings_binary(Dataset& dataset, std::map<std::string, size_t>& index,
                            const std::string& content, const std::string& path) {
  size_t pos = 4;  // past magic
  auto need = [&](size_t bytes, const char* what) {
    if (pos + bytes > content.size()) {
      fail(ErrorCode::ParseError, path + ": truncated embeddings file (" + what + ")");
    }
  };
  auto read_u32 = [&](const char* what) {
    need(4, what);
    uint32_t v;
    std::memcpy(&v, content.data() + pos, 4);
    pos += 4;
    return v;
  };
  const uint32_t count = read_u32("count");
  const uint32_t dim = read_u32("dimension");
  dataset.embedding_dim = dim;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t id_len = read_u32("id length");
    need(id_len, "id");
    std::string id(content.data() + pos, id_len);
    pos += id_len;
    need(4ull * dim, "vector");
    std::vector<float> vec(dim);
    std::memcpy(vec.data(), content.data() + pos, 4ull * dim);
    pos += 4ull * dim;
    attach_embedding(dataset, index, id, std::move(vec), dim, path);
  }
  if (pos != content.size()) {
    fail(ErrorCode::ParseError, path + ": trailing bytes after last embedding");
  }
}

}  // namespace

Dataset load_dataset(const std::string& records_path, const std::string& schema_path,
                     const std::optional<std::string>& embeddings_path) {
  Dataset dataset;
  dataset.schema = FactorSchema::from_json(nlohmann::json::parse(read_file(schema_path)));

  const auto lines = read_lines(read_file(records_path));
  if (lines.empty()) fail(ErrorCode::ParseError, records_path + ": empty records file");
  const auto header = split_csv_line(lines[0], 1);
  const HeaderLayout layout = parse_header(header, dataset.schema);
  for (const auto& [col, model] : layout.pred_cols) {
    (void)col;
    dataset.model_names.push_back(model);
  }

  std::map<std::string, size_t> index;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const size_t line_no = li + 1;
    const auto fields = split_csv_line(lines[li], line_no);
    if (fields.size() != header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    Record rec;
    rec.id = fields[layout.id_col];
    if (rec.id.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty id");
    rec.y_true_g = parse_number(fields[layout.y_true_col], "y_true_g", line_no);
    if (!(rec.y_true_g > 0)) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": y_true_g must be > 0 (got " +
                                      fields[layout.y_true_col] + ")");
    }
    for (const auto& [col, model] : layout.pred_cols) {
      const std::string& cell = fields[col];
      if (cell.empty()) continue;  // missing prediction
      const double pred = parse_number(cell, "pred_" + model + "_g", line_no);
      if (!(pred > 0)) {
        fail(ErrorCode::ParseError,
             "line " + std::to_string(line_no) + ": prediction for '" + model + "' must be > 0");
      }
      rec.predictions[model] = pred;
    }
    for (const auto& [col, factor] : layout.factor_cols) {
      const std::string& cell = fields[col];
      if (cell.empty()) continue;  // missing factor value
      const FactorSpec& spec = dataset.schema.require(factor);
      if (spec.kind == FactorKind::continuous) {
        rec.factors[factor] = parse_number(cell, "factor '" + factor + "'", line_no);
      } else {
        rec.factors[factor] = cell;
      }
    }
    if (!index.emplace(rec.id, dataset.records.size()).second) {
      fail(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": duplicate id '" + rec.id + "'");
    }
    dataset.records.push_back(std::move(rec));
  }

  if (embeddings_path) {
    const std::string content = read_file(*embeddings_path);
    if (content.size() >= 4 && content.compare(0, 4, "BLNS") == 0) {
      load_embeddings_binary(dataset, index, content, *embeddings_path);
    } else {
      load_embeddings_csv(dataset, index, content, *embeddings_path);
    }
  }
  return dataset;
}

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  report.n_records = dataset.records.size();
  const double n = report.n_records > 0 ? static_cast<double>(report.n_records) : 1.0;
  for (const auto& f : dataset.schema.factors) {
    size_t missing = 0;
    for (const auto& r : dataset.records) {
      if (!r.factors.count(f.name)) ++missing;
    }
    report.factor_missingness[f.name] = static_cast<double>(missing) / n;
  }
  for (const auto& m : dataset.model_names) {
    size_t covered = 0;
    for (const auto& r : dataset.records) {
      if (r.has_prediction(m)) ++covered;
    }
    report.model_coverage[m] = static_cast<double>(covered) / n;
    if (covered == 0) report.warnings.push_back("model '" + m + "' has no predictions");
  }
  report.embedding_coverage = static_cast<double>(dataset.embedded_count()) / n;
  if (report.embedding_coverage == 0.0) {
    report.warnings.push_back("no embeddings present; slice discovery is unavailable");
  }
  return report;
}

void save_records_csv(const Dataset& dataset, const std::string& path) {
  std::ostringstream out;
  out << "id,y_true_g";
  for (const auto& m : dataset.model_names) out << ",pred_" << m << "_g";
  for (const auto& f : dataset.schema.factors) out << "," << csv_escape(f.name);
  out << "\n";
  for (const auto& r : dataset.records) {
    out << csv_escape(r.id) << "," << format_double(r.y_true_g);
    for (const auto& m : dataset.model_names) {
      out << ",";
      auto it = r.predictions.find(m);
      if (it != r.predictions.end()) out << format_double(it->second);
    }
    for (const auto& f : dataset.schema.factors) {
      out << ",";
      auto it = r.factors.find(f.name);
      if (it == r.factors.end()) continue;
      if (const double* num = std::get_if<double>(&it->second)) {
        out << format_double(*num);
      } else {
        out << csv_escape(std::get<std::string>(it->second));
      }
    }
    out << "\n";
  }
  write_file(path, out.str());
}

void save_schema_json(const Dataset& dataset, const std::string& path) {
  write_file(path, dataset.schema.to_json().dump(2) + "\n");
}

void save_embeddings_binary(const Dataset& dataset, const std::string& path) {
  if (!dataset.embedding_dim) fail(ErrorCode::NoEmbeddings, "dataset has no embeddings to save");
  const uint32_t dim = *dataset.embedding_dim;
  std::string out = "BLNS";
  auto put_u32 = [&](uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); };
  put_u32(static_cast<uint32_t>(dataset.embedded_count()));
  put_u32(dim);
  for (const auto& r : dataset.records) {
    if (!r.embedding) continue;
    put_u32(static_cast<uint32_t>(r.id.size()));
    out.append(r.id);
    out.append(reinterpret_cast<const char*>(r.embedding->data()), 4ull * dim);
  }
  write_file(path, out);
}

void save_embeddings_csv(const Dataset& dataset, const std::string& path) {
  if (!dataset.embedding_dim) fail(ErrorCode::NoEmbeddings, "dataset has no embeddings to save");
  const uint32_t dim = *dataset.embedding_dim;
  std::ostringstream out;
  out << "id";
  for (uint32_t d = 0; d < dim; ++d) out << ",e" << d;
  out << "\n";
  for (const auto& r : dataset.records) {
    if (!r.embedding) continue;
    out << csv_escape(r.id);
    for (uint32_t d = 0; d < dim; ++d) out << "," << format_double((*r.embedding)[d]);
    out << "\n";
  }
  write_file(path, out.str());
}

}  // namespace biaslens
