// Shared test fixtures: scratch directories and tiny dataset builders.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biaslens/dataset.hpp"

namespace fixtures {

class TempDir {
 public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("biaslens_test_" + std::to_string(counter.fetch_add(1)) + "_" +
                    std::to_string(std::hash<const void*>{}(this) & 0xffff));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// A small fully-populated in-memory dataset: two models, one continuous and
// one categorical factor, deterministic values.
inline biaslens::Dataset tiny_dataset(size_t n = 40) {
  biaslens::Dataset ds;
  biaslens::FactorSpec age;
  age.name = "age";
  age.kind = biaslens::FactorKind::continuous;
  biaslens::FactorSpec site;
  site.name = "site";
  site.kind = biaslens::FactorKind::categorical;
  site.categories = {"a", "b"};
  ds.schema.factors = {age, site};
  ds.model_names = {"m1", "m2"};
  for (size_t i = 0; i < n; ++i) {
    biaslens::Record rec;
    rec.id = "r" + std::to_string(i);
    rec.y_true_g = 1000.0 + 10.0 * static_cast<double>(i);
    const double e1 = 0.05 + 0.001 * static_cast<double>(i % 7);
    const double e2 = 0.08 - 0.002 * static_cast<double>(i % 5);
    rec.predictions["m1"] = rec.y_true_g * (1.0 + (i % 2 == 0 ? e1 : -e1));
    rec.predictions["m2"] = rec.y_true_g * (1.0 + (i % 3 == 0 ? -e2 : e2));
    rec.factors["age"] = 20.0 + static_cast<double>(i);
    rec.factors["site"] = std::string(i % 2 == 0 ? "a" : "b");
    ds.records.push_back(rec);
  }
  return ds;
}

}  // namespace fixtures
