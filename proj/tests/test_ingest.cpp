#include <doctest.h>

#include <string>
#include <variant>
#include <vector>

#include "biaslens/ingest.hpp"
#include "support/fixtures.hpp"

using namespace biaslens;
using fixtures::TempDir;

namespace {

const char* kSchema = R"({"factors": [
  {"name": "ga_weeks", "kind": "continuous", "unit": "weeks"},
  {"name": "device", "kind": "categorical", "categories": ["x1", "x2"]}
]})";

}  // namespace

TEST_CASE("three-row csv with one model loads verbatim") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,3100,38.5,x1\n"
                  "b,3200,3150,39,x2\n"
                  "c,2800,2700,36.25,x1\n");
  const Dataset ds = load_dataset(dir.file("records.csv"), dir.file("schema.json"));
  CHECK(ds.model_names == std::vector<std::string>{"dl"});
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.records[0].id == "a");
  CHECK(ds.records[0].y_true_g == 3000.0);
  CHECK(ds.records[0].predictions.at("dl") == 3100.0);
  CHECK(std::get<double>(ds.records[2].factors.at("ga_weeks")) == 36.25);
  CHECK(std::get<std::string>(ds.records[1].factors.at("device")) == "x2");
  CHECK_FALSE(ds.embedding_dim.has_value());
}

TEST_CASE("negative truth is rejected with the row named") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,3100,38.5,x1\n"
                  "bad,-5,3150,39,x2\n");
  try {
    (void)load_dataset(dir.file("records.csv"), dir.file("schema.json"));
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("missing cells mean missing values, not errors") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,,38.5,\n"
                  "b,3200,3150,,x2\n");
  const Dataset ds = load_dataset(dir.file("records.csv"), dir.file("schema.json"));
  CHECK_FALSE(ds.records[0].has_prediction("dl"));
  CHECK(ds.records[0].factors.count("device") == 0);
  CHECK(ds.records[1].factors.count("ga_weeks") == 0);
  CHECK(ds.records[1].has_prediction("dl"));
}

TEST_CASE("duplicate ids are rejected") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,3100,38.5,x1\n"
                  "a,3200,3150,39,x2\n");
  try {
    (void)load_dataset(dir.file("records.csv"), dir.file("schema.json"));
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateId);
  }
}

TEST_CASE("columns not in the schema are rejected") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device,mystery\n"
                  "a,3000,3100,38.5,x1,7\n");
  try {
    (void)load_dataset(dir.file("records.csv"), dir.file("schema.json"));
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
}

TEST_CASE("embedding dimension mismatch is rejected") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,3100,38.5,x1\n"
                  "b,3200,3150,39,x2\n");
  fixtures::spill(dir.file("emb.csv"),
                  "id,e0,e1,e2\n"
                  "a,1,2,3\n"
                  "b,4,5\n");
  try {
    (void)load_dataset(dir.file("records.csv"), dir.file("schema.json"), dir.file("emb.csv"));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("csv embeddings attach to the right records") {
  TempDir dir;
  fixtures::spill(dir.file("schema.json"), kSchema);
  fixtures::spill(dir.file("records.csv"),
                  "id,y_true_g,pred_dl_g,ga_weeks,device\n"
                  "a,3000,3100,38.5,x1\n"
                  "b,3200,3150,39,x2\n");
  fixtures::spill(dir.file("emb.csv"),
                  "id,e0,e1,e2\n"
                  "b,4,5,6\n");
  const Dataset ds =
      load_dataset(dir.file("records.csv"), dir.file("schema.json"), dir.file("emb.csv"));
  REQUIRE(ds.embedding_dim.has_value());
  CHECK(*ds.embedding_dim == 3);
  CHECK(ds.embedded_count() == 1);
  CHECK_FALSE(ds.records[0].embedding.has_value());
  REQUIRE(ds.records[1].embedding.has_value());
  CHECK((*ds.records[1].embedding)[2] == 6.0f);
  CHECK(ds.embedded_indices() == std::vector<size_t>{1});
}

TEST_CASE("save and reload round-trips losslessly") {
  TempDir dir;
  Dataset ds = fixtures::tiny_dataset(25);
  for (size_t i = 0; i < ds.records.size(); ++i) {
    if (i % 3 == 0) {
      ds.records[i].embedding = std::vector<float>{static_cast<float>(i), 0.5f, -2.25f};
    }
  }
  ds.embedding_dim = 3;
  ds.records[4].predictions.erase("m2");
  ds.records[7].factors.erase("age");

  save_records_csv(ds, dir.file("r.csv"));
  save_schema_json(ds, dir.file("s.json"));
  save_embeddings_binary(ds, dir.file("e.bin"));
  const Dataset back = load_dataset(dir.file("r.csv"), dir.file("s.json"), dir.file("e.bin"));

  REQUIRE(back.records.size() == ds.records.size());
  CHECK(back.model_names == ds.model_names);
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const Record& x = ds.records[i];
    const Record& y = back.records[i];
    CHECK(x.id == y.id);
    CHECK(x.y_true_g == y.y_true_g);
    CHECK(x.predictions == y.predictions);
    CHECK(x.factors == y.factors);
    CHECK(x.embedding == y.embedding);
  }

  // The CSV flavor of the sidecar carries the same payload.
  save_embeddings_csv(ds, dir.file("e.csv"));
  const Dataset via_csv = load_dataset(dir.file("r.csv"), dir.file("s.json"), dir.file("e.csv"));
  for (size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(via_csv.records[i].embedding == ds.records[i].embedding);
  }
}

TEST_CASE("schema parsing rejects bad kinds and duplicates") {
  TempDir dir;
  fixtures::spill(dir.file("records.csv"), "id,y_true_g,pred_dl_g\na,3000,3100\n");
  fixtures::spill(dir.file("bad_kind.json"),
                  R"({"factors": [{"name": "x", "kind": "fuzzy"}]})");
  CHECK_THROWS_AS((void)load_dataset(dir.file("records.csv"), dir.file("bad_kind.json")), Error);
  fixtures::spill(dir.file("dup.json"),
                  R"({"factors": [{"name": "x", "kind": "continuous"},
                                  {"name": "x", "kind": "continuous"}]})");
  try {
    (void)load_dataset(dir.file("records.csv"), dir.file("dup.json"));
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
}

TEST_CASE("validation reports missingness, coverage, and warnings") {
  Dataset ds = fixtures::tiny_dataset(10);
  ds.records[0].factors.erase("age");
  ds.records[5].factors.erase("age");
  ds.records[1].predictions.erase("m2");
  const ValidationReport report = validate(ds);
  CHECK(report.n_records == 10);
  CHECK(report.factor_missingness.at("age") == doctest::Approx(0.2));
  CHECK(report.factor_missingness.at("site") == 0.0);
  CHECK(report.model_coverage.at("m1") == 1.0);
  CHECK(report.model_coverage.at("m2") == doctest::Approx(0.9));
  CHECK(report.embedding_coverage == 0.0);
  bool warned = false;
  for (const auto& w : report.warnings) {
    if (w.find("slice discovery") != std::string::npos) warned = true;
  }
  CHECK(warned);

  const auto j = report.to_json();
  CHECK(j["n_records"] == 10);
  CHECK(j["factor_missingness"]["age"] == doctest::Approx(0.2));
}
