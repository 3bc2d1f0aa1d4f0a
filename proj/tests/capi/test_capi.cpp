// Exercises the shared library through the C interface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include <biaslens.h>

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biaslens_capi_" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Owned {
  char* ptr = nullptr;
  ~Owned() { bl_string_free(ptr); }
  char** slot() { return &ptr; }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

// Generates the independent scenario once and loads it through the C API.
struct Generated {
  TempDir dir;
  std::string config_json;
  bl_dataset* ds = nullptr;

  Generated() {
    Owned config;
    REQUIRE(bl_synth_scenario("independent", 200, 5, config.slot()) == BL_OK);
    config_json = config.str();
    Owned files;
    REQUIRE(bl_synth_generate(config_json.c_str(), dir.file("data").c_str(), files.slot()) ==
            BL_OK);
    const auto list = nlohmann::json::parse(files.str());
    REQUIRE(list.is_array());
    bool has_embeddings = false;
    for (const auto& f : list) {
      if (f == "embeddings.bin") has_embeddings = true;
    }
    REQUIRE(has_embeddings);
    REQUIRE(bl_dataset_load(dir.file("data/records.csv").c_str(),
                            dir.file("data/schema.json").c_str(),
                            dir.file("data/embeddings.bin").c_str(), &ds) == BL_OK);
  }
  ~Generated() { bl_dataset_free(ds); }
};

const char* kFastAudit =
    "{\"stages\":[\"stratify\",\"intersect\"],\"seed\":5,\"min_n\":20,"
    "\"pairs\":[[\"bmi\",\"ps_avg\"]]}";

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(std::string(bl_version()) == "0.1.0");
  CHECK(bl_last_error() != nullptr);
  bl_string_free(nullptr);  // must be a no-op
  bl_dataset_free(nullptr);
}

TEST_CASE("null arguments are rejected") {
  CHECK(bl_dataset_load(nullptr, "x", nullptr, nullptr) == BL_ERR_ARGUMENT);
  bl_dataset* ds = nullptr;
  CHECK(bl_dataset_load("a.csv", nullptr, nullptr, &ds) == BL_ERR_ARGUMENT);
  CHECK(bl_dataset_validate(nullptr, nullptr) == BL_ERR_ARGUMENT);
  CHECK(bl_run_audit(nullptr, "{}", "/tmp/x", nullptr) == BL_ERR_ARGUMENT);
  CHECK(bl_synth_scenario(nullptr, 10, 0, nullptr) == BL_ERR_ARGUMENT);
  CHECK(bl_hadlock_efw(30.0, 26.0, 5.5, nullptr) == BL_ERR_ARGUMENT);
  CHECK(std::string(bl_last_error()).size() > 0);
}

TEST_CASE("missing files surface as IO errors with a message") {
  bl_dataset* ds = nullptr;
  const bl_status rc = bl_dataset_load("/no/such/records.csv", "/no/such/schema.json", nullptr, &ds);
  CHECK(rc == BL_ERR_IO);
  CHECK(ds == nullptr);
  CHECK(std::string(bl_last_error()).find("/no/such") != std::string::npos);
}

TEST_CASE("unknown scenario names fail cleanly") {
  Owned config;
  CHECK(bl_synth_scenario("warp", 10, 0, config.slot()) == BL_ERR_PARSE);
  CHECK(std::string(bl_last_error()).find("warp") != std::string::npos);
}

TEST_CASE("clinical helpers") {
  double grams = 0.0;
  REQUIRE(bl_hadlock_efw(30.0, 26.0, 5.5, &grams) == BL_OK);
  CHECK(grams == doctest::Approx(1543.9029605465623).epsilon(1e-12));

  CHECK(bl_hadlock_efw(-1.0, 26.0, 5.5, &grams) == BL_ERR_ANALYSIS);
  CHECK(std::string(bl_last_error()).size() > 0);

  REQUIRE(bl_reference_weight(3500.0, 250.0, 250.0, &grams) == BL_OK);
  CHECK(grams == 3500.0);
  REQUIRE(bl_reference_weight(3500.0, 200.0, 280.0, &grams) == BL_OK);
  CHECK(grams > 0.0);
  CHECK(grams < 3500.0);
  CHECK(bl_reference_weight(3500.0, 280.0, 200.0, &grams) == BL_ERR_ANALYSIS);
}

TEST_CASE("generate, load, validate, audit, and score through the C interface") {
  Generated gen;

  Owned report;
  REQUIRE(bl_dataset_validate(gen.ds, report.slot()) == BL_OK);
  const auto validation = nlohmann::json::parse(report.str());
  CHECK(validation["n_records"] == 200);
  CHECK(validation["model_coverage"].size() == 2);
  CHECK(validation["model_coverage"].contains("dl"));
  CHECK(validation["model_coverage"].contains("hadlock"));

  Owned summary;
  REQUIRE(bl_run_audit(gen.ds, kFastAudit, gen.dir.file("out").c_str(), summary.slot()) == BL_OK);
  const auto doc = nlohmann::json::parse(summary.str());
  CHECK(doc["audit_id"].is_string());
  CHECK(doc["audit_id"].get<std::string>().size() == 12);
  CHECK(doc["slice_discovery"].is_null());
  CHECK(doc["stratified"].is_object());
  CHECK(doc["intersectional"].is_object());
  // The sha256 digests of the three inputs are echoed.
  CHECK(doc["inputs"]["records"]["sha256"].get<std::string>().size() == 64);
  CHECK(doc["inputs"]["schema"]["sha256"].get<std::string>().size() == 64);
  CHECK(doc["inputs"]["embeddings"]["sha256"].get<std::string>().size() == 64);

  const std::string summary_path =
      gen.dir.file("out/" + doc["audit_id"].get<std::string>() + "_summary.json");
  CHECK(nlohmann::json::parse(slurp(summary_path)) == doc);

  Owned recovery;
  const std::string truth = slurp(gen.dir.file("data/truth.json"));
  REQUIRE(bl_score_recovery(truth.c_str(), summary.str().c_str(), recovery.slot()) == BL_OK);
  const auto scored = nlohmann::json::parse(recovery.str());
  CHECK(scored["ari"].is_null());  // discovery stage was not run
  CHECK(scored["planted_factors_flagged"].is_boolean());
  CHECK(scored["verdict_matches"].is_boolean());
  CHECK(scored["expected_verdict"] == "independent-effect");

  SUBCASE("identical audits emit identical bytes") {
    Owned second;
    REQUIRE(bl_run_audit(gen.ds, kFastAudit, gen.dir.file("out2").c_str(), second.slot()) == BL_OK);
    CHECK(summary.str() == second.str());
  }

  SUBCASE("malformed audit configs are parse errors") {
    Owned out;
    CHECK(bl_run_audit(gen.ds, "{not json", gen.dir.file("x").c_str(), out.slot()) ==
          BL_ERR_PARSE);
    CHECK(bl_run_audit(gen.ds, "{\"stages\":[\"warp\"]}", gen.dir.file("x").c_str(), out.slot()) ==
          BL_ERR_PARSE);
  }

  SUBCASE("corrupt truth documents are rejected") {
    Owned out;
    CHECK(bl_score_recovery("{}", summary.str().c_str(), out.slot()) == BL_ERR_PARSE);
  }
}

TEST_CASE("synth rejects malformed configs") {
  TempDir dir;
  Owned files;
  CHECK(bl_synth_generate("{\"n\":0}", dir.file("x").c_str(), files.slot()) == BL_ERR_PARSE);
  CHECK(bl_synth_generate("not json", dir.file("x").c_str(), files.slot()) == BL_ERR_PARSE);
}
