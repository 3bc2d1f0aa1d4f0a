#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "biaslens/clinical.hpp"
#include "biaslens/common.hpp"
#include "support/fixtures.hpp"

using namespace biaslens;

namespace {

// Independent evaluation of the log10 model, written out longhand.
double efw_by_hand(double hc, double ac, double fl, const std::array<double, 5>& c) {
  return std::pow(10.0, c[0] + c[1] * (ac * fl) + c[2] * hc + c[3] * ac + c[4] * fl);
}

// Naive power-sum polynomial evaluation, deliberately not Horner.
double poly_by_hand(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (size_t i = 0; i < coeffs.size(); ++i) acc += coeffs[i] * std::pow(x, static_cast<double>(i));
  return acc;
}

}  // namespace

TEST_CASE("hadlock with a constant-only exponent") {
  const std::array<double, 5> c = {3.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(hadlock_efw({30.0, 26.0, 5.5}, c) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("hadlock matches an independent evaluation across the clinical range") {
  const auto config = default_clinical_config();
  const double hcs[] = {20.0, 25.0, 28.0, 30.0, 33.0};
  const double acs[] = {18.0, 22.0, 26.0, 30.0, 34.0};
  const double fls[] = {3.0, 4.5, 5.5, 6.5, 7.2};
  for (double hc : hcs) {
    for (double ac : acs) {
      for (double fl : fls) {
        const double got = hadlock_efw({hc, ac, fl}, config.hadlock);
        const double want = efw_by_hand(hc, ac, fl, config.hadlock);
        CHECK(std::abs(got - want) < 1.0);
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
  // The worked reference point.
  CHECK(hadlock_efw({30.0, 26.0, 5.5}, config.hadlock) ==
        doctest::Approx(1543.9029605465623).epsilon(1e-13));
}

TEST_CASE("hadlock grows with abdominal circumference") {
  const auto config = default_clinical_config();
  double prev = 0.0;
  for (double ac = 15.0; ac <= 38.0; ac += 0.5) {
    const double efw = hadlock_efw({30.0, ac, 5.5}, config.hadlock);
    CHECK(efw > prev);
    prev = efw;
  }
}

TEST_CASE("hadlock rejects out-of-range biometry") {
  const auto config = default_clinical_config();
  const Biometry bad[] = {
      {0.0, 26.0, 5.5}, {-3.0, 26.0, 5.5}, {100.0, 26.0, 5.5},
      {30.0, 0.0, 5.5}, {30.0, 26.0, 150.0},
  };
  for (const auto& b : bad) {
    try {
      hadlock_efw(b, config.hadlock);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfRange);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hadlock_efw({nan, 26.0, 5.5}, config.hadlock), Error);
}

TEST_CASE("growth curve evaluation") {
  GrowthCurve flat;
  flat.name = "flat";
  flat.coefficients = {500.0};
  flat.ga_min_days = 100.0;
  flat.ga_max_days = 300.0;
  CHECK(growth_curve_weight(200.0, flat) == 500.0);

  GrowthCurve line;
  line.name = "line";
  line.coefficients = {0.0, 10.0};
  line.ga_min_days = 100.0;
  line.ga_max_days = 300.0;
  CHECK(growth_curve_weight(200.0, line) == doctest::Approx(2000.0).epsilon(1e-12));

  const auto marsal = default_clinical_config().curve;
  for (double ga = 175.0; ga <= 301.0; ga += 7.0) {
    const double want = poly_by_hand(marsal.coefficients, ga);
    CHECK(growth_curve_weight(ga, marsal) == doctest::Approx(want).epsilon(1e-6));
    CHECK(want > 0.0);
  }
  // Endpoints are in range, one day outside is not.
  CHECK(growth_curve_weight(175.0, marsal) > 0.0);
  CHECK(growth_curve_weight(301.0, marsal) > 0.0);
  try {
    growth_curve_weight(174.0, marsal);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GaOutOfRange);
  }
  CHECK_THROWS_AS(growth_curve_weight(302.0, marsal), Error);
}

TEST_CASE("reference weight scales birth weight along the curve") {
  GrowthCurve line;
  line.name = "line";
  line.coefficients = {0.0, 10.0};
  line.ga_min_days = 100.0;
  line.ga_max_days = 300.0;
  // curve(200) = 2000, curve(280) = 2800: 3500 * 2000 / 2800 = 2500.
  CHECK(reference_weight_at_scan(3500.0, 200.0, 280.0, line) ==
        doctest::Approx(2500.0).epsilon(1e-12));

  // Scale equivariance in birth weight.
  const auto marsal = default_clinical_config().curve;
  const double base = reference_weight_at_scan(3000.0, 210.0, 275.0, marsal);
  CHECK(reference_weight_at_scan(6000.0, 210.0, 275.0, marsal) ==
        doctest::Approx(2.0 * base).epsilon(1e-12));

  // Equal scan and delivery GA returns the birth weight exactly, bitwise.
  const double bw = 3141.592653589793;
  CHECK(reference_weight_at_scan(bw, 260.0, 260.0, marsal) == bw);
}

TEST_CASE("reference weight rejects bad inputs") {
  const auto marsal = default_clinical_config().curve;
  try {
    reference_weight_at_scan(3000.0, 280.0, 240.0, marsal);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GaOrderViolation);
  }
  try {
    reference_weight_at_scan(3000.0, 170.0, 240.0, marsal);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GaOutOfRange);
  }
  CHECK_THROWS_AS(reference_weight_at_scan(0.0, 200.0, 240.0, marsal), Error);
  CHECK_THROWS_AS(reference_weight_at_scan(-100.0, 200.0, 240.0, marsal), Error);
  // Equal-GA shortcut still range-checks.
  CHECK_THROWS_AS(reference_weight_at_scan(3000.0, 400.0, 400.0, marsal), Error);
}

TEST_CASE("curve validation rejects degenerate configurations") {
  GrowthCurve empty;
  empty.name = "empty";
  empty.ga_min_days = 100.0;
  empty.ga_max_days = 200.0;
  CHECK_THROWS_AS(empty.validate(), Error);

  GrowthCurve inverted;
  inverted.name = "inverted";
  inverted.coefficients = {100.0};
  inverted.ga_min_days = 200.0;
  inverted.ga_max_days = 100.0;
  CHECK_THROWS_AS(inverted.validate(), Error);

  GrowthCurve negative;
  negative.name = "negative";
  negative.coefficients = {1000.0, -10.0};  // crosses zero at GA 100
  negative.ga_min_days = 50.0;
  negative.ga_max_days = 150.0;
  try {
    negative.validate();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
    CHECK(std::string(e.what()).find("negative") != std::string::npos);
  }

  default_clinical_config().curve.validate();
}

TEST_CASE("the shipped coefficients file matches the compiled defaults") {
  const std::string path = std::string(BIASLENS_SOURCE_DIR) + "/data/clinical_coefficients.json";
  const auto doc = nlohmann::json::parse(read_file(path));
  const auto loaded = load_clinical_config(doc);
  const auto compiled = default_clinical_config();

  CHECK(loaded.hadlock_variant == compiled.hadlock_variant);
  for (size_t i = 0; i < 5; ++i) CHECK(loaded.hadlock[i] == compiled.hadlock[i]);
  CHECK(loaded.curve.name == compiled.curve.name);
  REQUIRE(loaded.curve.coefficients.size() == compiled.curve.coefficients.size());
  for (size_t i = 0; i < loaded.curve.coefficients.size(); ++i) {
    CHECK(loaded.curve.coefficients[i] == compiled.curve.coefficients[i]);
  }
  CHECK(loaded.curve.ga_min_days == compiled.curve.ga_min_days);
  CHECK(loaded.curve.ga_max_days == compiled.curve.ga_max_days);

  // Explicit selection by name works; unknown names do not.
  const auto named = load_clinical_config(doc, "hadlock_hc_ac_fl", "marsal");
  CHECK(named.hadlock_variant == "hadlock_hc_ac_fl");
  try {
    load_clinical_config(doc, "no_such_variant");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("clinical config JSON round trip") {
  const auto config = default_clinical_config();
  const nlohmann::json j = config.to_json();
  CHECK(j["hadlock_variant"] == "hadlock_hc_ac_fl");
  CHECK(j["hadlock_coefficients"].size() == 5);
  CHECK(j["curve"]["name"] == "marsal");
  CHECK(j["curve"]["ga_range_days"][0] == 175.0);
  CHECK(j["curve"]["ga_range_days"][1] == 301.0);
}
