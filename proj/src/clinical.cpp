#include "biaslens/clinical.hpp"

#include <cmath>

namespace biaslens {

namespace {

double horner(const std::vector<double>& coefficients, double x) {
  double acc = 0.0;
  for (size_t i = coefficients.size(); i-- > 0;) acc = acc * x + coefficients[i];
  return acc;
}

}  // namespace

void GrowthCurve::validate() const {
  if (coefficients.empty()) fail(ErrorCode::InvalidConfig, "growth curve has no coefficients");
  if (!(ga_min_days < ga_max_days)) {
    fail(ErrorCode::InvalidConfig, "growth curve range must satisfy min < max");
  }
  // Sample every day in range plus the exact endpoints.
  for (double ga = ga_min_days; ga <= ga_max_days; ga += 1.0) {
    if (horner(coefficients, ga) <= 0.0) {
      fail(ErrorCode::InvalidConfig,
           "growth curve '" + name + "' is nonpositive at GA " + format_double(ga) + " days");
    }
  }
  if (horner(coefficients, ga_max_days) <= 0.0) {
    fail(ErrorCode::InvalidConfig, "growth curve '" + name + "' is nonpositive at its upper bound");
  }
}

ClinicalConfig default_clinical_config() {
  ClinicalConfig config;
  config.hadlock_variant = "hadlock_hc_ac_fl";
  config.hadlock = {1.326, -0.00326, 0.0107, 0.0438, 0.158};
  config.curve.name = "marsal";
  config.curve.coefficients = {241.0053, 1.976961, -0.1336265, 1.140644e-3, -1.907345e-6};
  config.curve.ga_min_days = 175.0;
  config.curve.ga_max_days = 301.0;
  return config;
}

ClinicalConfig load_clinical_config(const nlohmann::json& doc, const std::string& hadlock_variant,
                                    const std::string& curve_name) {
  ClinicalConfig config;
  try {
    const std::string hv =
        hadlock_variant.empty() ? doc.at("default_hadlock").get<std::string>() : hadlock_variant;
    const std::string cv =
        curve_name.empty() ? doc.at("default_curve").get<std::string>() : curve_name;
    const auto& hj = doc.at("hadlock_variants").at(hv);
    const auto coeffs = hj.at("coefficients").get<std::vector<double>>();
    if (coeffs.size() != 5) {
      fail(ErrorCode::InvalidConfig, "hadlock variant '" + hv + "' needs 5 coefficients");
    }
    config.hadlock_variant = hv;
    for (size_t i = 0; i < 5; ++i) config.hadlock[i] = coeffs[i];
    const auto& cj = doc.at("growth_curves").at(cv);
    config.curve.name = cv;
    config.curve.coefficients = cj.at("coefficients").get<std::vector<double>>();
    const auto range = cj.at("ga_range_days").get<std::vector<double>>();
    if (range.size() != 2) fail(ErrorCode::InvalidConfig, "ga_range_days needs [min, max]");
    config.curve.ga_min_days = range[0];
    config.curve.ga_max_days = range[1];
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("clinical coefficients config: ") + e.what());
  }
  config.curve.validate();
  return config;
}

nlohmann::json ClinicalConfig::to_json() const {
  nlohmann::json j;
  j["hadlock_variant"] = hadlock_variant;
  j["hadlock_coefficients"] = std::vector<double>(hadlock.begin(), hadlock.end());
  j["curve"] = {{"name", curve.name},
                {"coefficients", curve.coefficients},
                {"ga_range_days", {curve.ga_min_days, curve.ga_max_days}}};
  return j;
}

double hadlock_efw(const Biometry& b, const std::array<double, 5>& coefficients) {
  for (double v : {b.hc_cm, b.ac_cm, b.fl_cm}) {
    if (!(v > 0.0 && v < 100.0)) {
      fail(ErrorCode::OutOfRange, "biometry values must be in (0, 100) cm");
    }
  }
  const double exponent = coefficients[0] + coefficients[1] * b.ac_cm * b.fl_cm +
                          coefficients[2] * b.hc_cm + coefficients[3] * b.ac_cm +
                          coefficients[4] * b.fl_cm;
  return std::pow(10.0, exponent);
}

double growth_curve_weight(double ga_days, const GrowthCurve& curve) {
  if (ga_days < curve.ga_min_days || ga_days > curve.ga_max_days) {
    fail(ErrorCode::GaOutOfRange, "GA " + format_double(ga_days) + " days outside curve range [" +
                                      format_double(curve.ga_min_days) + ", " +
                                      format_double(curve.ga_max_days) + "]");
  }
  return horner(curve.coefficients, ga_days);
}

double reference_weight_at_scan(double birth_weight_g, double ga_scan_days,
                                double ga_delivery_days, const GrowthCurve& curve) {
  if (!(birth_weight_g > 0.0)) fail(ErrorCode::InvalidConfig, "birth weight must be positive");
  if (ga_scan_days > ga_delivery_days) {
    fail(ErrorCode::GaOrderViolation, "scan GA must not exceed delivery GA");
  }
  if (ga_scan_days == ga_delivery_days) {
    growth_curve_weight(ga_scan_days, curve);  // range check only; ratio is exactly 1
    return birth_weight_g;
  }
  return birth_weight_g * growth_curve_weight(ga_scan_days, curve) /
         growth_curve_weight(ga_delivery_days, curve);
}

}  // namespace biaslens
