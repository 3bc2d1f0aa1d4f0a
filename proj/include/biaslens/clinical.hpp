// Hadlock estimated fetal weight and growth-curve reference weights.
//
// Units are fixed at this interface: biometry in cm, gestational age in days,
// weight in grams.
#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/common.hpp"

namespace biaslens {

struct Biometry {
  double hc_cm = 0.0;  // head circumference
  double ac_cm = 0.0;  // abdominal circumference
  double fl_cm = 0.0;  // femur length
};

// Polynomial GA (days) -> expected weight (grams), constant term first.
struct GrowthCurve {
  std::string name;
  std::vector<double> coefficients;
  double ga_min_days = 0.0;
  double ga_max_days = 0.0;

  // Verifies the curve is positive over its declared range.
  void validate() const;
};

struct ClinicalConfig {
  std::string hadlock_variant;
  std::array<double, 5> hadlock;  // c0..c4 of the log10 model
  GrowthCurve curve;

  nlohmann::json to_json() const;
};

// Shipped defaults: the three-plane HC/AC/FL Hadlock variant and the Marsal
// intrauterine growth curve over GA 175..301 days.
ClinicalConfig default_clinical_config();

// Loads a named variant pair from a clinical_coefficients.json document.
// Empty names select the file's defaults.
ClinicalConfig load_clinical_config(const nlohmann::json& doc,
                                    const std::string& hadlock_variant = "",
                                    const std::string& curve_name = "");

// 10^(c0 + c1*ac*fl + c2*hc + c3*ac + c4*fl), grams.
double hadlock_efw(const Biometry& b, const std::array<double, 5>& coefficients);

double growth_curve_weight(double ga_days, const GrowthCurve& curve);

// Scales birth weight along the curve: birth_weight * curve(scan) / curve(delivery).
// Assumes the fetus tracks a fixed fraction of the curve between scan and
// delivery; this interpretation is configurable via the curve coefficients.
double reference_weight_at_scan(double birth_weight_g, double ga_scan_days,
                                double ga_delivery_days, const GrowthCurve& curve);

}  // namespace biaslens
