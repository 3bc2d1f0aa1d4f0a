// SVG figures and the machine-readable summary document.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "biaslens/intersect.hpp"
#include "biaslens/slices.hpp"
#include "biaslens/stratify.hpp"

namespace biaslens {

struct RadarStyle {
  // First series green, second red; further series cycle the palette.
  std::vector<std::string> colors = {"#2ca02c", "#d62728", "#1f77b4", "#9467bd", "#8c564b"};
  int size = 640;
  bool log_scale = false;  // radius maps log10(1 + value) instead of value
  std::string title;
};

// Radar plot: one closed polygon per series over >= 3 axes. With 1 or 2 axes
// the layout falls back to grouped bars and the document is tagged
// data-layout="bars". Null axis values plot at the center and the axis label
// is marked "(n/a)".
std::string render_radar(const RadarData& data, const RadarStyle& style = {});

// Heatmap of per-cell MRE for one model. One rect per cell (class "cell"),
// annotated with MRE to one decimal and n; low-support cells are hatched.
// Fill runs light (low MRE) to dark (high MRE) on a single-hue ramp.
std::string render_heatmap(const JointGrid& grid, const std::string& model);

// Radar comparing best and worst slice over the profiled factors; the value
// per axis is the slice's share of the factor's last (highest) bin.
RadarData slice_share_radar(const SliceProfile& best, const SliceProfile& worst);

// Serializes a summary document: two-space indent, sorted keys, shortest
// round-trip floats, trailing newline. Byte-deterministic for equal inputs.
std::string emit_summary(const nlohmann::json& summary);

}  // namespace biaslens
