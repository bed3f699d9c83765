#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "craft/geometry.hpp"

namespace craft {

using ObjectId = std::uint64_t;

struct PrinterPreset {
  std::string name;
  double width_mm = 0.0;
  double depth_mm = 0.0;
  double height_mm = 0.0;
};

/// Parses the preset file: a JSON array of {name, width_mm, depth_mm, height_mm}.
std::vector<PrinterPreset> load_printer_presets(std::string_view text);
/// Presets used when no preset file is given.
std::vector<PrinterPreset> default_printer_presets();
/// Throws ErrorCode::not_found.
const PrinterPreset& find_preset(const std::vector<PrinterPreset>& presets, std::string_view name);

/// Virtual stand-in for a physical printer. Its printer frame has the origin at
/// a plate corner and x, y, z along the workspace grid's u, v and normal, so
/// the build volume is [0..W] x [0..D] x [0..H] millimeters.
struct PrinterTwin {
  std::string name;
  double width_mm = 0.0;
  double depth_mm = 0.0;
  double height_mm = 0.0;
  double plate_spacing_mm = 10.0;
  std::string server_address;
  std::string printer_address;
  Vec3 origin = Vec3::Zero();
  Vec3 x_axis = Vec3::UnitX();
  Vec3 y_axis = -Vec3::UnitZ();
  Vec3 z_axis = Vec3::UnitY();
  std::vector<ObjectId> placed;

  Vec3 build_volume_mm() const { return {width_mm, depth_mm, height_mm}; }
  /// World meters -> printer frame millimeters.
  Vec3 to_printer(const Vec3& world) const;
  Vec3 to_world(const Vec3& printer_mm) const;
  Box3 printer_bounds(const Mesh& world_mesh) const;

  friend bool operator==(const PrinterTwin&, const PrinterTwin&) = default;
};

/// Throws ErrorCode::parameter unless every dimension is positive and finite.
void check_printer_dims(double width_mm, double depth_mm, double height_mm);

nlohmann::json printer_to_json(const PrinterTwin& twin);
PrinterTwin printer_from_json(const nlohmann::json& j);

}  // namespace craft
