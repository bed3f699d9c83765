#pragma once

#include <string>
#include <vector>

#include "craft/fab/printer.hpp"
#include "craft/fab/stl.hpp"
#include "craft/scene.hpp"

namespace craft {

/// Twin standing on the active grid: plate corner at the grid origin, printer
/// x/y/z along grid u/v/normal. Throws ErrorCode::state without a grid and
/// ErrorCode::parameter for non-positive dimensions.
PrinterTwin make_printer_twin(const SceneDocument& scene, const std::string& name, double width_mm,
                              double depth_mm, double height_mm);
PrinterTwin make_printer_twin(const SceneDocument& scene, const PrinterPreset& preset);

/// Deep copies of `ids` placed inside the twin as one rigid group: centered
/// on the plate in x/y and resting on it. Originals are untouched. Throws
/// ErrorCode::placement when the group does not fit the build volume.
std::vector<ObjectId> drop_into_printer(SceneDocument& scene, std::span<const ObjectId> ids);

struct BuildVolumeViolation {
  ObjectId id = 0;
  std::vector<char> axes;  // 'x', 'y', 'z'
};

struct BuildVolumeReport {
  std::vector<BuildVolumeViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

/// Tolerance when comparing object bounds against the build volume (mm).
inline constexpr double kBuildVolumeTolMm = 1e-6;

BuildVolumeReport check_build_volume(const SceneDocument& scene);
BuildVolumeReport check_build_volume(const PrinterTwin& twin, const Box3& bounds_mm, ObjectId id = 0);

/// Throws ErrorCode::state without a twin or placed objects, and
/// ErrorCode::placement when anything lies outside the build volume.
void require_printable(const SceneDocument& scene);

/// Placed objects, merged, in the printer frame (millimeters, Z up).
std::string export_plate_stl(const SceneDocument& scene, StlFormat format = StlFormat::binary);

/// Objects in world coordinates turned Z up: STL (x, y, z) = world (x, -z, y),
/// in millimeters.
std::string export_objects_stl(const SceneDocument& scene, std::span<const ObjectId> ids,
                               StlFormat format = StlFormat::binary);

}  // namespace craft
