#include "craft/fab/fabrication.hpp"

#include <algorithm>
#include <numbers>

#include "craft/error.hpp"

namespace craft {

namespace {

Mesh to_printer_frame(const PrinterTwin& twin, const Mesh& world) {
  Mesh m = world;
  for (auto& v : m.vertices) v = twin.to_printer(v) / 1000.0;
  return m;
}

}  // namespace

PrinterTwin make_printer_twin(const SceneDocument& scene, const std::string& name, double w,
                              double d, double h) {
  check_printer_dims(w, d, h);
  if (!scene.grid()) throw Error(ErrorCode::state, "select a workspace before adding a printer");
  const WorkspaceGrid& g = *scene.grid();
  PrinterTwin t;
  t.name = name;
  t.width_mm = w;
  t.depth_mm = d;
  t.height_mm = h;
  t.origin = g.origin;
  t.x_axis = g.u;
  t.y_axis = g.v;
  t.z_axis = g.normal;
  return t;
}

PrinterTwin make_printer_twin(const SceneDocument& scene, const PrinterPreset& p) {
  return make_printer_twin(scene, p.name, p.width_mm, p.depth_mm, p.height_mm);
}

std::vector<ObjectId> drop_into_printer(SceneDocument& scene, std::span<const ObjectId> ids) {
  if (!scene.printer()) throw Error(ErrorCode::state, "no printer twin in the scene");
  if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
  const PrinterTwin& twin = *scene.printer();
  std::vector<ObjectId> list(ids.begin(), ids.end());
  std::sort(list.begin(), list.end());
  list.erase(std::unique(list.begin(), list.end()), list.end());

  Box3 group;
  for (ObjectId id : list) group.expand(twin.printer_bounds(scene.object(id).mesh()));
  const Vec3 size = group.extent();
  const Vec3 volume = twin.build_volume_mm();
  for (int a = 0; a < 3; ++a) {
    if (size[a] > volume[a] + kBuildVolumeTolMm) {
      throw Error(ErrorCode::placement, "selection does not fit the build volume of " + twin.name);
    }
  }
  const Vec3 goal_min(0.5 * (volume.x() - size.x()), 0.5 * (volume.y() - size.y()), 0.0);
  const Vec3 shift_mm = goal_min - group.min;
  const Vec3 shift = 0.001 * (shift_mm.x() * twin.x_axis + shift_mm.y() * twin.y_axis +
                              shift_mm.z() * twin.z_axis);

  std::vector<ObjectId> placed;
  SceneState next = scene.state();
  ObjectId id = scene.next_id();
  for (ObjectId src : list) {
    DesignObject copy = next.objects.at(src);
    copy.id = id++;
    copy.on_plate = true;
    Transform t = copy.transform;
    t.translation += shift;
    SceneDocument::place(copy, t);
    next.printer->placed.push_back(copy.id);
    placed.push_back(copy.id);
    next.objects.emplace(copy.id, std::move(copy));
  }
  scene.check_capacity(next);
  for (std::size_t i = 0; i < list.size(); ++i) scene.allocate_id();
  scene.transact("drop into printer", [&](SceneState& s) { s = std::move(next); });
  return placed;
}

std::string BuildVolumeReport::describe() const {
  if (ok()) return "ok";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += "object " + std::to_string(v.id) + " outside on ";
    for (std::size_t i = 0; i < v.axes.size(); ++i) {
      if (i) out += ",";
      out += v.axes[i];
    }
  }
  return out;
}

BuildVolumeReport check_build_volume(const PrinterTwin& twin, const Box3& b, ObjectId id) {
  BuildVolumeReport report;
  const Vec3 volume = twin.build_volume_mm();
  BuildVolumeViolation v{id, {}};
  for (int a = 0; a < 3; ++a) {
    if (b.min[a] < -kBuildVolumeTolMm || b.max[a] > volume[a] + kBuildVolumeTolMm) {
      v.axes.push_back("xyz"[a]);
    }
  }
  if (!v.axes.empty()) report.violations.push_back(std::move(v));
  return report;
}

BuildVolumeReport check_build_volume(const SceneDocument& scene) {
  BuildVolumeReport report;
  if (!scene.printer()) return report;
  const PrinterTwin& twin = *scene.printer();
  for (ObjectId id : twin.placed) {
    auto r = check_build_volume(twin, twin.printer_bounds(scene.object(id).mesh()), id);
    for (auto& v : r.violations) report.violations.push_back(std::move(v));
  }
  return report;
}

void require_printable(const SceneDocument& scene) {
  if (!scene.printer()) throw Error(ErrorCode::state, "no printer twin in the scene");
  if (scene.printer()->placed.empty()) {
    throw Error(ErrorCode::state, "the printer plate is empty");
  }
  const auto report = check_build_volume(scene);
  if (!report.ok()) {
    throw Error(ErrorCode::placement, "cannot print: " + report.describe());
  }
}

std::string export_plate_stl(const SceneDocument& scene, StlFormat format) {
  if (!scene.printer()) throw Error(ErrorCode::state, "no printer twin in the scene");
  const PrinterTwin& twin = *scene.printer();
  std::vector<Mesh> meshes;
  for (ObjectId id : twin.placed) meshes.push_back(to_printer_frame(twin, scene.object(id).mesh()));
  std::vector<const Mesh*> ptrs;
  for (const auto& m : meshes) ptrs.push_back(&m);
  return export_stl(ptrs, format);
}

std::string export_objects_stl(const SceneDocument& scene, std::span<const ObjectId> ids,
                               StlFormat format) {
  // World is Y up, STL is Z up: (x, y, z) -> (x, -z, y), a proper rotation.
  Transform to_z_up;
  to_z_up.rotation = Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitX()));
  std::vector<Mesh> meshes;
  meshes.reserve(ids.size());
  for (ObjectId id : ids) meshes.push_back(transform_mesh(scene.object(id).mesh(), to_z_up));
  std::vector<const Mesh*> ptrs;
  for (const Mesh& m : meshes) ptrs.push_back(&m);
  return export_stl(ptrs, format);
}

}  // namespace craft
