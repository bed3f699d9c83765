#include "craft/grid.hpp"

#include <cmath>

#include "craft/error.hpp"
#include "json_util.hpp"

namespace craft {

using namespace detail;

int WorkspaceGrid::cells_u() const {
  return static_cast<int>(std::floor(extent_u / spacing + 1e-9));
}

int WorkspaceGrid::cells_v() const {
  return static_cast<int>(std::floor(extent_v / spacing + 1e-9));
}

Vec3 WorkspaceGrid::vector_to_grid(const Vec3& w) const {
  return {w.dot(u), w.dot(v), w.dot(normal)};
}

Vec3 WorkspaceGrid::vector_to_world(const Vec3& g) const {
  return g.x() * u + g.y() * v + g.z() * normal;
}

Vec3 WorkspaceGrid::to_grid(const Vec3& world) const {
  return vector_to_grid(world - lattice_origin());
}

Vec3 WorkspaceGrid::to_world(const Vec3& g) const { return lattice_origin() + vector_to_world(g); }

Vec3 WorkspaceGrid::lattice_point(long i, long j, long k) const {
  return to_world(Vec3(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)) *
                  spacing);
}

Vec3 WorkspaceGrid::snap(const Vec3& world) const {
  const Vec3 g = to_grid(world);
  return to_world({snap_to_multiple(g.x(), spacing), snap_to_multiple(g.y(), spacing),
                   snap_to_multiple(g.z(), spacing)});
}

double snap_to_multiple(double value, double step) { return std::round(value / step) * step; }

WorkspaceGrid make_grid(const WorkspaceCandidate& c, double spacing, double offset) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorCode::parameter, "grid spacing must be positive");
  }
  if (!std::isfinite(offset)) throw Error(ErrorCode::parameter, "grid offset must be finite");
  WorkspaceGrid g;
  g.label = c.label;
  g.face = c.face;
  g.normal = Vec3::Zero();
  g.normal[c.face.axis] = c.face.sign;
  const int u_axis = c.face.axis == 0 ? 2 : 0;
  g.u = Vec3::Zero();
  g.u[u_axis] = 1.0;
  g.v = g.normal.cross(g.u);
  g.spacing = spacing;
  g.offset = offset;

  // Corner with minimal u and v coordinates.
  g.origin = c.rect_min;
  for (int a = 0; a < 3; ++a) {
    if (a == c.face.axis) continue;
    const double along_v = g.v[a];
    if (along_v < 0.0) g.origin[a] = c.rect_max[a];
  }
  const Vec3 size = c.rect_max - c.rect_min;
  g.extent_u = std::abs(size.dot(g.u));
  g.extent_v = std::abs(size.dot(g.v));
  return g;
}

json grid_to_json(const WorkspaceGrid& g) {
  return {{"label", g.label},
          {"face", std::string(face_name(g.face))},
          {"origin", to_json(g.origin)},
          {"u", to_json(g.u)},
          {"v", to_json(g.v)},
          {"normal", to_json(g.normal)},
          {"spacing", g.spacing},
          {"offset", g.offset},
          {"extent", json::array({g.extent_u, g.extent_v})},
          {"occlusion", g.occlusion},
          {"color", g.color}};
}

WorkspaceGrid grid_from_json(const json& j) {
  WorkspaceGrid g;
  g.label = text(member(j, "label", "grid"), "grid.label");
  const auto face = parse_face_name(text(member(j, "face", "grid"), "grid.face"));
  if (!face) field_error("grid.face", "unknown face name");
  g.face = *face;
  g.origin = vec3(member(j, "origin", "grid"), "grid.origin");
  g.u = vec3(member(j, "u", "grid"), "grid.u");
  g.v = vec3(member(j, "v", "grid"), "grid.v");
  g.normal = vec3(member(j, "normal", "grid"), "grid.normal");
  g.spacing = number(member(j, "spacing", "grid"), "grid.spacing");
  if (!(g.spacing > 0.0)) field_error("grid.spacing", "must be positive");
  g.offset = number(member(j, "offset", "grid"), "grid.offset");
  const json& ext = member(j, "extent", "grid");
  if (!ext.is_array() || ext.size() != 2) field_error("grid.extent", "expected [u, v]");
  g.extent_u = number(ext[0], "grid.extent[0]");
  g.extent_v = number(ext[1], "grid.extent[1]");
  const json& occ = member(j, "occlusion", "grid");
  if (!occ.is_boolean()) field_error("grid.occlusion", "expected a boolean");
  g.occlusion = occ.get<bool>();
  g.color = text(member(j, "color", "grid"), "grid.color");
  const double ortho = std::abs(g.u.dot(g.v)) + std::abs(g.u.dot(g.normal)) +
                       std::abs(g.v.dot(g.normal));
  if (ortho > 1e-9 || std::abs(g.u.norm() - 1) > 1e-9 || std::abs(g.v.norm() - 1) > 1e-9 ||
      std::abs(g.normal.norm() - 1) > 1e-9) {
    field_error("grid", "frame is not orthonormal");
  }
  return g;
}

}  // namespace craft
