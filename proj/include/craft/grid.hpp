#pragma once

#include <string>

#include <json.hpp>

#include "craft/geometry.hpp"
#include "craft/room.hpp"

namespace craft {

inline constexpr double kDefaultGridSpacing = 0.02;

/// Work plane laid on a workspace face, plus the 3D snap lattice
///   origin + offset*normal + (i*s) u + (j*s) v + (k*s) normal.
/// u is the first world axis (x, then z, then y) perpendicular to the normal,
/// v = normal x u, and origin is the face corner with the smallest u and v.
struct WorkspaceGrid {
  std::string label;
  BoxFace face;
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = -Vec3::UnitZ();
  Vec3 normal = Vec3::UnitY();
  double spacing = kDefaultGridSpacing;
  double offset = 0.0;
  double extent_u = 0.0;
  double extent_v = 0.0;
  /// Render hints passed through to the UI; the kernel does not interpret them.
  bool occlusion = true;
  std::string color = "#ffffff";

  int cells_u() const;
  int cells_v() const;

  /// Lattice origin (the grid plane shifted by the normal offset).
  Vec3 lattice_origin() const { return origin + offset * normal; }
  /// World point -> (u, v, n) coordinates relative to the lattice origin.
  Vec3 to_grid(const Vec3& world) const;
  Vec3 to_world(const Vec3& grid) const;
  /// Direction-only variants.
  Vec3 vector_to_grid(const Vec3& world) const;
  Vec3 vector_to_world(const Vec3& grid) const;

  Vec3 lattice_point(long i, long j, long k) const;
  /// Nearest lattice point, componentwise rounding half away from zero.
  Vec3 snap(const Vec3& world) const;

  friend bool operator==(const WorkspaceGrid&, const WorkspaceGrid&) = default;
};

/// Round half away from zero to the nearest multiple of `step`.
double snap_to_multiple(double value, double step);

/// Throws ErrorCode::parameter when spacing <= 0.
WorkspaceGrid make_grid(const WorkspaceCandidate& candidate, double spacing = kDefaultGridSpacing,
                        double offset = 0.0);

nlohmann::json grid_to_json(const WorkspaceGrid& grid);
WorkspaceGrid grid_from_json(const nlohmann::json& j);

}  // namespace craft
