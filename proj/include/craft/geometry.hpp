#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace craft {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Smallest edge length any object may be scaled down to (meters).
inline constexpr double kMinDimension = 1e-3;
/// Triangles with area at or below this are degenerate (m^2).
inline constexpr double kDegenerateArea = 1e-12;

struct Box3 {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Box3& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  Box3 inflated(double margin) const {
    return {(min.array() - margin).matrix(), (max.array() + margin).matrix()};
  }
  bool overlaps(const Box3& b) const {
    return (min.array() <= b.max.array()).all() && (b.min.array() <= max.array()).all();
  }
  bool contains(const Box3& b) const {
    return (min.array() <= b.min.array()).all() && (b.max.array() <= max.array()).all();
  }
  /// Corner selected by bit i of `index` (bit set = max on axis i).
  Vec3 corner(int index) const {
    return {index & 1 ? max.x() : min.x(), index & 2 ? max.y() : min.y(),
            index & 4 ? max.z() : min.z()};
  }
};

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh in meters, counter-clockwise winding seen from outside.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  bool empty() const { return triangles.empty(); }
};

/// Scale, then rotate, then translate.
struct Transform {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 scale = Vec3::Ones();

  static Transform identity() { return {}; }
  static Transform from_scale(const Vec3& s) { return {Vec3::Zero(), Quat::Identity(), s}; }
  static Transform from_translation(const Vec3& t) { return {t, Quat::Identity(), Vec3::Ones()}; }

  Vec3 apply(const Vec3& p) const { return rotation * p.cwiseProduct(scale) + translation; }
  Vec3 apply_inverse(const Vec3& p) const {
    return (rotation.conjugate() * (p - translation)).cwiseQuotient(scale);
  }
  Eigen::Affine3d affine() const;
  bool is_identity() const;
  /// Renormalizes the quaternion and clamps scale factors to positive values.
  Transform normalized() const;

  friend bool operator==(const Transform& a, const Transform& b) {
    return a.translation == b.translation && a.rotation.coeffs() == b.rotation.coeffs() &&
           a.scale == b.scale;
  }
};

enum class PrimitiveKind { cube, sphere, cylinder, capsule, triangular_prism, pyramid, cone };

inline constexpr std::array<PrimitiveKind, 7> kAllPrimitiveKinds = {
    PrimitiveKind::cube,    PrimitiveKind::sphere,  PrimitiveKind::cylinder,
    PrimitiveKind::capsule, PrimitiveKind::triangular_prism, PrimitiveKind::pyramid,
    PrimitiveKind::cone};

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> parse_primitive_kind(std::string_view name);

struct TessellationSpec {
  int radial_segments = 48;
  int rings = 24;

  static constexpr int kMaxRadial = 512;
  static constexpr int kMaxRings = 256;

  /// Throws ErrorCode::parameter when out of bounds.
  void validate() const;
  friend bool operator==(const TessellationSpec&, const TessellationSpec&) = default;
};

/// Vertex count make_primitive() produces for `kind`, without building it.
std::size_t primitive_vertex_count(PrimitiveKind kind, const TessellationSpec& tess);

/// Closed, outward-wound primitive filling (or inscribed in) [-0.5, 0.5]^3.
Mesh make_primitive(PrimitiveKind kind, const TessellationSpec& tess = {});

Mesh transform_mesh(const Mesh& mesh, const Transform& t);

/// Divergence-theorem volume without any topology check.
double signed_volume(const Mesh& mesh);

/// Volume of a watertight mesh; throws ErrorCode::validity otherwise.
double mesh_volume(const Mesh& mesh);

struct ValidationReport {
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
  std::size_t invalid_indices = 0;
  std::size_t boundary_edges = 0;      // used by one triangle only
  std::size_t non_manifold_edges = 0;  // used by three or more triangles
  std::size_t misoriented_edges = 0;   // two users, same direction
  std::size_t degenerate_triangles = 0;

  bool watertight() const {
    return invalid_indices == 0 && boundary_edges == 0 && non_manifold_edges == 0 &&
           misoriented_edges == 0;
  }
  std::size_t defects() const {
    return invalid_indices + boundary_edges + non_manifold_edges + misoriented_edges +
           degenerate_triangles;
  }
};

ValidationReport validate_mesh(const Mesh& mesh);

Box3 mesh_aabb(const Mesh& mesh);

/// Throws ErrorCode::parameter on an empty list.
Box3 compute_aabb(std::span<const Mesh> meshes);
Box3 compute_aabb(std::span<const Mesh* const> meshes);

/// Concatenates meshes, re-basing indices.
Mesh merge_meshes(std::span<const Mesh* const> meshes);

}  // namespace craft
