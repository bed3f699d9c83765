#include "craft/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "craft/error.hpp"

namespace craft {

namespace {

constexpr double kPi = std::numbers::pi;

class MeshBuilder {
 public:
  std::uint32_t add(double x, double y, double z) {
    mesh_.vertices.emplace_back(x, y, z);
    return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
  }

  void tri(std::uint32_t a, std::uint32_t b, std::uint32_t c) { mesh_.triangles.push_back({a, b, c}); }

  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    tri(a, b, c);
    tri(a, c, d);
  }

  /// Ring of `n` vertices in the xz-plane at height y.
  std::uint32_t ring(int n, double radius, double y) {
    const auto first = static_cast<std::uint32_t>(mesh_.vertices.size());
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * kPi * j / n;
      add(radius * std::cos(phi), y, radius * std::sin(phi));
    }
    return first;
  }

  void strip(std::uint32_t ring_a, std::uint32_t ring_b, int n) {
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::uint32_t>((j + 1) % n);
      quad(ring_a + j, ring_a + k, ring_b + k, ring_b + j);
    }
  }

  void fan(std::uint32_t apex, std::uint32_t ring_first, int n) {
    for (int j = 0; j < n; ++j) {
      tri(apex, ring_first + j, ring_first + static_cast<std::uint32_t>((j + 1) % n));
    }
  }

  /// All primitives are convex around the origin: flip any triangle whose
  /// normal points back toward it.
  Mesh finish() {
    for (auto& t : mesh_.triangles) {
      const Vec3& a = mesh_.vertices[t[0]];
      const Vec3& b = mesh_.vertices[t[1]];
      const Vec3& c = mesh_.vertices[t[2]];
      const Vec3 n = (b - a).cross(c - a);
      if (n.dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
    }
    return std::move(mesh_);
  }

 private:
  Mesh mesh_;
};

int capsule_cap_bands(const TessellationSpec& tess) { return std::max(1, tess.rings / 2); }

Mesh make_cube() {
  MeshBuilder b;
  for (int i = 0; i < 8; ++i) {
    b.add(i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5, i & 4 ? 0.5 : -0.5);
  }
  b.quad(0, 2, 6, 4);  // -x
  b.quad(1, 3, 7, 5);  // +x
  b.quad(0, 1, 5, 4);  // -y
  b.quad(2, 3, 7, 6);  // +y
  b.quad(0, 1, 3, 2);  // -z
  b.quad(4, 5, 7, 6);  // +z
  return b.finish();
}

Mesh make_sphere(const TessellationSpec& tess) {
  MeshBuilder b;
  const int n = tess.radial_segments;
  const auto top = b.add(0.0, 0.5, 0.0);
  std::uint32_t prev = 0;
  for (int k = 1; k < tess.rings; ++k) {
    const double theta = kPi * k / tess.rings;
    const auto ring = b.ring(n, 0.5 * std::sin(theta), 0.5 * std::cos(theta));
    if (k == 1) {
      b.fan(top, ring, n);
    } else {
      b.strip(prev, ring, n);
    }
    prev = ring;
  }
  const auto bottom = b.add(0.0, -0.5, 0.0);
  b.fan(bottom, prev, n);
  return b.finish();
}

Mesh make_cylinder(const TessellationSpec& tess) {
  MeshBuilder b;
  const int n = tess.radial_segments;
  const auto lower = b.ring(n, 0.5, -0.5);
  const auto upper = b.ring(n, 0.5, 0.5);
  const auto lower_c = b.add(0.0, -0.5, 0.0);
  const auto upper_c = b.add(0.0, 0.5, 0.0);
  b.strip(lower, upper, n);
  b.fan(lower_c, lower, n);
  b.fan(upper_c, upper, n);
  return b.finish();
}

Mesh make_capsule(const TessellationSpec& tess) {
  MeshBuilder b;
  const int n = tess.radial_segments;
  const int bands = capsule_cap_bands(tess);
  const auto top = b.add(0.0, 0.5, 0.0);
  std::vector<std::uint32_t> rings;
  for (int k = 1; k <= bands; ++k) {
    const double a = 0.5 * kPi * k / bands;
    rings.push_back(b.ring(n, 0.5 * std::sin(a), 0.25 + 0.25 * std::cos(a)));
  }
  for (int k = bands; k >= 1; --k) {
    const double a = 0.5 * kPi * k / bands;
    rings.push_back(b.ring(n, 0.5 * std::sin(a), -0.25 - 0.25 * std::cos(a)));
  }
  const auto bottom = b.add(0.0, -0.5, 0.0);
  b.fan(top, rings.front(), n);
  for (std::size_t i = 0; i + 1 < rings.size(); ++i) b.strip(rings[i], rings[i + 1], n);
  b.fan(bottom, rings.back(), n);
  return b.finish();
}

Mesh make_prism() {
  MeshBuilder b;
  // Triangle in the xy-plane, extruded along z.
  const std::array<std::array<double, 2>, 3> tri = {{{-0.5, -0.5}, {0.5, -0.5}, {0.0, 0.5}}};
  for (double z : {-0.5, 0.5}) {
    for (const auto& p : tri) b.add(p[0], p[1], z);
  }
  b.tri(0, 1, 2);
  b.tri(3, 4, 5);
  for (std::uint32_t i = 0; i < 3; ++i) {
    const std::uint32_t j = (i + 1) % 3;
    b.quad(i, j, j + 3, i + 3);
  }
  return b.finish();
}

Mesh make_pyramid() {
  MeshBuilder b;
  b.add(-0.5, -0.5, -0.5);
  b.add(0.5, -0.5, -0.5);
  b.add(0.5, -0.5, 0.5);
  b.add(-0.5, -0.5, 0.5);
  const auto apex = b.add(0.0, 0.5, 0.0);
  b.quad(0, 1, 2, 3);
  for (std::uint32_t i = 0; i < 4; ++i) b.tri(apex, i, (i + 1) % 4);
  return b.finish();
}

Mesh make_cone(const TessellationSpec& tess) {
  MeshBuilder b;
  const int n = tess.radial_segments;
  const auto base = b.ring(n, 0.5, -0.5);
  const auto center = b.add(0.0, -0.5, 0.0);
  const auto apex = b.add(0.0, 0.5, 0.0);
  b.fan(center, base, n);
  b.fan(apex, base, n);
  return b.finish();
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
}

}  // namespace

Eigen::Affine3d Transform::affine() const {
  Eigen::Affine3d a = Eigen::Affine3d::Identity();
  a.translate(translation);
  a.rotate(rotation);
  a.scale(scale);
  return a;
}

bool Transform::is_identity() const {
  return translation == Vec3::Zero() && rotation.coeffs() == Quat::Identity().coeffs() &&
         scale == Vec3::Ones();
}

Transform Transform::normalized() const {
  Transform t = *this;
  t.rotation.normalize();
  t.scale = t.scale.cwiseMax(1e-12);
  return t;
}

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::cube: return "cube";
    case PrimitiveKind::sphere: return "sphere";
    case PrimitiveKind::cylinder: return "cylinder";
    case PrimitiveKind::capsule: return "capsule";
    case PrimitiveKind::triangular_prism: return "triangular-prism";
    case PrimitiveKind::pyramid: return "pyramid";
    case PrimitiveKind::cone: return "cone";
  }
  return "unknown";
}

std::optional<PrimitiveKind> parse_primitive_kind(std::string_view name) {
  for (auto kind : kAllPrimitiveKinds) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "prism" || name == "triangular_prism") return PrimitiveKind::triangular_prism;
  return std::nullopt;
}

void TessellationSpec::validate() const {
  if (radial_segments < 3 || radial_segments > kMaxRadial) {
    throw Error(ErrorCode::parameter,
                "radial segments must be in [3, " + std::to_string(kMaxRadial) + "], got " +
                    std::to_string(radial_segments));
  }
  if (rings < 2 || rings > kMaxRings) {
    throw Error(ErrorCode::parameter, "rings must be in [2, " + std::to_string(kMaxRings) +
                                          "], got " + std::to_string(rings));
  }
}

std::size_t primitive_vertex_count(PrimitiveKind kind, const TessellationSpec& tess) {
  tess.validate();
  const auto n = static_cast<std::size_t>(tess.radial_segments);
  switch (kind) {
    case PrimitiveKind::cube: return 8;
    case PrimitiveKind::sphere: return n * static_cast<std::size_t>(tess.rings - 1) + 2;
    case PrimitiveKind::cylinder: return 2 * n + 2;
    case PrimitiveKind::capsule:
      return 2 * n * static_cast<std::size_t>(capsule_cap_bands(tess)) + 2;
    case PrimitiveKind::triangular_prism: return 6;
    case PrimitiveKind::pyramid: return 5;
    case PrimitiveKind::cone: return n + 2;
  }
  return 0;
}

Mesh make_primitive(PrimitiveKind kind, const TessellationSpec& tess) {
  tess.validate();
  switch (kind) {
    case PrimitiveKind::cube: return make_cube();
    case PrimitiveKind::sphere: return make_sphere(tess);
    case PrimitiveKind::cylinder: return make_cylinder(tess);
    case PrimitiveKind::capsule: return make_capsule(tess);
    case PrimitiveKind::triangular_prism: return make_prism();
    case PrimitiveKind::pyramid: return make_pyramid();
    case PrimitiveKind::cone: return make_cone(tess);
  }
  throw Error(ErrorCode::parameter, "unknown primitive kind");
}

Mesh transform_mesh(const Mesh& mesh, const Transform& t) {
  Mesh out;
  out.triangles = mesh.triangles;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.vertices.push_back(t.apply(v));
  return out;
}

double signed_volume(const Mesh& mesh) {
  double six_v = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

double mesh_volume(const Mesh& mesh) {
  const auto report = validate_mesh(mesh);
  if (!report.watertight()) {
    throw Error(ErrorCode::validity,
                "mesh is not watertight (" + std::to_string(report.boundary_edges) +
                    " boundary, " + std::to_string(report.non_manifold_edges) +
                    " non-manifold, " + std::to_string(report.misoriented_edges) +
                    " misoriented edges)");
  }
  return signed_volume(mesh);
}

ValidationReport validate_mesh(const Mesh& mesh) {
  ValidationReport r;
  r.vertex_count = mesh.vertices.size();
  r.triangle_count = mesh.triangles.size();

  struct EdgeUse {
    std::uint32_t forward = 0;  // traversed low -> high index
    std::uint32_t backward = 0;
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.triangles.size() * 2);

  for (const auto& t : mesh.triangles) {
    if (t[0] >= r.vertex_count || t[1] >= r.vertex_count || t[2] >= r.vertex_count) {
      ++r.invalid_indices;
      continue;
    }
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] ||
        0.5 * (b - a).cross(c - a).norm() <= kDegenerateArea) {
      ++r.degenerate_triangles;
    }
    for (int i = 0; i < 3; ++i) {
      const std::uint32_t u = t[i];
      const std::uint32_t v = t[(i + 1) % 3];
      if (u == v) continue;
      auto& use = edges[edge_key(u, v)];
      (u < v ? use.forward : use.backward)++;
    }
  }
  for (const auto& [key, use] : edges) {
    const auto total = use.forward + use.backward;
    if (total == 1) {
      ++r.boundary_edges;
    } else if (total > 2) {
      ++r.non_manifold_edges;
    } else if (use.forward != 1) {
      ++r.misoriented_edges;
    }
  }
  return r;
}

Box3 mesh_aabb(const Mesh& mesh) {
  Box3 box;
  for (const auto& v : mesh.vertices) box.expand(v);
  return box;
}

Box3 compute_aabb(std::span<const Mesh* const> meshes) {
  if (meshes.empty()) throw Error(ErrorCode::parameter, "compute_aabb needs at least one mesh");
  Box3 box;
  for (const Mesh* m : meshes) box.expand(mesh_aabb(*m));
  return box;
}

Box3 compute_aabb(std::span<const Mesh> meshes) {
  std::vector<const Mesh*> ptrs;
  ptrs.reserve(meshes.size());
  for (const auto& m : meshes) ptrs.push_back(&m);
  return compute_aabb(std::span<const Mesh* const>(ptrs));
}

Mesh merge_meshes(std::span<const Mesh* const> meshes) {
  Mesh out;
  for (const Mesh* m : meshes) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m->vertices.begin(), m->vertices.end());
    for (const auto& t : m->triangles) out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return out;
}

}  // namespace craft
