#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "craft/error.hpp"
#include "craft/geometry.hpp"

using namespace craft;

namespace {

constexpr double kSphereVolume = 4.0 / 3.0 * std::numbers::pi * 0.125;  // r = 0.5

}  // namespace

TEST(Primitive, CubeTopologyAndVolume) {
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  EXPECT_EQ(cube.vertices.size(), 8u);
  EXPECT_EQ(cube.triangles.size(), 12u);
  EXPECT_NEAR(mesh_volume(cube), 1.0, 1e-12);
}

TEST(Primitive, CoarseSphereIsSlightlyUnderAnalytic) {
  const Mesh s = make_primitive(PrimitiveKind::sphere, {24, 12});
  const double v = mesh_volume(s);
  EXPECT_LT(v, kSphereVolume);
  EXPECT_LT((kSphereVolume - v) / kSphereVolume, 0.03);
}

TEST(Primitive, DefaultSphereWithinThreePercent) {
  const double v = mesh_volume(make_primitive(PrimitiveKind::sphere));
  EXPECT_NEAR(v, 0.5236, 0.03 * 0.5236);
}

TEST(Primitive, AllKindsWatertightOutwardAndInUnitBox) {
  for (auto kind : kAllPrimitiveKinds) {
    for (TessellationSpec tess : {TessellationSpec{3, 2}, TessellationSpec{24, 12}, TessellationSpec{}}) {
      const Mesh m = make_primitive(kind, tess);
      SCOPED_TRACE(std::string(to_string(kind)));
      const auto r = validate_mesh(m);
      EXPECT_TRUE(r.watertight());
      EXPECT_EQ(r.degenerate_triangles, 0u);
      EXPECT_GT(signed_volume(m), 0.0);
      EXPECT_EQ(m.vertices.size(), primitive_vertex_count(kind, tess));
      const Box3 b = mesh_aabb(m);
      EXPECT_TRUE(Box3({Vec3::Constant(-0.5 - 1e-12), Vec3::Constant(0.5 + 1e-12)}).contains(b));
    }
  }
}

TEST(Primitive, SevenKinds) {
  EXPECT_EQ(kAllPrimitiveKinds.size(), 7u);
  for (auto k : kAllPrimitiveKinds) EXPECT_EQ(parse_primitive_kind(to_string(k)), k);
  EXPECT_EQ(parse_primitive_kind("prism"), PrimitiveKind::triangular_prism);
  EXPECT_FALSE(parse_primitive_kind("torus"));
}

TEST(Primitive, BadTessellationIsParameterError) {
  for (TessellationSpec t : {TessellationSpec{2, 12}, TessellationSpec{24, 1}, TessellationSpec{100000, 12}}) {
    try {
      make_primitive(PrimitiveKind::sphere, t);
      FAIL() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parameter);
    }
  }
}

TEST(Primitive, CuboidContributesEightVertices) {
  EXPECT_EQ(256 * primitive_vertex_count(PrimitiveKind::cube, {}), 2048u);
}

TEST(Transform, IdentityKeepsVertices) {
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  const Mesh t = transform_mesh(cube, Transform::identity());
  EXPECT_EQ(t.vertices, cube.vertices);
  EXPECT_EQ(t.triangles, cube.triangles);
}

TEST(Transform, ScaleAndTranslate) {
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  EXPECT_NEAR(mesh_volume(transform_mesh(cube, Transform::from_scale({2, 1, 1}))), 2.0, 1e-12);
  EXPECT_NEAR(mesh_volume(transform_mesh(cube, Transform::from_scale(Vec3::Constant(0.1)))), 1e-3,
              1e-15);
  const Box3 b = mesh_aabb(transform_mesh(cube, Transform::from_translation({0.1, 0, 0})));
  EXPECT_NEAR(b.min.x(), -0.4, 1e-15);
  EXPECT_NEAR(b.max.x(), 0.6, 1e-15);
  EXPECT_EQ(b.min.y(), -0.5);
  EXPECT_EQ(b.max.z(), 0.5);
}

TEST(Transform, VolumeCovariance) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (auto kind : kAllPrimitiveKinds) {
    const Mesh m = make_primitive(kind);
    const double v = mesh_volume(m);
    for (int i = 0; i < 10; ++i) {
      Transform t;
      t.scale = {u(rng), u(rng), u(rng)};
      t.rotation = Quat(Eigen::AngleAxisd(u(rng), Vec3(u(rng), u(rng), u(rng)).normalized()));
      t.translation = {u(rng), -u(rng), u(rng)};
      const double got = mesh_volume(transform_mesh(m, t));
      EXPECT_NEAR(got / (t.scale.prod() * v), 1.0, 1e-9);
    }
  }
}

TEST(Validate, MissingTriangleGivesThreeBoundaryEdges) {
  Mesh cube = make_primitive(PrimitiveKind::cube);
  EXPECT_EQ(validate_mesh(cube).defects(), 0u);
  cube.triangles.pop_back();
  const auto r = validate_mesh(cube);
  EXPECT_FALSE(r.watertight());
  EXPECT_EQ(r.boundary_edges, 3u);
  try {
    mesh_volume(cube);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validity);
  }
}

TEST(Aabb, Examples) {
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  const Mesh moved = transform_mesh(cube, Transform::from_translation({1, 0, 0}));
  const Box3 one = compute_aabb(std::span<const Mesh>(&cube, 1));
  EXPECT_EQ(one.min, Vec3::Constant(-0.5));
  EXPECT_EQ(one.max, Vec3::Constant(0.5));
  const std::vector<Mesh> two = {moved, cube};
  const Box3 b = compute_aabb(two);
  EXPECT_EQ(b.min.x(), -0.5);
  EXPECT_EQ(b.max.x(), 1.5);
  const Mesh sphere = make_primitive(PrimitiveKind::sphere);
  const Box3 sb = compute_aabb(std::span<const Mesh>(&sphere, 1));
  EXPECT_NEAR(sb.min.y(), -0.5, 1e-15);
  EXPECT_NEAR(sb.max.x(), 0.5, 1e-15);
  try {
    compute_aabb(std::span<const Mesh>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parameter);
  }
}
