#include <gtest/gtest.h>

#include <functional>
#include <numbers>

#include "craft/error.hpp"
#include "craft/manipulation.hpp"
#include "support.hpp"

using namespace craft;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

/// Scene gridded on the floor: u = +x, v = -z, normal = +y, origin (0, 0, 3).
SceneDocument floor_scene(double spacing = 0.02) {
  SceneDocument s;
  WorkspaceCandidate c = workspace_by_label(s.room(), "floor");
  s.select_workspace(c, spacing);
  return s;
}

ObjectId place_cube(SceneDocument& s, const Vec3& center, const Vec3& size) {
  const ObjectId id = s.create_object(PrimitiveKind::cube);
  s.select(id);
  const Transform t{center, Quat::Identity(), size};
  s.begin_drag();
  s.preview_transforms({{id, t}});
  s.commit_drag("place");
  return id;
}

}  // namespace

TEST(Box, UnitCubeHandles) {
  const ManipulationBox b{{Vec3::Constant(-0.5), Vec3::Constant(0.5)}};
  EXPECT_EQ(b.move_handle(), Vec3(0, 0.5, 0));
  EXPECT_EQ(b.rotation_handle(0), Vec3(0.5, 0, 0));
  EXPECT_EQ(b.corner(7), Vec3::Constant(0.5));
  EXPECT_EQ(ManipulationBox::opposite_corner(7), 0);
  EXPECT_EQ(b.edge_midpoint(0), Vec3(0, -0.5, -0.5));
}

TEST(Box, SpansSelectionAndStaysAxisAligned) {
  SceneDocument s = floor_scene();
  const ObjectId a = place_cube(s, {1, 0.5, 1}, Vec3::Constant(0.1));
  const ObjectId b = place_cube(s, {2, 0.5, 1}, Vec3::Constant(0.1));
  s.set_selection_mode(SelectionMode::multiple);
  s.select(a);
  const Box3 box = manipulation_box(s).box;
  EXPECT_NEAR(box.min.x(), 0.95, 1e-12);
  EXPECT_NEAR(box.max.x(), 2.05, 1e-12);
  s.deselect_all();
  s.select(b);
  auto rot = DragSession::rotate(s, 1);
  rot.update_rotation(45 * kDeg, SnapMode::free);
  rot.commit();
  const Box3 after = manipulation_box(s).box;
  EXPECT_NEAR(after.extent().x(), 0.1 * std::sqrt(2.0), 1e-9);
  s.deselect_all();
  EXPECT_THROW(manipulation_box(s), Error);
}

TEST(Move, FreeTranslatesExactly) {
  SceneDocument s = floor_scene();
  const ObjectId id = place_cube(s, {1, 0.5, 1}, Vec3::Constant(0.1));
  const Vec3 start = s.object(id).transform.translation;
  auto drag = DragSession::move(s);
  const Vec3 d = drag.update_move(drag.grab_start() + Vec3(0.03, 0, 0.01), SnapMode::free);
  drag.commit();
  EXPECT_TRUE(d.isApprox(Vec3(0.03, 0, 0.01), 1e-12));
  EXPECT_TRUE(s.object(id).transform.translation.isApprox(start + Vec3(0.03, 0, 0.01), 1e-15));
}

TEST(Move, SnapRuleOneNormalAxis) {
  SceneDocument s = floor_scene();
  // Bottom face at height 0.013 -> nearer face, snaps to 0.02.
  place_cube(s, {1.0, 0.063, 1.0}, Vec3::Constant(0.1));
  auto drag = DragSession::move(s);
  drag.update_move(drag.grab_start(), SnapMode::snapped);
  drag.commit();
  EXPECT_NEAR(manipulation_box(s).box.min.y(), 0.02, 1e-12);
}

TEST(Move, SnapRuleTwoInPlane) {
  SceneDocument s = floor_scene();
  // u = +x on the floor grid; u-extent [0.005, 0.105] after a +u motion.
  place_cube(s, {0.055 - 0.004, 0.05, 1.0}, Vec3::Constant(0.1));
  auto drag = DragSession::move(s);
  drag.update_move(drag.grab_start() + Vec3(0.004, 0, 0), SnapMode::snapped);
  drag.commit();
  const Box3 b = manipulation_box(s).box;
  EXPECT_NEAR(b.min.x(), 0.0, 1e-12);
  EXPECT_NEAR(b.max.x(), 0.10, 1e-12);
}

TEST(Rotate, Examples) {
  EXPECT_NEAR(snap_angle(37 * kDeg, SnapMode::free), 37 * kDeg, 1e-15);
  EXPECT_NEAR(snap_angle(37 * kDeg, SnapMode::snapped), 30 * kDeg, 1e-12);
  EXPECT_NEAR(snap_angle(37.5 * kDeg, SnapMode::snapped), 45 * kDeg, 1e-12);
  EXPECT_NEAR(snap_angle(-37.5 * kDeg, SnapMode::snapped), -45 * kDeg, 1e-12);
}

TEST(Rotate, PivotsAboutBoxCenter) {
  SceneDocument s = floor_scene();
  const ObjectId a = place_cube(s, {1, 0.5, 1}, Vec3::Constant(0.1));
  const ObjectId b = place_cube(s, {1.4, 0.5, 1}, Vec3::Constant(0.1));
  s.set_selection_mode(SelectionMode::multiple);
  s.select(a);
  auto drag = DragSession::rotate(s, 1);
  const double applied = drag.update_rotation(92 * kDeg, SnapMode::snapped);
  drag.commit();
  EXPECT_NEAR(applied, 90 * kDeg, 1e-12);
  EXPECT_TRUE(s.object(a).transform.translation.isApprox(Vec3(1.2, 0.5, 1.2), 1e-12));
  EXPECT_TRUE(s.object(b).transform.translation.isApprox(Vec3(1.2, 0.5, 0.8), 1e-12));
}

TEST(Scale, UniformDoubleIsEightTimes) {
  SceneDocument s;
  s.select_workspace(workspace_by_label(s.room(), "floor"));
  const ObjectId id = place_cube(s, {2, 1, 1.5}, Vec3::Ones());
  auto drag = DragSession::scale(s, 7);
  const Vec3 anchor = drag.anchor();
  const Vec3 target = anchor + 2.0 * (drag.grab_start() - anchor);
  const Vec3 f = drag.update_scale(target, true, SnapMode::free);
  drag.commit();
  EXPECT_TRUE(f.isApprox(Vec3::Constant(2)));
  EXPECT_NEAR(mesh_volume(s.object(id).mesh()), 8.0, 1e-9);
  EXPECT_TRUE(manipulation_box(s).box.corner(0).isApprox(anchor, 1e-12));
}

TEST(Scale, FreeXOnly) {
  SceneDocument s = floor_scene();
  place_cube(s, {2, 1, 1.5}, Vec3::Ones());
  auto drag = DragSession::scale(s, 7);
  drag.update_scale(drag.grab_start() + Vec3(0.5, 0, 0), false, SnapMode::free);
  drag.commit();
  EXPECT_TRUE(manipulation_box(s).box.extent().isApprox(Vec3(1.5, 1, 1), 1e-12));
}

TEST(Scale, SnappedCornerOnLatticePoint) {
  SceneDocument s = floor_scene();
  const WorkspaceGrid g = *s.grid();
  // Cube centered on the grid origin. The corner at (max u, max v, max n) is
  // world (+x, +y, -z) since v = -z, which is corner index 3.
  place_cube(s, g.origin, Vec3::Constant(0.1));
  auto drag = DragSession::scale(s, 3);
  const Vec3 hand = g.to_world({0.031, 0.049, 0.012});
  drag.update_scale(hand, false, SnapMode::snapped);
  drag.commit();
  const Vec3 corner = g.to_grid(manipulation_box(s).box.corner(3));
  EXPECT_NEAR(corner.x(), 0.04, 1e-12);
  EXPECT_NEAR(corner.y(), 0.04, 1e-12);
  EXPECT_NEAR(corner.z(), 0.02, 1e-12);
}

TEST(Scale, ZeroDiagonalIsStateError) {
  const Box3 flat{Vec3::Zero(), Vec3::Zero()};
  EXPECT_THROW(corner_scale_factors(flat, 7, Vec3::Ones(), true), Error);
}

TEST(Scale, ClampsAtOneMillimeter) {
  const Box3 b{Vec3::Zero(), Vec3::Constant(0.1)};
  const Vec3 f = corner_scale_factors(b, 7, Vec3(-1, 0.05, 0.1), false);
  EXPECT_NEAR(f.x() * 0.1, kMinDimension, 1e-15);
  EXPECT_NEAR(f.y(), 0.5, 1e-15);
}

TEST(Resize, DoublesWidth) {
  SceneDocument s = floor_scene();
  place_cube(s, {1, 0.05, 1}, Vec3::Constant(0.1));
  const Box3 before = manipulation_box(s).box;
  const Vec3 f = parametric_resize(s, 0, 0.20);
  EXPECT_NEAR(f.x(), 2.0, 1e-12);
  const Box3 after = manipulation_box(s).box;
  EXPECT_NEAR(after.extent().x(), 0.20, 1e-12);
  EXPECT_NEAR(after.min.x(), before.min.x(), 1e-12);
  EXPECT_NEAR(after.extent().y(), 0.1, 1e-12);
}

TEST(Resize, SameLengthIsIdentity) {
  SceneDocument s = floor_scene();
  place_cube(s, {1, 0.05, 1}, Vec3::Constant(0.1));
  const std::string before = s.save();
  const double current = manipulation_box(s).box.extent().y();
  EXPECT_EQ(parametric_resize(s, 1, current), Vec3::Ones());
  EXPECT_EQ(s.save(), before);
}

TEST(Resize, MultiObjectSharedAnchor) {
  SceneDocument s = floor_scene();
  const ObjectId a = place_cube(s, {1, 0.05, 1}, Vec3::Constant(0.1));
  place_cube(s, {1.3, 0.05, 1}, Vec3::Constant(0.1));
  s.set_selection_mode(SelectionMode::multiple);
  s.select(a);
  parametric_resize(s, 0, 0.8);
  const Box3 b = manipulation_box(s).box;
  EXPECT_NEAR(b.extent().x(), 0.8, 1e-12);
  EXPECT_NEAR(b.min.x(), 0.95, 1e-12);
  EXPECT_THROW(parametric_resize(s, 0, 0.0005), Error);
}

TEST(Ruler, Examples) {
  EXPECT_EQ(Ruler{}.label(), "0.00 cm");
  EXPECT_EQ((Ruler{Vec3::Zero(), Vec3(0.2, 0, 0)}).label(), "20.00 cm");
  EXPECT_EQ((Ruler{Vec3::Zero(), Vec3(0.03, 0.04, 0)}).label(), "5.00 cm");
}

TEST(Drag, CancelRestoresBitExactly) {
  SceneDocument s = floor_scene();
  const ObjectId id = place_cube(s, {1, 0.05, 1}, Vec3::Constant(0.1));
  const Transform before = s.object(id).transform;
  const std::string doc = s.save();
  {
    auto drag = DragSession::rotate(s, 0);
    drag.update_rotation(0.3, SnapMode::free);
    drag.cancel();
  }
  {
    auto drag = DragSession::scale(s, 5);
    drag.update_scale(Vec3(3, 3, 3), false, SnapMode::free);
  }  // abandoned sessions cancel
  EXPECT_EQ(s.object(id).transform, before);
  EXPECT_EQ(s.save(), doc);
}
