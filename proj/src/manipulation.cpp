#include "craft/manipulation.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "craft/error.hpp"

namespace craft {

Vec3 ManipulationBox::move_handle() const {
  Vec3 c = box.center();
  c.y() = box.max.y();
  return c;
}

Vec3 ManipulationBox::rotation_handle(int axis) const {
  Vec3 c = box.center();
  c[axis] = box.max[axis];
  return c;
}

Vec3 ManipulationBox::edge_midpoint(int index) const {
  const int axis = index / 4;
  const int bits = index % 4;
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  Vec3 p;
  p[axis] = box.center()[axis];
  p[a1] = bits & 1 ? box.max[a1] : box.min[a1];
  p[a2] = bits & 2 ? box.max[a2] : box.min[a2];
  return p;
}

ManipulationBox manipulation_box(const SceneDocument& scene, const std::vector<ObjectId>& ids) {
  if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
  std::vector<const Mesh*> meshes;
  for (ObjectId id : ids) meshes.push_back(&scene.object(id).mesh());
  return {compute_aabb(meshes)};
}

ManipulationBox manipulation_box(const SceneDocument& scene) {
  return manipulation_box(scene, scene.selected_ids());
}

double snap_angle(double radians, SnapMode mode) {
  if (mode == SnapMode::free) return radians;
  const double step = kRotationStepDegrees * std::numbers::pi / 180.0;
  return std::round(radians / step) * step;
}

Vec3 snapped_move_delta(const Box3& box, const Vec3& raw_delta, const WorkspaceGrid& grid) {
  const Vec3 lo = grid.to_grid(box.min + raw_delta);
  const Vec3 hi = grid.to_grid(box.max + raw_delta);
  const Vec3 moved = grid.vector_to_grid(raw_delta);
  Vec3 correction = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    const double face_lo = std::min(lo[a], hi[a]);
    const double face_hi = std::max(lo[a], hi[a]);
    double face;
    if (a == 2) {
      face = std::abs(face_lo) <= std::abs(face_hi) ? face_lo : face_hi;
    } else {
      face = moved[a] > 0.0 ? face_hi : face_lo;
    }
    correction[a] = snap_to_multiple(face, grid.spacing) - face;
  }
  return raw_delta + grid.vector_to_world(correction);
}

Vec3 corner_scale_factors(const Box3& box, int corner, const Vec3& target, bool uniform) {
  const Vec3 start = box.corner(corner);
  const Vec3 anchor = box.corner(ManipulationBox::opposite_corner(corner));
  const Vec3 dims = box.extent();
  Vec3 floor_f;
  for (int i = 0; i < 3; ++i) floor_f[i] = dims[i] > 0.0 ? kMinDimension / dims[i] : 1.0;

  if (uniform) {
    const Vec3 diag = start - anchor;
    const double len2 = diag.squaredNorm();
    if (!(len2 > 0.0)) throw Error(ErrorCode::state, "scale diagonal has zero length");
    const double f = std::max((target - anchor).dot(diag) / len2, floor_f.maxCoeff());
    return Vec3::Constant(f);
  }
  Vec3 f;
  for (int i = 0; i < 3; ++i) {
    const double span = start[i] - anchor[i];
    f[i] = span != 0.0 ? (target[i] - anchor[i]) / span : 1.0;
    f[i] = std::max(f[i], floor_f[i]);
  }
  return f;
}

std::map<ObjectId, Transform> scale_transforms(const std::map<ObjectId, Transform>& start,
                                               const Vec3& anchor, const Vec3& factors) {
  std::map<ObjectId, Transform> out;
  const Eigen::DiagonalMatrix<double, 3> d(factors);
  for (const auto& [id, t] : start) {
    Transform n = t;
    const Eigen::Matrix3d r = t.rotation.toRotationMatrix();
    for (int k = 0; k < 3; ++k) n.scale[k] = t.scale[k] * (d * r.col(k)).norm();
    n.translation = anchor + d * (t.translation - anchor);
    out.emplace(id, n);
  }
  return out;
}

// ---------------------------------------------------------------------------

DragSession::DragSession(SceneDocument& scene, Kind kind) : scene_(&scene), kind_(kind) {
  ids_ = scene.selected_ids();
  box_ = manipulation_box(scene, ids_);
  for (ObjectId id : ids_) start_.emplace(id, scene.object(id).transform);
  scene.begin_drag();
}

DragSession::DragSession(DragSession&& o) noexcept
    : scene_(o.scene_),
      kind_(o.kind_),
      ids_(std::move(o.ids_)),
      box_(o.box_),
      start_(std::move(o.start_)),
      grab_(o.grab_),
      axis_(o.axis_),
      corner_(o.corner_),
      active_(o.active_) {
  o.active_ = false;
}

DragSession::~DragSession() {
  if (active_) {
    try {
      cancel();
    } catch (...) {
    }
  }
}

DragSession DragSession::move(SceneDocument& scene, std::optional<Vec3> grab_start) {
  DragSession s(scene, Kind::move);
  s.grab_ = grab_start.value_or(s.box_.move_handle());
  return s;
}

DragSession DragSession::rotate(SceneDocument& scene, int axis) {
  if (axis < 0 || axis > 2) throw Error(ErrorCode::parameter, "rotation axis must be 0, 1 or 2");
  DragSession s(scene, Kind::rotate);
  s.axis_ = axis;
  s.grab_ = s.box_.rotation_handle(axis);
  return s;
}

DragSession DragSession::scale(SceneDocument& scene, int corner) {
  if (corner < 0 || corner > 7) throw Error(ErrorCode::parameter, "corner index must be 0..7");
  DragSession s(scene, Kind::scale);
  s.corner_ = corner;
  s.grab_ = s.box_.corner(corner);
  return s;
}

void DragSession::require_active() const {
  if (!active_) throw Error(ErrorCode::state, "drag session already ended");
}

Vec3 DragSession::update_move(const Vec3& target, SnapMode mode) {
  require_active();
  if (kind_ != Kind::move) throw Error(ErrorCode::state, "not a move drag");
  Vec3 delta = target - grab_;
  if (mode == SnapMode::snapped) {
    if (!scene_->grid()) throw Error(ErrorCode::state, "snapping needs a workspace grid");
    delta = snapped_move_delta(box_.box, delta, *scene_->grid());
  }
  std::map<ObjectId, Transform> next;
  for (const auto& [id, t] : start_) {
    Transform n = t;
    n.translation = t.translation + delta;
    next.emplace(id, n);
  }
  scene_->preview_transforms(next);
  return delta;
}

double DragSession::update_rotation(double raw, SnapMode mode) {
  require_active();
  if (kind_ != Kind::rotate) throw Error(ErrorCode::state, "not a rotation drag");
  const double angle = snap_angle(raw, mode);
  Vec3 axis = Vec3::Zero();
  axis[axis_] = 1.0;
  const Quat q(Eigen::AngleAxisd(angle, axis));
  const Vec3 c = box_.box.center();
  std::map<ObjectId, Transform> next;
  for (const auto& [id, t] : start_) {
    Transform n = t;
    n.rotation = (q * t.rotation).normalized();
    n.translation = q * (t.translation - c) + c;
    next.emplace(id, n);
  }
  scene_->preview_transforms(next);
  return angle;
}

void DragSession::apply_scale(const Vec3& factors) {
  const int anchor_index = ManipulationBox::opposite_corner(corner_);
  const Vec3 anchor_point = box_.box.corner(anchor_index);
  auto next = scale_transforms(start_, anchor_point, factors);
  scene_->preview_transforms(next);
  // Approximated rotated scales can drift the box; pin the anchor corner.
  const Vec3 drift = anchor_point - manipulation_box(*scene_, ids_).box.corner(anchor_index);
  if (drift.cwiseAbs().maxCoeff() > 0.0) {
    for (auto& [id, t] : next) t.translation += drift;
    scene_->preview_transforms(next);
  }
}

Vec3 DragSession::update_scale(const Vec3& target, bool uniform, SnapMode mode) {
  require_active();
  if (kind_ != Kind::scale) throw Error(ErrorCode::state, "not a scale drag");
  Vec3 goal = target;
  if (mode == SnapMode::snapped) {
    if (!scene_->grid()) throw Error(ErrorCode::state, "snapping needs a workspace grid");
    goal = scene_->grid()->snap(target);
  }
  const Vec3 factors = corner_scale_factors(box_.box, corner_, goal, uniform);
  apply_scale(factors);
  return factors;
}

void DragSession::commit() {
  require_active();
  active_ = false;
  static constexpr const char* labels[] = {"move", "rotate", "scale"};
  scene_->commit_drag(labels[static_cast<int>(kind_)]);
}

void DragSession::cancel() {
  require_active();
  active_ = false;
  scene_->cancel_drag();
}

Vec3 parametric_resize(SceneDocument& scene, int axis, double length) {
  if (axis < 0 || axis > 2) throw Error(ErrorCode::parameter, "resize axis must be x, y or z");
  if (!(length >= kMinDimension) || !std::isfinite(length)) {
    throw Error(ErrorCode::parameter, "length must be at least 1 mm");
  }
  const auto ids = scene.selected_ids();
  const ManipulationBox box = manipulation_box(scene, ids);
  const double current = box.box.extent()[axis];
  Vec3 factors = Vec3::Ones();
  factors[axis] = length / current;
  if (factors[axis] == 1.0) return factors;

  std::map<ObjectId, Transform> start;
  for (ObjectId id : ids) start.emplace(id, scene.object(id).transform);
  auto next = scale_transforms(start, box.box.min, factors);
  scene.begin_drag();
  try {
    scene.preview_transforms(next);
    const Vec3 drift = box.box.min - manipulation_box(scene, ids).box.min;
    if (drift.cwiseAbs().maxCoeff() > 0.0) {
      for (auto& [id, t] : next) t.translation += drift;
      scene.preview_transforms(next);
    }
    scene.commit_drag("resize");
  } catch (...) {
    scene.cancel_drag();
    throw;
  }
  return factors;
}

std::string format_centimeters(double meters) { return fmt::format("{:.2f} cm", meters * 100.0); }

double ruler_measure(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

std::string Ruler::label() const { return format_centimeters(length()); }

int parse_axis(std::string_view name) {
  if (name == "x") return 0;
  if (name == "y") return 1;
  if (name == "z") return 2;
  throw Error(ErrorCode::parameter, "axis must be x, y or z");
}

}  // namespace craft
