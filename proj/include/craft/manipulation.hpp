#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "craft/geometry.hpp"
#include "craft/grid.hpp"
#include "craft/scene.hpp"

namespace craft {

enum class SnapMode { free, snapped };

inline constexpr double kRotationStepDegrees = 15.0;

/// World-axis-aligned box around the selection and its handle positions.
struct ManipulationBox {
  Box3 box;

  Vec3 move_handle() const;             // top face center (+y is up)
  Vec3 rotation_handle(int axis) const; // on the + face of `axis`, through the center
  Vec3 corner(int index) const { return box.corner(index); }
  static int opposite_corner(int index) { return index ^ 7; }
  /// Edge `index` in 0..11: axis = index / 4, the other two axes' min/max
  /// sides come from bits 0 and 1 of index % 4.
  Vec3 edge_midpoint(int index) const;
};

/// Throws ErrorCode::state when nothing is selected.
ManipulationBox manipulation_box(const SceneDocument& scene);
ManipulationBox manipulation_box(const SceneDocument& scene, const std::vector<ObjectId>& ids);

/// Rotation quantization: round(raw / 15 deg) * 15 deg, half away from zero.
double snap_angle(double radians, SnapMode mode);

/// Snapped move: per grid axis one box face is moved onto the nearest lattice
/// plane. Along the normal the face nearer the grid plane is used; along u and
/// v the face on the side of the net displacement (min face when zero).
Vec3 snapped_move_delta(const Box3& box_at_grab, const Vec3& raw_delta, const WorkspaceGrid& grid);

/// Per-axis factors for dragging corner `corner` of `box` to `target`, with
/// the opposite corner as anchor. Factors keep every dimension >= 1 mm.
Vec3 corner_scale_factors(const Box3& box, int corner, const Vec3& target, bool uniform);

/// New transforms for scaling world-space by `factors` about `anchor`.
/// Exact when each object's rotation maps local axes onto world axes;
/// otherwise the per-axis scale is the length of the scaled local axis.
std::map<ObjectId, Transform> scale_transforms(const std::map<ObjectId, Transform>& start,
                                               const Vec3& anchor, const Vec3& factors);

class DragSession {
 public:
  enum class Kind { move, rotate, scale };

  /// Move drag grabbed at `grab_start` (defaults to the move handle).
  static DragSession move(SceneDocument& scene, std::optional<Vec3> grab_start = std::nullopt);
  static DragSession rotate(SceneDocument& scene, int axis);
  static DragSession scale(SceneDocument& scene, int corner);

  DragSession(DragSession&& other) noexcept;
  DragSession& operator=(DragSession&&) = delete;
  ~DragSession();

  Kind kind() const { return kind_; }
  const ManipulationBox& start_box() const { return box_; }
  Vec3 grab_start() const { return grab_; }
  Vec3 anchor() const { return box_.corner(ManipulationBox::opposite_corner(corner_)); }

  /// Returns the translation applied to the selection.
  Vec3 update_move(const Vec3& target, SnapMode mode);
  /// Returns the applied angle (radians) relative to the session start.
  double update_rotation(double raw_radians, SnapMode mode);
  /// Returns the per-axis factors applied relative to the session start.
  Vec3 update_scale(const Vec3& target, bool uniform, SnapMode mode);

  /// Records the whole drag as one undoable command.
  void commit();
  /// Restores every transform exactly as it was at grab time.
  void cancel();
  bool active() const { return active_; }

 private:
  DragSession(SceneDocument& scene, Kind kind);
  void require_active() const;
  void apply_scale(const Vec3& factors);

  SceneDocument* scene_;
  Kind kind_;
  std::vector<ObjectId> ids_;
  ManipulationBox box_;
  std::map<ObjectId, Transform> start_;
  Vec3 grab_ = Vec3::Zero();
  int axis_ = 0;
  int corner_ = 7;
  bool active_ = true;
};

/// Sets the selection's extent along `axis` to `length`, anchored at the min
/// face. Returns the factors applied. Throws ErrorCode::parameter below 1 mm.
Vec3 parametric_resize(SceneDocument& scene, int axis, double length);

struct Ruler {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  double length() const { return (a - b).norm(); }
  /// "20.00 cm"
  std::string label() const;
};

double ruler_measure(const Vec3& a, const Vec3& b);
std::string format_centimeters(double meters);

/// "x" / "y" / "z" -> 0 / 1 / 2. Throws ErrorCode::parameter.
int parse_axis(std::string_view name);

}  // namespace craft
