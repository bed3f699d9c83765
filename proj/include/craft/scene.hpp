#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "craft/csg.hpp"
#include "craft/fab/printer.hpp"
#include "craft/geometry.hpp"
#include "craft/grid.hpp"
#include "craft/room.hpp"

namespace craft {

/// Edge length of a freshly created object's bounding cube (meters).
inline constexpr double kDefaultObjectSize = 0.10;
/// Height of the spawn point above the grid plane (meters).
inline constexpr double kSpawnHeight = 0.15;
/// Offset of duplicates along the grid u axis (meters).
inline constexpr double kDuplicateOffset = 0.05;

struct DesignObject {
  ObjectId id = 0;
  CsgTree tree;  // object-local geometry
  Transform transform;
  Solidity solidity = Solidity::solid;
  Color color;
  bool on_plate = false;  // copy dropped into the printer twin
  std::shared_ptr<const Mesh> local;  // evaluate_tree(tree)
  std::shared_ptr<const Mesh> world;  // local placed by transform

  const Mesh& mesh() const { return *world; }
  /// Tree with the object transform folded in, usable as a combine operand.
  CsgTree world_tree() const;
};

struct SceneLimits {
  std::size_t max_blocks = 300;
  std::size_t max_vertices = 20000;
  friend bool operator==(const SceneLimits&, const SceneLimits&) = default;
};

struct SceneCounters {
  std::size_t blocks = 0;    // primitive leaves over all objects
  std::size_t vertices = 0;  // tessellated vertices of those leaves
  friend bool operator==(const SceneCounters&, const SceneCounters&) = default;
};

/// Everything undo/redo restores.
struct SceneState {
  std::optional<WorkspaceGrid> grid;
  std::map<ObjectId, DesignObject> objects;
  std::optional<PrinterTwin> printer;
};

enum class SelectionMode { single, multiple };

class SceneDocument {
 public:
  explicit SceneDocument(Room room = default_room(), TessellationSpec tess = {},
                         SceneLimits limits = {});

  const Room& room() const { return room_; }
  const TessellationSpec& tessellation() const { return tess_; }
  const SceneLimits& limits() const { return limits_; }
  const CsgOptions& csg_options() const { return csg_; }
  const SceneState& state() const { return state_; }
  const std::optional<WorkspaceGrid>& grid() const { return state_.grid; }
  const std::optional<PrinterTwin>& printer() const { return state_.printer; }
  const std::map<ObjectId, DesignObject>& objects() const { return state_.objects; }

  bool contains(ObjectId id) const { return state_.objects.count(id) != 0; }
  /// Throws ErrorCode::not_found.
  const DesignObject& object(ObjectId id) const;
  /// Id the next created object will get.
  ObjectId next_id() const { return next_id_; }

  // Workspace
  const WorkspaceGrid& select_workspace(const WorkspaceCandidate& candidate,
                                        double spacing = kDefaultGridSpacing, double offset = 0.0);
  void set_grid_hints(bool occlusion, const std::string& color);
  /// Changes spacing and normal offset of the current grid, same frame.
  void configure_grid(double spacing, double offset);

  // Object lifecycle. All of these are single undoable commands.
  ObjectId create_object(PrimitiveKind kind);
  void set_solidity(std::span<const ObjectId> ids, Solidity solidity);
  void set_color(std::span<const ObjectId> ids, Color color);
  std::vector<ObjectId> duplicate(std::span<const ObjectId> ids);
  void remove(std::span<const ObjectId> ids);
  /// Combines the objects into one new solid that replaces them.
  ObjectId combine(std::span<const ObjectId> ids);

  // Selection (not part of the history or the saved document).
  SelectionMode selection_mode() const { return mode_; }
  void set_selection_mode(SelectionMode mode);
  void select(ObjectId id);
  void select_all();
  void deselect_all();
  const std::set<ObjectId>& selection() const { return selection_; }
  std::vector<ObjectId> selected_ids() const { return {selection_.begin(), selection_.end()}; }

  // History
  bool can_undo() const { return cursor_ > 0; }
  bool can_redo() const { return cursor_ < history_.size(); }
  /// Throws ErrorCode::boundary when there is nothing to undo / redo.
  void undo();
  void redo();
  std::size_t history_size() const { return history_.size(); }
  std::size_t history_depth() const { return depth_; }
  void set_history_depth(std::size_t depth);
  const std::string& last_command() const;

  // Counters
  const SceneCounters& counters() const { return counters_; }
  SceneCounters recount() const;

  // Printer twin
  void set_printer(PrinterTwin twin);
  void set_printer_addresses(const std::string& server, const std::string& printer);

  /// Low-level mutation used by manipulation and fabrication: runs `edit` on
  /// a working copy of the state and records it as one undoable command.
  template <typename Edit>
  void transact(const std::string& label, Edit&& edit) {
    require_idle();
    SceneState next = state_;
    edit(next);
    commit_state(label, std::move(next));
  }

  // Drag support: changes without history, closed by commit or cancel.
  void begin_drag();
  bool drag_active() const { return dragging_.has_value(); }
  void preview_transforms(const std::map<ObjectId, Transform>& transforms);
  void commit_drag(const std::string& label);
  void cancel_drag();

  /// Object with fresh id, baked meshes, counted against the limits.
  DesignObject make_object(CsgTree tree, const Transform& transform) const;
  ObjectId allocate_id() { return next_id_++; }
  void check_capacity(const SceneState& candidate) const;
  /// Re-bakes the world mesh after a transform change.
  static void place(DesignObject& obj, const Transform& transform);

  std::string save() const;
  /// Throws ErrorCode::parse; nothing is returned on failure.
  static SceneDocument load(std::string_view text);

 private:
  struct Entry {
    std::string label;
    SceneState before;
    SceneState after;
  };

  void require_idle() const;
  void commit_state(const std::string& label, SceneState next);
  void restore(const SceneState& s);
  void prune_selection();
  std::vector<ObjectId> require_ids(std::span<const ObjectId> ids) const;

  Room room_;
  TessellationSpec tess_;
  SceneLimits limits_;
  CsgOptions csg_;
  SceneState state_;
  SceneCounters counters_;
  ObjectId next_id_ = 1;

  SelectionMode mode_ = SelectionMode::single;
  std::set<ObjectId> selection_;

  std::deque<Entry> history_;
  std::size_t cursor_ = 0;
  std::size_t depth_ = 100;

  std::optional<SceneState> dragging_;
};

SceneCounters count_state(const SceneState& state, const TessellationSpec& tess);

nlohmann::json tree_to_json(const CsgTree& tree);
CsgTree tree_from_json(const nlohmann::json& j);
nlohmann::json transform_to_json(const Transform& t);
Transform transform_from_json(const nlohmann::json& j);

}  // namespace craft
