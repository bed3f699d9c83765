#include "craft/scene.hpp"

#include <algorithm>
#include <cmath>

#include "craft/error.hpp"
#include "json_util.hpp"

namespace craft {

using namespace detail;

namespace {

constexpr const char* kFormat = "realitycraft-scene";
constexpr int kVersion = 1;

void count_tree(const CsgTree& t, const TessellationSpec& tess, SceneCounters& c) {
  if (t.op == CsgNode::Op::leaf) {
    ++c.blocks;
    c.vertices += primitive_vertex_count(t.primitive, tess);
    return;
  }
  for (const auto& child : t.children) count_tree(child, tess, c);
}

std::string_view op_name(CsgNode::Op op) {
  switch (op) {
    case CsgNode::Op::leaf: return "leaf";
    case CsgNode::Op::union_all: return "union";
    case CsgNode::Op::difference: return "difference";
  }
  return "leaf";
}

Solidity parse_solidity(const json& v, const std::string& path) {
  const std::string s = text(v, path);
  if (s == "solid") return Solidity::solid;
  if (s == "hole") return Solidity::hole;
  field_error(path, "expected \"solid\" or \"hole\"");
}

}  // namespace

CsgTree DesignObject::world_tree() const {
  CsgTree t;
  if (tree.transform.is_identity()) {
    t = tree;
    t.transform = transform;
  } else {
    t = CsgNode::make_union({tree});
    t.transform = transform;
  }
  t.solidity = solidity;
  return t;
}

SceneCounters count_state(const SceneState& state, const TessellationSpec& tess) {
  SceneCounters c;
  for (const auto& [id, obj] : state.objects) count_tree(obj.tree, tess, c);
  return c;
}

SceneDocument::SceneDocument(Room room, TessellationSpec tess, SceneLimits limits)
    : room_(std::move(room)), tess_(tess), limits_(limits) {
  tess_.validate();
}

const DesignObject& SceneDocument::object(ObjectId id) const {
  auto it = state_.objects.find(id);
  if (it == state_.objects.end()) {
    throw Error(ErrorCode::not_found, "no object with id " + std::to_string(id));
  }
  return it->second;
}

void SceneDocument::require_idle() const {
  if (dragging_) throw Error(ErrorCode::state, "a drag session is active");
}

std::vector<ObjectId> SceneDocument::require_ids(std::span<const ObjectId> ids) const {
  if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
  std::vector<ObjectId> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (ObjectId id : out) object(id);
  return out;
}

void SceneDocument::check_capacity(const SceneState& candidate) const {
  const SceneCounters c = count_state(candidate, tess_);
  if (c.blocks > limits_.max_blocks) {
    throw Error(ErrorCode::capacity, "scene would hold " + std::to_string(c.blocks) +
                                         " building blocks; the limit is " +
                                         std::to_string(limits_.max_blocks));
  }
  if (c.vertices > limits_.max_vertices) {
    throw Error(ErrorCode::capacity, "scene would hold " + std::to_string(c.vertices) +
                                         " vertices; the limit is " +
                                         std::to_string(limits_.max_vertices));
  }
}

void SceneDocument::commit_state(const std::string& label, SceneState next) {
  history_.erase(history_.begin() + static_cast<std::ptrdiff_t>(cursor_), history_.end());
  history_.push_back({label, state_, next});
  while (history_.size() > depth_) history_.pop_front();
  cursor_ = history_.size();
  restore(next);
}

void SceneDocument::restore(const SceneState& s) {
  state_ = s;
  counters_ = count_state(state_, tess_);
  prune_selection();
}

void SceneDocument::prune_selection() {
  for (auto it = selection_.begin(); it != selection_.end();) {
    it = state_.objects.count(*it) ? std::next(it) : selection_.erase(it);
  }
}

SceneCounters SceneDocument::recount() const { return count_state(state_, tess_); }

void SceneDocument::undo() {
  require_idle();
  if (!can_undo()) throw Error(ErrorCode::boundary, "nothing to undo");
  --cursor_;
  restore(history_[cursor_].before);
}

void SceneDocument::redo() {
  require_idle();
  if (!can_redo()) throw Error(ErrorCode::boundary, "nothing to redo");
  restore(history_[cursor_].after);
  ++cursor_;
}

void SceneDocument::set_history_depth(std::size_t depth) {
  if (depth == 0) throw Error(ErrorCode::parameter, "history depth must be at least 1");
  depth_ = depth;
  while (history_.size() > depth_) {
    history_.pop_front();
    if (cursor_ > 0) --cursor_;
  }
}

const std::string& SceneDocument::last_command() const {
  static const std::string none;
  return cursor_ > 0 ? history_[cursor_ - 1].label : none;
}

const WorkspaceGrid& SceneDocument::select_workspace(const WorkspaceCandidate& candidate,
                                                     double spacing, double offset) {
  WorkspaceGrid g = make_grid(candidate, spacing, offset);
  if (state_.grid) {
    g.occlusion = state_.grid->occlusion;
    g.color = state_.grid->color;
  }
  transact("select workspace " + g.label, [&](SceneState& s) { s.grid = g; });
  return *state_.grid;
}

void SceneDocument::set_grid_hints(bool occlusion, const std::string& color) {
  if (!state_.grid) throw Error(ErrorCode::state, "no workspace grid selected");
  transact("grid hints", [&](SceneState& s) {
    s.grid->occlusion = occlusion;
    s.grid->color = color;
  });
}

void SceneDocument::configure_grid(double spacing, double offset) {
  if (!state_.grid) throw Error(ErrorCode::state, "no workspace grid selected");
  if (!(spacing > 0.0) || !std::isfinite(spacing) || !std::isfinite(offset)) {
    throw Error(ErrorCode::parameter, "grid spacing must be positive");
  }
  transact("configure grid", [&](SceneState& s) {
    s.grid->spacing = spacing;
    s.grid->offset = offset;
  });
}

void SceneDocument::place(DesignObject& obj, const Transform& transform) {
  obj.transform = transform;
  obj.world = transform.is_identity()
                  ? obj.local
                  : std::make_shared<const Mesh>(transform_mesh(*obj.local, transform));
}

DesignObject SceneDocument::make_object(CsgTree tree, const Transform& transform) const {
  check_tree(tree);
  DesignObject obj;
  obj.id = next_id_;
  obj.local = std::make_shared<const Mesh>(evaluate_tree(tree, tess_, csg_));
  obj.tree = std::move(tree);
  place(obj, transform);
  return obj;
}

ObjectId SceneDocument::create_object(PrimitiveKind kind) {
  require_idle();
  if (!state_.grid) throw Error(ErrorCode::state, "select a workspace before creating objects");
  const WorkspaceGrid& g = *state_.grid;
  const double half = 0.5 * kDefaultObjectSize;
  Transform t;
  t.scale = Vec3::Constant(kDefaultObjectSize);
  t.translation = g.origin + half * g.u + half * g.v + (kSpawnHeight + half) * g.normal;

  DesignObject obj = make_object(CsgNode::leaf(kind), t);
  SceneState next = state_;
  next.objects.emplace(obj.id, obj);
  check_capacity(next);
  const ObjectId id = allocate_id();
  commit_state("create " + std::string(to_string(kind)), std::move(next));
  return id;
}

void SceneDocument::set_solidity(std::span<const ObjectId> ids, Solidity solidity) {
  const auto list = require_ids(ids);
  transact(std::string("set ") + std::string(to_string(solidity)), [&](SceneState& s) {
    for (ObjectId id : list) s.objects.at(id).solidity = solidity;
  });
}

void SceneDocument::set_color(std::span<const ObjectId> ids, Color color) {
  const auto list = require_ids(ids);
  transact("color", [&](SceneState& s) {
    for (ObjectId id : list) s.objects.at(id).color = color;
  });
}

std::vector<ObjectId> SceneDocument::duplicate(std::span<const ObjectId> ids) {
  require_idle();
  const auto list = require_ids(ids);
  const Vec3 shift = kDuplicateOffset * (state_.grid ? state_.grid->u : Vec3::UnitX());
  SceneState next = state_;
  std::vector<ObjectId> created;
  ObjectId id = next_id_;
  for (ObjectId src : list) {
    DesignObject copy = state_.objects.at(src);
    copy.id = id++;
    Transform t = copy.transform;
    t.translation += shift;
    place(copy, t);
    if (copy.on_plate && next.printer) next.printer->placed.push_back(copy.id);
    created.push_back(copy.id);
    next.objects.emplace(copy.id, std::move(copy));
  }
  check_capacity(next);
  next_id_ = id;
  commit_state("duplicate", std::move(next));
  return created;
}

void SceneDocument::remove(std::span<const ObjectId> ids) {
  const auto list = require_ids(ids);
  transact("delete", [&](SceneState& s) {
    for (ObjectId id : list) s.objects.erase(id);
    if (s.printer) {
      auto& placed = s.printer->placed;
      std::erase_if(placed, [&](ObjectId p) { return !s.objects.count(p); });
    }
  });
}

ObjectId SceneDocument::combine(std::span<const ObjectId> ids) {
  require_idle();
  const auto list = require_ids(ids);
  std::vector<CombineItem> items;
  items.reserve(list.size());
  const bool on_plate = state_.objects.at(list.front()).on_plate;
  for (ObjectId id : list) {
    const auto& obj = state_.objects.at(id);
    if (obj.on_plate != on_plate) {
      throw Error(ErrorCode::semantic,
                  "cannot combine objects inside the printer with objects outside it");
    }
    items.push_back({obj.world.get(), obj.world_tree(), obj.solidity, obj.color, obj.id});
  }
  CombineResult result = craft::combine(items, csg_);

  DesignObject merged;
  merged.id = next_id_;
  merged.tree = std::move(result.tree);
  merged.tree.solidity = Solidity::solid;
  merged.solidity = Solidity::solid;
  merged.color = result.color;
  merged.on_plate = on_plate;
  merged.local = std::make_shared<const Mesh>(std::move(result.mesh));
  merged.world = merged.local;

  SceneState next = state_;
  for (ObjectId id : list) next.objects.erase(id);
  if (next.printer) {
    auto& placed = next.printer->placed;
    std::erase_if(placed, [&](ObjectId p) { return !next.objects.count(p); });
    if (on_plate) placed.push_back(merged.id);
  }
  next.objects.emplace(merged.id, std::move(merged));
  const ObjectId id = allocate_id();
  commit_state("combine", std::move(next));
  selection_ = {id};
  return id;
}

void SceneDocument::set_selection_mode(SelectionMode mode) { mode_ = mode; }

void SceneDocument::select(ObjectId id) {
  object(id);
  if (mode_ == SelectionMode::single) {
    selection_ = {id};
  } else if (!selection_.erase(id)) {
    selection_.insert(id);
  }
}

void SceneDocument::select_all() {
  selection_.clear();
  for (const auto& [id, obj] : state_.objects) {
    if (!obj.on_plate) selection_.insert(id);
  }
}

void SceneDocument::deselect_all() { selection_.clear(); }

void SceneDocument::set_printer(PrinterTwin twin) {
  check_printer_dims(twin.width_mm, twin.depth_mm, twin.height_mm);
  transact("printer " + twin.name, [&](SceneState& s) {
    if (s.printer) {
      twin.placed = s.printer->placed;
      if (twin.server_address.empty()) twin.server_address = s.printer->server_address;
      if (twin.printer_address.empty()) twin.printer_address = s.printer->printer_address;
    }
    s.printer = std::move(twin);
  });
}

void SceneDocument::set_printer_addresses(const std::string& server, const std::string& printer) {
  if (!state_.printer) throw Error(ErrorCode::state, "no printer twin in the scene");
  transact("printer addresses", [&](SceneState& s) {
    s.printer->server_address = server;
    s.printer->printer_address = printer;
  });
}

void SceneDocument::begin_drag() {
  require_idle();
  dragging_ = state_;
}

void SceneDocument::preview_transforms(const std::map<ObjectId, Transform>& transforms) {
  if (!dragging_) throw Error(ErrorCode::state, "no drag session is active");
  for (const auto& [id, t] : transforms) {
    auto it = state_.objects.find(id);
    if (it == state_.objects.end()) {
      throw Error(ErrorCode::not_found, "no object with id " + std::to_string(id));
    }
    place(it->second, t);
  }
}

void SceneDocument::commit_drag(const std::string& label) {
  if (!dragging_) throw Error(ErrorCode::state, "no drag session is active");
  SceneState before = std::move(*dragging_);
  dragging_.reset();
  SceneState after = state_;
  state_ = std::move(before);
  commit_state(label, std::move(after));
}

void SceneDocument::cancel_drag() {
  if (!dragging_) throw Error(ErrorCode::state, "no drag session is active");
  restore(*dragging_);
  dragging_.reset();
}

// ---------------------------------------------------------------------------
// Persistence

json transform_to_json(const Transform& t) {
  return {{"translation", to_json(t.translation)},
          {"rotation", json::array({t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()})},
          {"scale", to_json(t.scale)}};
}

Transform transform_from_json(const json& j) {
  Transform t;
  t.translation = vec3(member(j, "translation", "transform"), "transform.translation");
  const json& r = member(j, "rotation", "transform");
  if (!r.is_array() || r.size() != 4) field_error("transform.rotation", "expected [w, x, y, z]");
  t.rotation = Quat(number(r[0], "transform.rotation[0]"), number(r[1], "transform.rotation[1]"),
                    number(r[2], "transform.rotation[2]"), number(r[3], "transform.rotation[3]"));
  if (std::abs(t.rotation.norm() - 1.0) > 1e-9) field_error("transform.rotation", "not a unit quaternion");
  t.scale = vec3(member(j, "scale", "transform"), "transform.scale");
  if ((t.scale.array() <= 0.0).any()) field_error("transform.scale", "must be positive");
  return t;
}

json tree_to_json(const CsgTree& t) {
  json j = {{"op", op_name(t.op)},
            {"solidity", to_string(t.solidity)},
            {"transform", transform_to_json(t.transform)}};
  if (t.op == CsgNode::Op::leaf) {
    j["primitive"] = to_string(t.primitive);
  } else {
    json children = json::array();
    for (const auto& c : t.children) children.push_back(tree_to_json(c));
    j["children"] = std::move(children);
  }
  return j;
}

CsgTree tree_from_json(const json& j) {
  CsgTree t;
  const std::string op = text(member(j, "op", "tree"), "tree.op");
  t.solidity = parse_solidity(member(j, "solidity", "tree"), "tree.solidity");
  t.transform = transform_from_json(member(j, "transform", "tree"));
  if (op == "leaf") {
    const auto kind = parse_primitive_kind(text(member(j, "primitive", "tree"), "tree.primitive"));
    if (!kind) field_error("tree.primitive", "unknown primitive");
    t.primitive = *kind;
    return t;
  }
  if (op == "union") {
    t.op = CsgNode::Op::union_all;
  } else if (op == "difference") {
    t.op = CsgNode::Op::difference;
  } else {
    field_error("tree.op", "expected leaf, union or difference");
  }
  const json& children = member(j, "children", "tree");
  if (!children.is_array()) field_error("tree.children", "expected an array");
  for (const auto& c : children) t.children.push_back(tree_from_json(c));
  try {
    check_tree(t);
  } catch (const Error& e) {
    field_error("tree", e.what());
  }
  return t;
}

std::string SceneDocument::save() const {
  json objects = json::array();
  for (const auto& [id, obj] : state_.objects) {
    objects.push_back({{"id", id},
                       {"solidity", to_string(obj.solidity)},
                       {"color", json::array({obj.color.r, obj.color.g, obj.color.b})},
                       {"on_plate", obj.on_plate},
                       {"transform", transform_to_json(obj.transform)},
                       {"tree", tree_to_json(obj.tree)}});
  }
  const json doc = {
      {"format", kFormat},
      {"version", kVersion},
      {"units", "m"},
      {"tessellation", {{"radial_segments", tess_.radial_segments}, {"rings", tess_.rings}}},
      {"limits", {{"max_blocks", limits_.max_blocks}, {"max_vertices", limits_.max_vertices}}},
      {"room", room_to_json(room_)},
      {"grid", state_.grid ? grid_to_json(*state_.grid) : json(nullptr)},
      {"printer", state_.printer ? printer_to_json(*state_.printer) : json(nullptr)},
      {"objects", std::move(objects)}};
  return doc.dump(2) + "\n";
}

SceneDocument SceneDocument::load(std::string_view text_in) {
  const json doc = parse_json(text_in, "scene");
  if (!doc.is_object()) field_error("scene", "expected an object");
  if (text(member(doc, "format", "scene"), "scene.format") != kFormat) {
    field_error("scene.format", "not a scene document");
  }
  const json& version = member(doc, "version", "scene");
  if (!version.is_number_integer() || version.get<int>() != kVersion) {
    field_error("scene.version", "unsupported version (expected " + std::to_string(kVersion) + ")");
  }

  TessellationSpec tess;
  const json& tj = member(doc, "tessellation", "scene");
  tess.radial_segments = static_cast<int>(number(member(tj, "radial_segments", "scene.tessellation"),
                                                 "scene.tessellation.radial_segments"));
  tess.rings = static_cast<int>(number(member(tj, "rings", "scene.tessellation"),
                                       "scene.tessellation.rings"));
  try {
    tess.validate();
  } catch (const Error& e) {
    field_error("scene.tessellation", e.what());
  }
  SceneLimits limits;
  const json& lj = member(doc, "limits", "scene");
  limits.max_blocks = static_cast<std::size_t>(number(member(lj, "max_blocks", "scene.limits"), "scene.limits.max_blocks"));
  limits.max_vertices = static_cast<std::size_t>(number(member(lj, "max_vertices", "scene.limits"), "scene.limits.max_vertices"));

  SceneDocument scene(room_from_json(member(doc, "room", "scene")), tess, limits);
  const json& grid = member(doc, "grid", "scene");
  if (!grid.is_null()) scene.state_.grid = grid_from_json(grid);
  const json& printer = member(doc, "printer", "scene");
  if (!printer.is_null()) scene.state_.printer = printer_from_json(printer);

  const json& objects = member(doc, "objects", "scene");
  if (!objects.is_array()) field_error("scene.objects", "expected an array");
  ObjectId max_id = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = "scene.objects[" + std::to_string(i) + "]";
    const json& oj = objects[i];
    const json& idj = member(oj, "id", path);
    if (!idj.is_number_unsigned() || idj.get<ObjectId>() == 0) field_error(path + ".id", "expected a positive integer");
    const ObjectId id = idj.get<ObjectId>();
    if (scene.state_.objects.count(id)) field_error(path + ".id", "duplicate id");
    scene.next_id_ = id;
    DesignObject obj = scene.make_object(tree_from_json(member(oj, "tree", path)),
                                         transform_from_json(member(oj, "transform", path)));
    obj.solidity = parse_solidity(member(oj, "solidity", path), path + ".solidity");
    const json& cj = member(oj, "color", path);
    if (!cj.is_array() || cj.size() != 3) field_error(path + ".color", "expected [r, g, b]");
    for (int k = 0; k < 3; ++k) {
      if (!cj[k].is_number_unsigned() || cj[k].get<unsigned>() > 255) {
        field_error(path + ".color", "components must be 0..255");
      }
    }
    obj.color = {cj[0].get<std::uint8_t>(), cj[1].get<std::uint8_t>(), cj[2].get<std::uint8_t>()};
    const json& pj = member(oj, "on_plate", path);
    if (!pj.is_boolean()) field_error(path + ".on_plate", "expected a boolean");
    obj.on_plate = pj.get<bool>();
    scene.state_.objects.emplace(id, std::move(obj));
    max_id = std::max(max_id, id);
  }
  if (scene.state_.printer) {
    for (ObjectId id : scene.state_.printer->placed) {
      if (!scene.state_.objects.count(id)) field_error("scene.printer.placed", "unknown object id");
    }
  }
  scene.next_id_ = max_id + 1;
  scene.counters_ = scene.recount();
  return scene;
}

}  // namespace craft
