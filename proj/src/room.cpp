#include "craft/room.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "craft/error.hpp"
#include "json_util.hpp"

namespace craft {

using namespace detail;

namespace {

constexpr const char* kAxisNames[] = {"x", "y", "z"};
constexpr double kRoomTol = 1e-9;

/// Rectangle of a boundary plane clipped to the room interior.
void boundary_rect(const Room& room, const Boundary& b, Vec3& lo, Vec3& hi) {
  lo = room.interior.min;
  hi = room.interior.max;
  lo[b.axis] = hi[b.axis] = b.at;
}

}  // namespace

std::string_view face_name(const BoxFace& f) {
  static constexpr const char* names[3][2] = {
      {"-x", "+x"}, {"bottom", "top"}, {"-z", "+z"}};
  return names[f.axis][f.sign > 0 ? 1 : 0];
}

std::optional<BoxFace> parse_face_name(std::string_view name) {
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      const BoxFace f{axis, sign};
      if (face_name(f) == name) return f;
    }
  }
  if (name == "-y") return BoxFace{1, -1};
  if (name == "+y") return BoxFace{1, 1};
  return std::nullopt;
}

const Furniture* Room::find_furniture(std::string_view label) const {
  for (const auto& f : furniture) {
    if (f.label == label) return &f;
  }
  return nullptr;
}

const Boundary* Room::find_boundary(std::string_view label) const {
  for (const auto& b : boundaries) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

Room room_from_json(const json& doc) {
  if (!doc.is_object()) field_error("room", "expected an object");
  const json& version = member(doc, "version", "room");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    field_error("room.version", "unsupported version (expected 1)");
  }
  if (auto it = doc.find("units"); it != doc.end() && text(*it, "room.units") != "m") {
    field_error("room.units", "only \"m\" is supported");
  }

  Room room;
  const json& bounds = member(doc, "boundaries", "room");
  const double floor_y = number(member(member(bounds, "floor", "room.boundaries"), "y",
                                       "room.boundaries.floor"),
                                "room.boundaries.floor.y");
  const double ceiling_y = number(member(member(bounds, "ceiling", "room.boundaries"), "y",
                                         "room.boundaries.ceiling"),
                                  "room.boundaries.ceiling.y");
  if (!(ceiling_y > floor_y)) field_error("room.boundaries.ceiling.y", "must be above the floor");

  struct Wall {
    std::string label;
    int axis;
    double at;
  };
  std::vector<Wall> walls;
  const json& wall_list = member(bounds, "walls", "room.boundaries");
  if (!wall_list.is_array()) field_error("room.boundaries.walls", "expected an array");
  for (std::size_t i = 0; i < wall_list.size(); ++i) {
    const std::string path = "room.boundaries.walls[" + std::to_string(i) + "]";
    const json& w = wall_list[i];
    const std::string label = text(member(w, "label", path), path + ".label");
    const bool has_x = w.contains("x");
    const bool has_z = w.contains("z");
    if (has_x == has_z) field_error(path, "needs exactly one of \"x\" or \"z\"");
    const int axis = has_x ? 0 : 2;
    walls.push_back({label, axis, number(w[kAxisNames[axis]], path + "." + kAxisNames[axis])});
  }

  room.interior.min.y() = floor_y;
  room.interior.max.y() = ceiling_y;
  for (int axis : {0, 2}) {
    std::vector<const Wall*> on_axis;
    for (const auto& w : walls) {
      if (w.axis == axis) on_axis.push_back(&w);
    }
    if (on_axis.size() != 2 || on_axis[0]->at == on_axis[1]->at) {
      field_error("room.boundaries.walls",
                  std::string("needs two distinct walls across ") + kAxisNames[axis]);
    }
    room.interior.min[axis] = std::min(on_axis[0]->at, on_axis[1]->at);
    room.interior.max[axis] = std::max(on_axis[0]->at, on_axis[1]->at);
  }

  room.boundaries.push_back({"floor", 1, floor_y, 1});
  room.boundaries.push_back({"ceiling", 1, ceiling_y, -1});
  for (const auto& w : walls) {
    const int inward = w.at == room.interior.min[w.axis] ? 1 : -1;
    room.boundaries.push_back({w.label, w.axis, w.at, inward});
  }

  if (auto it = doc.find("furniture"); it != doc.end()) {
    if (!it->is_array()) field_error("room.furniture", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "room.furniture[" + std::to_string(i) + "]";
      const json& f = (*it)[i];
      Furniture item;
      item.label = text(member(f, "label", path), path + ".label");
      item.box.min = vec3(member(f, "min", path), path + ".min");
      item.box.max = vec3(member(f, "max", path), path + ".max");
      if ((item.box.min.array() >= item.box.max.array()).any()) {
        field_error(path, "min must be below max on every axis");
      }
      room.furniture.push_back(std::move(item));
    }
  }

  std::set<std::string> labels;
  for (const auto& b : room.boundaries) {
    if (!labels.insert(b.label).second) {
      throw Error(ErrorCode::semantic, "duplicate room label \"" + b.label + "\"");
    }
  }
  for (const auto& f : room.furniture) {
    if (!labels.insert(f.label).second) {
      throw Error(ErrorCode::semantic, "duplicate room label \"" + f.label + "\"");
    }
    if (!room.interior.inflated(kRoomTol).contains(f.box)) {
      throw Error(ErrorCode::semantic,
                  "furniture \"" + f.label + "\" extends outside the room boundaries");
    }
  }
  return room;
}

Room load_room(std::string_view text_in) { return room_from_json(parse_json(text_in, "room")); }

json room_to_json(const Room& room) {
  json walls = json::array();
  for (const auto& b : room.boundaries) {
    if (b.axis == 1) continue;
    walls.push_back({{"label", b.label}, {kAxisNames[b.axis], b.at}});
  }
  json furniture = json::array();
  for (const auto& f : room.furniture) {
    furniture.push_back({{"label", f.label}, {"min", to_json(f.box.min)}, {"max", to_json(f.box.max)}});
  }
  return {{"version", 1},
          {"units", "m"},
          {"boundaries",
           {{"floor", {{"y", room.interior.min.y()}}},
            {"ceiling", {{"y", room.interior.max.y()}}},
            {"walls", walls}}},
          {"furniture", furniture}};
}

Room default_room() {
  static const char* text = R"({
    "version": 1, "units": "m",
    "boundaries": {
      "floor": {"y": 0.0}, "ceiling": {"y": 2.6},
      "walls": [{"label": "west wall", "x": 0.0}, {"label": "east wall", "x": 4.0},
                {"label": "north wall", "z": 0.0}, {"label": "south wall", "z": 3.0}]
    },
    "furniture": [{"label": "table", "min": [1.4, 0.0, 1.2], "max": [2.6, 0.75, 1.8]}]
  })";
  return load_room(text);
}

std::optional<WorkspaceCandidate> pick_workspace(const Room& room, const Vec3& origin,
                                                 const Vec3& direction) {
  std::optional<WorkspaceCandidate> best;
  auto offer = [&](WorkspaceCandidate c) {
    if (!best || c.distance < best->distance) best = std::move(c);
  };

  for (const auto& f : room.furniture) {
    // Slab test; the entry face is the one hit.
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int enter_axis = -1;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (direction[a] == 0.0) {
        if (origin[a] < f.box.min[a] || origin[a] > f.box.max[a]) miss = true;
        continue;
      }
      double t0 = (f.box.min[a] - origin[a]) / direction[a];
      double t1 = (f.box.max[a] - origin[a]) / direction[a];
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_enter) {
        t_enter = t0;
        enter_axis = a;
      }
      t_exit = std::min(t_exit, t1);
    }
    if (miss || enter_axis < 0 || t_enter > t_exit || t_enter <= 0.0) continue;
    WorkspaceCandidate c;
    c.label = f.label;
    c.face = {enter_axis, direction[enter_axis] > 0.0 ? -1 : 1};
    c.rect_min = f.box.min;
    c.rect_max = f.box.max;
    const double at = c.face.sign > 0 ? f.box.max[enter_axis] : f.box.min[enter_axis];
    c.rect_min[enter_axis] = c.rect_max[enter_axis] = at;
    c.point = origin + t_enter * direction;
    c.point[enter_axis] = at;
    c.distance = t_enter;
    offer(std::move(c));
  }

  for (const auto& b : room.boundaries) {
    const double d = direction[b.axis];
    if (d == 0.0 || d * b.inward > 0.0) continue;  // parallel, or hitting the back side
    const double t = (b.at - origin[b.axis]) / d;
    if (t <= 0.0) continue;
    Vec3 p = origin + t * direction;
    p[b.axis] = b.at;
    Vec3 lo, hi;
    boundary_rect(room, b, lo, hi);
    if (((p.array() < lo.array() - kRoomTol) || (p.array() > hi.array() + kRoomTol)).any()) {
      continue;
    }
    offer({b.label, {b.axis, b.inward}, lo, hi, p, t});
  }
  return best;
}

WorkspaceCandidate workspace_by_label(const Room& room, std::string_view label,
                                      std::optional<BoxFace> face) {
  if (const auto* f = room.find_furniture(label)) {
    WorkspaceCandidate c;
    c.label = f->label;
    c.face = face.value_or(BoxFace{1, 1});
    c.rect_min = f->box.min;
    c.rect_max = f->box.max;
    const double at = c.face.sign > 0 ? f->box.max[c.face.axis] : f->box.min[c.face.axis];
    c.rect_min[c.face.axis] = c.rect_max[c.face.axis] = at;
    c.point = 0.5 * (c.rect_min + c.rect_max);
    return c;
  }
  if (const auto* b = room.find_boundary(label)) {
    if (face && !(face->axis == b->axis && face->sign == b->inward)) {
      throw Error(ErrorCode::not_found,
                  "boundary \"" + b->label + "\" only exposes its room-facing side");
    }
    WorkspaceCandidate c;
    c.label = b->label;
    c.face = {b->axis, b->inward};
    boundary_rect(room, *b, c.rect_min, c.rect_max);
    c.point = 0.5 * (c.rect_min + c.rect_max);
    return c;
  }
  throw Error(ErrorCode::not_found, "no furniture or boundary labelled \"" + std::string(label) + "\"");
}

}  // namespace craft
