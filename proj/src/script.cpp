#include "craft/script.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "craft/fab/fabrication.hpp"
#include "craft/manipulation.hpp"

namespace craft {

namespace {

struct Arity {
  std::size_t min;
  std::size_t max;
};

const std::map<std::string, Arity, std::less<>>& command_table() {
  static const std::map<std::string, Arity, std::less<>> table = {
      {"workspace", {1, 2}}, {"pick", {6, 6}},       {"grid", {2, 2}},
      {"create", {1, 1}},    {"select-mode", {1, 1}}, {"select", {1, 1000}},
      {"select-all", {0, 0}}, {"deselect-all", {0, 0}}, {"move", {3, 4}},
      {"center", {3, 3}},    {"rotate", {2, 3}},     {"scale", {4, 6}},
      {"resize", {2, 2}},    {"solid", {0, 0}},      {"hole", {0, 0}},
      {"color", {1, 3}},     {"combine", {0, 0}},    {"duplicate", {0, 0}},
      {"delete", {0, 0}},    {"undo", {0, 0}},       {"redo", {0, 0}},
      {"printer", {2, 5}},   {"drop", {0, 0}},       {"ruler", {6, 6}},
  };
  return table;
}

double to_number(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::parameter, "expected a number, got '" + s + "'");
  }
  return v;
}

Vec3 to_vec3(const std::vector<std::string>& a, std::size_t at) {
  return {to_number(a[at]), to_number(a[at + 1]), to_number(a[at + 2])};
}

Color to_color(const std::vector<std::string>& a) {
  if (a.size() == 3) {
    Color c;
    std::uint8_t* ch[] = {&c.r, &c.g, &c.b};
    for (int i = 0; i < 3; ++i) {
      const double v = to_number(a[i]);
      if (v < 0 || v > 255 || v != std::floor(v)) {
        throw Error(ErrorCode::parameter, "color channels are integers 0..255");
      }
      *ch[i] = static_cast<std::uint8_t>(v);
    }
    return c;
  }
  const std::string& h = a[0];
  if (a.size() != 1 || h.size() != 7 || h[0] != '#') {
    throw Error(ErrorCode::parameter, "color must be #rrggbb or r g b");
  }
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(h.data() + 1, h.data() + 7, value, 16);
  if (ec != std::errc() || end != h.data() + 7) {
    throw Error(ErrorCode::parameter, "bad hex color '" + h + "'");
  }
  return {static_cast<std::uint8_t>(value >> 16), static_cast<std::uint8_t>(value >> 8),
          static_cast<std::uint8_t>(value)};
}

/// Trailing keyword flags such as "snap" and "uniform".
bool flag(const std::vector<std::string>& args, std::size_t from, std::string_view word) {
  bool found = false;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == word) {
      found = true;
    } else if (args[i] != "snap" && args[i] != "uniform") {
      throw Error(ErrorCode::parameter, "unexpected argument '" + args[i] + "'");
    }
  }
  return found;
}

int corner_index(const std::string& s) {
  if (s.size() != 3) throw Error(ErrorCode::parameter, "corner must look like +-+");
  int index = 0;
  for (int i = 0; i < 3; ++i) {
    if (s[i] == '+') {
      index |= 1 << i;
    } else if (s[i] != '-') {
      throw Error(ErrorCode::parameter, "corner must look like +-+");
    }
  }
  return index;
}

bool on_off(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw Error(ErrorCode::parameter, "expected on or off");
}

}  // namespace

ScriptError::ScriptError(int line, const Error& cause)
    : Error(cause.code(), fmt::format("line {}: {}", line, cause.what())), line_(line) {}

DesignScript DesignScript::parse(std::string_view text) {
  DesignScript script;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    // '#' opens a comment at the start of a line or before a space; "#rrggbb"
    // inside a line is a color.
    for (std::size_t i = raw.find('#'); i != std::string::npos; i = raw.find('#', i + 1)) {
      const bool first = raw.find_first_not_of(" \t") == i;
      if (first || i + 1 == raw.size() || std::isspace(static_cast<unsigned char>(raw[i + 1]))) {
        raw.erase(i);
        break;
      }
    }
    std::istringstream words(raw);
    ScriptCommand cmd;
    cmd.line = line;
    if (!(words >> cmd.name)) continue;
    for (std::string w; words >> std::quoted(w);) cmd.args.push_back(w);
    const auto it = command_table().find(cmd.name);
    if (it == command_table().end()) {
      throw ScriptError(line, Error(ErrorCode::parse, "unknown command '" + cmd.name + "'"));
    }
    if (cmd.args.size() < it->second.min || cmd.args.size() > it->second.max) {
      throw ScriptError(line, Error(ErrorCode::parse, "wrong number of arguments for '" +
                                                          cmd.name + "'"));
    }
    script.commands.push_back(std::move(cmd));
  }
  return script;
}

ScriptRunner::ScriptRunner(SceneDocument& scene, ScriptOptions options)
    : scene_(&scene), options_(std::move(options)) {}

void ScriptRunner::run(const DesignScript& script) {
  for (const auto& cmd : script.commands) execute(cmd);
}

ObjectId ScriptRunner::parse_id(const std::string& token) const {
  if (token == "last") {
    if (last_ == 0) throw Error(ErrorCode::state, "no object created yet");
    return last_;
  }
  ObjectId id = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
  if (ec != std::errc() || end != token.data() + token.size()) {
    throw Error(ErrorCode::parameter, "bad object id '" + token + "'");
  }
  scene_->object(id);
  return id;
}

void ScriptRunner::select_only(std::span<const ObjectId> ids) {
  const SelectionMode mode = scene_->selection_mode();
  scene_->deselect_all();
  scene_->set_selection_mode(SelectionMode::multiple);
  for (ObjectId id : ids) scene_->select(id);
  scene_->set_selection_mode(mode);
}

void ScriptRunner::execute(const ScriptCommand& cmd) {
  try {
    SceneDocument& s = *scene_;
    const auto& a = cmd.args;
    const std::string& n = cmd.name;
    if (n == "workspace") {
      std::optional<BoxFace> face;
      if (a.size() == 2) {
        face = parse_face_name(a[1]);
        if (!face) throw Error(ErrorCode::parameter, "unknown face '" + a[1] + "'");
      }
      const WorkspaceCandidate c = workspace_by_label(s.room(), a[0], face);
      s.select_workspace(c, s.grid() ? s.grid()->spacing : kDefaultGridSpacing);
    } else if (n == "pick") {
      const auto hit = pick_workspace(s.room(), to_vec3(a, 0), to_vec3(a, 3));
      if (!hit) throw Error(ErrorCode::not_found, "the ray hits no workspace");
      s.select_workspace(*hit, s.grid() ? s.grid()->spacing : kDefaultGridSpacing);
    } else if (n == "grid") {
      if (!s.grid()) throw Error(ErrorCode::state, "no workspace grid selected");
      const WorkspaceGrid& g = *s.grid();
      if (a[0] == "spacing") {
        s.configure_grid(to_number(a[1]), g.offset);
      } else if (a[0] == "offset") {
        s.configure_grid(g.spacing, to_number(a[1]));
      } else if (a[0] == "occlusion") {
        s.set_grid_hints(on_off(a[1]), g.color);
      } else if (a[0] == "color") {
        to_color({a[1]});
        s.set_grid_hints(g.occlusion, a[1]);
      } else {
        throw Error(ErrorCode::parameter, "grid takes spacing, offset, occlusion or color");
      }
    } else if (n == "create") {
      const auto kind = parse_primitive_kind(a[0]);
      if (!kind) throw Error(ErrorCode::parameter, "unknown primitive '" + a[0] + "'");
      last_ = s.create_object(*kind);
      select_only(std::span(&last_, 1));
    } else if (n == "select-mode") {
      if (a[0] == "single") {
        s.set_selection_mode(SelectionMode::single);
      } else if (a[0] == "multiple") {
        s.set_selection_mode(SelectionMode::multiple);
      } else {
        throw Error(ErrorCode::parameter, "selection mode is single or multiple");
      }
    } else if (n == "select") {
      if (a.size() > 1 && s.selection_mode() == SelectionMode::single) {
        throw Error(ErrorCode::parameter, "selecting several objects needs select-mode multiple");
      }
      std::vector<ObjectId> ids;
      for (const auto& t : a) ids.push_back(parse_id(t));
      for (ObjectId id : ids) s.select(id);
    } else if (n == "select-all") {
      s.select_all();
    } else if (n == "deselect-all") {
      s.deselect_all();
    } else if (n == "move") {
      const bool snap = flag(a, 3, "snap");
      auto drag = DragSession::move(s);
      drag.update_move(drag.grab_start() + to_vec3(a, 0), snap ? SnapMode::snapped : SnapMode::free);
      drag.commit();
    } else if (n == "center") {
      auto drag = DragSession::move(s);
      const Vec3 delta = to_vec3(a, 0) - drag.start_box().box.center();
      drag.update_move(drag.grab_start() + delta, SnapMode::free);
      drag.commit();
    } else if (n == "rotate") {
      const int axis = parse_axis(a[0]);
      const bool snap = flag(a, 2, "snap");
      auto drag = DragSession::rotate(s, axis);
      drag.update_rotation(to_number(a[1]) * std::numbers::pi / 180.0,
                           snap ? SnapMode::snapped : SnapMode::free);
      drag.commit();
    } else if (n == "scale") {
      const bool uniform = flag(a, 4, "uniform");
      const bool snap = flag(a, 4, "snap");
      auto drag = DragSession::scale(s, corner_index(a[0]));
      drag.update_scale(drag.grab_start() + to_vec3(a, 1), uniform,
                        snap ? SnapMode::snapped : SnapMode::free);
      drag.commit();
    } else if (n == "resize") {
      parametric_resize(s, parse_axis(a[0]), to_number(a[1]));
    } else if (n == "solid" || n == "hole") {
      const auto ids = s.selected_ids();
      if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
      s.set_solidity(ids, n == "solid" ? Solidity::solid : Solidity::hole);
    } else if (n == "color") {
      const auto ids = s.selected_ids();
      if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
      s.set_color(ids, to_color(a));
    } else if (n == "combine") {
      last_ = s.combine(s.selected_ids());
    } else if (n == "duplicate") {
      const auto copies = s.duplicate(s.selected_ids());
      if (!copies.empty()) last_ = copies.back();
      select_only(copies);
    } else if (n == "delete") {
      const auto ids = s.selected_ids();
      if (ids.empty()) throw Error(ErrorCode::state, "no objects selected");
      s.remove(ids);
    } else if (n == "undo") {
      s.undo();
    } else if (n == "redo") {
      s.redo();
    } else if (n == "printer") {
      const std::string& what = a[0];
      if (what == "preset" && a.size() == 2) {
        s.set_printer(make_printer_twin(s, find_preset(options_.presets, a[1])));
      } else if (what == "dims" && a.size() == 5) {
        s.set_printer(make_printer_twin(s, a[1], to_number(a[2]), to_number(a[3]), to_number(a[4])));
      } else if ((what == "server" || what == "address") && a.size() == 2) {
        if (!s.printer()) throw Error(ErrorCode::state, "no printer twin in the scene");
        const PrinterTwin& p = *s.printer();
        s.set_printer_addresses(what == "server" ? a[1] : p.server_address,
                                what == "address" ? a[1] : p.printer_address);
      } else {
        throw Error(ErrorCode::parameter,
                    "printer takes preset <name>, dims <name> <w> <d> <h>, server or address");
      }
    } else if (n == "drop") {
      const auto copies = drop_into_printer(s, s.selected_ids());
      log_.push_back(fmt::format("dropped {} object(s) into {}", copies.size(), s.printer()->name));
    } else if (n == "ruler") {
      const Ruler r{to_vec3(a, 0), to_vec3(a, 3)};
      log_.push_back("ruler " + r.label());
    }
  } catch (const ScriptError&) {
    throw;
  } catch (const Error& e) {
    throw ScriptError(cmd.line, e);
  }
}

}  // namespace craft
