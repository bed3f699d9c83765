#include "craft/fab/printer.hpp"

#include <cmath>

#include "craft/error.hpp"
#include "../json_util.hpp"

namespace craft {

using namespace detail;

std::vector<PrinterPreset> load_printer_presets(std::string_view text_in) {
  const json doc = parse_json(text_in, "printer presets");
  if (!doc.is_array()) field_error("presets", "expected an array");
  std::vector<PrinterPreset> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "presets[" + std::to_string(i) + "]";
    PrinterPreset p;
    p.name = text(member(doc[i], "name", path), path + ".name");
    p.width_mm = number(member(doc[i], "width_mm", path), path + ".width_mm");
    p.depth_mm = number(member(doc[i], "depth_mm", path), path + ".depth_mm");
    p.height_mm = number(member(doc[i], "height_mm", path), path + ".height_mm");
    try {
      check_printer_dims(p.width_mm, p.depth_mm, p.height_mm);
    } catch (const Error& e) {
      field_error(path, e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PrinterPreset> default_printer_presets() {
  return {{"generic-220", 220.0, 220.0, 250.0}, {"ender3-v3-ke", 220.0, 220.0, 240.0}};
}

const PrinterPreset& find_preset(const std::vector<PrinterPreset>& presets, std::string_view name) {
  for (const auto& p : presets) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::not_found, "unknown printer preset \"" + std::string(name) + "\"");
}

void check_printer_dims(double w, double d, double h) {
  for (double v : {w, d, h}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::parameter, "printer build volume must be positive on every axis");
    }
  }
}

Vec3 PrinterTwin::to_printer(const Vec3& world) const {
  const Vec3 d = world - origin;
  return 1000.0 * Vec3(d.dot(x_axis), d.dot(y_axis), d.dot(z_axis));
}

Vec3 PrinterTwin::to_world(const Vec3& p) const {
  return origin + 0.001 * (p.x() * x_axis + p.y() * y_axis + p.z() * z_axis);
}

Box3 PrinterTwin::printer_bounds(const Mesh& mesh) const {
  Box3 b;
  for (const auto& v : mesh.vertices) b.expand(to_printer(v));
  return b;
}

json printer_to_json(const PrinterTwin& t) {
  return {{"name", t.name},
          {"width_mm", t.width_mm},
          {"depth_mm", t.depth_mm},
          {"height_mm", t.height_mm},
          {"plate_spacing_mm", t.plate_spacing_mm},
          {"server_address", t.server_address},
          {"printer_address", t.printer_address},
          {"origin", to_json(t.origin)},
          {"x_axis", to_json(t.x_axis)},
          {"y_axis", to_json(t.y_axis)},
          {"z_axis", to_json(t.z_axis)},
          {"placed", t.placed}};
}

PrinterTwin printer_from_json(const json& j) {
  PrinterTwin t;
  t.name = text(member(j, "name", "printer"), "printer.name");
  t.width_mm = number(member(j, "width_mm", "printer"), "printer.width_mm");
  t.depth_mm = number(member(j, "depth_mm", "printer"), "printer.depth_mm");
  t.height_mm = number(member(j, "height_mm", "printer"), "printer.height_mm");
  try {
    check_printer_dims(t.width_mm, t.depth_mm, t.height_mm);
  } catch (const Error& e) {
    field_error("printer", e.what());
  }
  t.plate_spacing_mm = number(member(j, "plate_spacing_mm", "printer"), "printer.plate_spacing_mm");
  t.server_address = text(member(j, "server_address", "printer"), "printer.server_address");
  t.printer_address = text(member(j, "printer_address", "printer"), "printer.printer_address");
  t.origin = vec3(member(j, "origin", "printer"), "printer.origin");
  t.x_axis = vec3(member(j, "x_axis", "printer"), "printer.x_axis");
  t.y_axis = vec3(member(j, "y_axis", "printer"), "printer.y_axis");
  t.z_axis = vec3(member(j, "z_axis", "printer"), "printer.z_axis");
  const json& placed = member(j, "placed", "printer");
  if (!placed.is_array()) field_error("printer.placed", "expected an array of ids");
  for (const auto& id : placed) {
    if (!id.is_number_unsigned()) field_error("printer.placed", "expected an array of ids");
    t.placed.push_back(id.get<ObjectId>());
  }
  return t;
}

}  // namespace craft
