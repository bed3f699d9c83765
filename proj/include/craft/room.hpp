#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "craft/geometry.hpp"

namespace craft {

/// One side of an axis-aligned box. `sign` is +1 for the face at max[axis].
struct BoxFace {
  int axis = 1;
  int sign = 1;
  friend bool operator==(const BoxFace&, const BoxFace&) = default;
};

std::string_view face_name(const BoxFace& face);  // "top", "bottom", "+x", ...
std::optional<BoxFace> parse_face_name(std::string_view name);

struct Furniture {
  std::string label;
  Box3 box;
};

/// Floor, ceiling or wall of the room. `inward` points into the room.
struct Boundary {
  std::string label;
  int axis = 1;
  double at = 0.0;
  int inward = 1;
};

/// Scanned room reduced to boundary planes and furniture boxes (meters, Y up).
struct Room {
  Box3 interior;
  std::vector<Boundary> boundaries;
  std::vector<Furniture> furniture;

  const Furniture* find_furniture(std::string_view label) const;
  const Boundary* find_boundary(std::string_view label) const;
};

/// Parses a room file. Throws ErrorCode::parse (with line or field path) or
/// ErrorCode::semantic for duplicate labels and furniture outside the walls.
Room load_room(std::string_view text);
Room room_from_json(const nlohmann::json& doc);
nlohmann::json room_to_json(const Room& room);

/// A 4 x 3 m room, 2.6 m high, with a 1.2 x 0.6 m table.
Room default_room();

/// Rectangle a workspace grid can be laid on: a furniture side or a boundary.
struct WorkspaceCandidate {
  std::string label;
  BoxFace face;     // face normal = sign * axis, pointing away from the material
  Vec3 rect_min;    // face rectangle (degenerate along face.axis)
  Vec3 rect_max;
  Vec3 point;       // ray hit
  double distance = 0.0;
};

/// Nearest hit among furniture faces and boundary planes, or none.
std::optional<WorkspaceCandidate> pick_workspace(const Room& room, const Vec3& origin,
                                                 const Vec3& direction);

/// Candidate by label: furniture defaults to its top face, boundaries to their
/// room-facing side. Throws ErrorCode::not_found.
WorkspaceCandidate workspace_by_label(const Room& room, std::string_view label,
                                      std::optional<BoxFace> face = std::nullopt);

}  // namespace craft
