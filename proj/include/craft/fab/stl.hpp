#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "craft/geometry.hpp"

namespace craft {

enum class StlFormat { binary, ascii };

struct StlFacet {
  std::array<float, 3> normal{};
  std::array<std::array<float, 3>, 3> vertices{};
  friend bool operator==(const StlFacet&, const StlFacet&) = default;
};

/// Triangle soup in millimeters, exactly as stored in the file.
struct StlDocument {
  std::string name = "craft";
  std::vector<StlFacet> facets;
};

inline constexpr std::size_t kStlHeaderBytes = 80;
inline constexpr std::size_t kStlFacetBytes = 50;

/// Meters -> millimeters, rounded to float. Normals are computed from the
/// rounded coordinates so that a re-export of a parsed file is identical.
/// Pass to_mm = 1 for a mesh that is already in millimeters.
StlDocument mesh_to_stl(const Mesh& mesh_m, std::string name = "craft", double to_mm = 1000.0);
std::string write_stl(const StlDocument& doc, StlFormat format = StlFormat::binary);
/// Detects binary vs ASCII. Throws ErrorCode::parse.
StlDocument read_stl(std::string_view bytes);

/// Indexed mesh in millimeters; bit-identical corners are shared.
Mesh stl_to_mesh(const StlDocument& doc);
/// Signed volume in mm^3 straight from the facets.
double stl_volume(const StlDocument& doc);

/// Merges watertight meshes and writes them in millimeters. Throws
/// ErrorCode::parameter on an empty list and ErrorCode::validity when any
/// mesh is not watertight.
std::string export_stl(std::span<const Mesh* const> meshes_m, StlFormat format = StlFormat::binary);

}  // namespace craft
