#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "craft/csg.hpp"
#include "craft/geometry.hpp"

namespace craft {

/// Exact point membership of the unit primitive (its ideal, untessellated
/// shape) at a point in primitive-local coordinates.
bool primitive_contains(PrimitiveKind kind, const Vec3& local);

/// Occupancy bitmap over an axis-aligned box. Rows (fixed y, z) are padded to
/// whole 64-bit words so rows can be written independently.
class VoxelGrid {
 public:
  VoxelGrid(int resolution, const Box3& bounds);

  int resolution() const { return resolution_; }
  const Box3& bounds() const { return bounds_; }
  Vec3 cell_size() const { return cell_; }
  double cell_volume() const { return cell_.prod(); }
  Vec3 cell_center(int x, int y, int z) const;

  bool test(int x, int y, int z) const;
  void set(int x, int y, int z);
  std::size_t count() const;
  double volume() const { return static_cast<double>(count()) * cell_volume(); }

  void unite(const VoxelGrid& other);
  void subtract(const VoxelGrid& other);

  std::size_t words_per_row() const { return words_per_row_; }
  std::uint64_t* row(int y, int z) { return &bits_[row_offset(y, z)]; }
  const std::uint64_t* row(int y, int z) const { return &bits_[row_offset(y, z)]; }

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
    return a.resolution_ == b.resolution_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t row_offset(int y, int z) const {
    return (static_cast<std::size_t>(z) * resolution_ + static_cast<std::size_t>(y)) *
           words_per_row_;
  }

  int resolution_;
  Box3 bounds_;
  Vec3 cell_;
  std::size_t words_per_row_;
  std::vector<std::uint64_t> bits_;
};

enum class Execution { serial, parallel };

/// Bounds strictly containing every operand: the union of the trees' AABBs
/// grown by two cells on every side, so those AABB faces sit on cell
/// boundaries.
Box3 oracle_bounds(std::span<const CsgTree> trees, int resolution);

/// Rasterizes trees with combine semantics: union of the solid roots minus the
/// union of the hole roots. Throws ErrorCode::parameter if resolution < 8.
VoxelGrid voxelize(std::span<const CsgTree> trees, int resolution,
                   Execution exec = Execution::parallel);
VoxelGrid voxelize(std::span<const CsgTree> trees, int resolution, const Box3& bounds,
                   Execution exec = Execution::parallel);

double voxel_oracle_volume(std::span<const CsgTree> trees, int resolution,
                           Execution exec = Execution::parallel);

}  // namespace craft
