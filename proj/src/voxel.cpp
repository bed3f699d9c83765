#include "craft/voxel.hpp"

#include <bit>
#include <cmath>

#include "craft/error.hpp"

namespace craft {

namespace {

/// Leaf with its world-to-local map and a conservative world AABB.
struct PlacedLeaf {
  PrimitiveKind kind;
  Eigen::Affine3d world_to_local;
  Box3 bounds;
};

Box3 unit_box_image(const Eigen::Affine3d& local_to_world) {
  Box3 b;
  for (int i = 0; i < 8; ++i) {
    const Vec3 c(i & 1 ? 0.5 : -0.5, i & 2 ? 0.5 : -0.5, i & 4 ? 0.5 : -0.5);
    b.expand(local_to_world * c);
  }
  return b;
}

void collect_bounds(const CsgNode& node, const Eigen::Affine3d& parent, Box3& out) {
  const Eigen::Affine3d here = parent * node.transform.affine();
  if (node.op == CsgNode::Op::leaf) {
    out.expand(unit_box_image(here));
    return;
  }
  for (const auto& c : node.children) collect_bounds(c, here, out);
}

/// Row-kernel: sets bits of cells whose centers are inside the leaf, limited
/// to the leaf's AABB. Rows are independent, so the parallel variant splits
/// the (y, z) rows across threads.
void rasterize_leaf(const PlacedLeaf& leaf, VoxelGrid& grid, Execution exec) {
  const Box3& gb = grid.bounds();
  const Vec3 cs = grid.cell_size();
  const int n = grid.resolution();
  int lo[3];
  int hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((leaf.bounds.min[a] - gb.min[a]) / cs[a])));
    hi[a] = std::min(n - 1, static_cast<int>(std::floor((leaf.bounds.max[a] - gb.min[a]) / cs[a])));
    if (lo[a] > hi[a]) return;
  }
  const int rows_y = hi[1] - lo[1] + 1;
  const std::int64_t rows = static_cast<std::int64_t>(rows_y) * (hi[2] - lo[2] + 1);
  const Eigen::Affine3d& inv = leaf.world_to_local;
  const Vec3 step = inv.linear() * Vec3(cs.x(), 0.0, 0.0);

  auto kernel = [&](std::int64_t r) {
    const int y = lo[1] + static_cast<int>(r % rows_y);
    const int z = lo[2] + static_cast<int>(r / rows_y);
    std::uint64_t* row = grid.row(y, z);
    Vec3 local = inv * grid.cell_center(lo[0], y, z);
    for (int x = lo[0]; x <= hi[0]; ++x, local += step) {
      if (primitive_contains(leaf.kind, local)) {
        row[x >> 6] |= std::uint64_t{1} << (x & 63);
      }
    }
  };

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) kernel(r);
  } else {
    for (std::int64_t r = 0; r < rows; ++r) kernel(r);
  }
}

VoxelGrid rasterize_node(const CsgNode& node, const Eigen::Affine3d& parent, int resolution,
                         const Box3& bounds, Execution exec) {
  const Eigen::Affine3d here = parent * node.transform.affine();
  VoxelGrid grid(resolution, bounds);
  switch (node.op) {
    case CsgNode::Op::leaf: {
      const PlacedLeaf leaf{node.primitive, here.inverse(), unit_box_image(here)};
      rasterize_leaf(leaf, grid, exec);
      break;
    }
    case CsgNode::Op::union_all:
      for (const auto& c : node.children) {
        grid.unite(rasterize_node(c, here, resolution, bounds, exec));
      }
      break;
    case CsgNode::Op::difference:
      check_tree(node);
      grid = rasterize_node(node.children[0], here, resolution, bounds, exec);
      grid.subtract(rasterize_node(node.children[1], here, resolution, bounds, exec));
      break;
  }
  return grid;
}

}  // namespace

bool primitive_contains(PrimitiveKind kind, const Vec3& p) {
  const double x = p.x();
  const double y = p.y();
  const double z = p.z();
  if (std::abs(x) > 0.5 || std::abs(y) > 0.5 || std::abs(z) > 0.5) return false;
  const double r2 = x * x + z * z;
  switch (kind) {
    case PrimitiveKind::cube: return true;
    case PrimitiveKind::sphere: return r2 + y * y <= 0.25;
    case PrimitiveKind::cylinder: return r2 <= 0.25;
    case PrimitiveKind::capsule: {
      const double ay = std::abs(y);
      if (ay <= 0.25) return r2 <= 0.25;
      const double cy = (ay - 0.25) / 0.25;
      return r2 / 0.25 + cy * cy <= 1.0;
    }
    case PrimitiveKind::triangular_prism: return std::abs(x) <= 0.25 - 0.5 * y;
    case PrimitiveKind::pyramid: {
      const double half = 0.25 - 0.5 * y;
      return std::abs(x) <= half && std::abs(z) <= half;
    }
    case PrimitiveKind::cone: {
      const double radius = 0.25 - 0.5 * y;
      return r2 <= radius * radius;
    }
  }
  return false;
}

VoxelGrid::VoxelGrid(int resolution, const Box3& bounds)
    : resolution_(resolution), bounds_(bounds) {
  if (resolution < 8) {
    throw Error(ErrorCode::parameter, "voxel resolution must be at least 8");
  }
  if (bounds.empty()) throw Error(ErrorCode::parameter, "voxel bounds are empty");
  cell_ = bounds.extent() / resolution;
  words_per_row_ = (static_cast<std::size_t>(resolution) + 63) / 64;
  bits_.assign(words_per_row_ * resolution * resolution, 0);
}

Vec3 VoxelGrid::cell_center(int x, int y, int z) const {
  return bounds_.min + Vec3(x + 0.5, y + 0.5, z + 0.5).cwiseProduct(cell_);
}

bool VoxelGrid::test(int x, int y, int z) const {
  return (row(y, z)[x >> 6] >> (x & 63)) & 1u;
}

void VoxelGrid::set(int x, int y, int z) { row(y, z)[x >> 6] |= std::uint64_t{1} << (x & 63); }

std::size_t VoxelGrid::count() const {
  std::size_t n = 0;
  for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void VoxelGrid::unite(const VoxelGrid& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
}

void VoxelGrid::subtract(const VoxelGrid& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= ~other.bits_[i];
}

Box3 oracle_bounds(std::span<const CsgTree> trees, int resolution) {
  Box3 b;
  for (const auto& t : trees) collect_bounds(t, Eigen::Affine3d::Identity(), b);
  if (b.empty()) throw Error(ErrorCode::parameter, "oracle needs at least one tree");
  // Two-cell margin per axis puts the operands' bounding faces on cell
  // boundaries instead of wherever a fixed margin happens to land.
  const int res = std::max(resolution, 8);
  const double fallback = b.extent().maxCoeff() / (res - 4);
  Vec3 margin;
  for (int a = 0; a < 3; ++a) {
    const double cell = b.extent()[a] > 0.0 ? b.extent()[a] / (res - 4) : fallback;
    margin[a] = 2.0 * cell;
  }
  return {b.min - margin, b.max + margin};
}

VoxelGrid voxelize(std::span<const CsgTree> trees, int resolution, const Box3& bounds,
                   Execution exec) {
  VoxelGrid solids(resolution, bounds);
  VoxelGrid holes(resolution, bounds);
  for (const auto& t : trees) {
    auto g = rasterize_node(t, Eigen::Affine3d::Identity(), resolution, bounds, exec);
    (t.solidity == Solidity::solid ? solids : holes).unite(g);
  }
  solids.subtract(holes);
  return solids;
}

VoxelGrid voxelize(std::span<const CsgTree> trees, int resolution, Execution exec) {
  if (resolution < 8) throw Error(ErrorCode::parameter, "voxel resolution must be at least 8");
  return voxelize(trees, resolution, oracle_bounds(trees, resolution), exec);
}

double voxel_oracle_volume(std::span<const CsgTree> trees, int resolution, Execution exec) {
  return voxelize(trees, resolution, exec).volume();
}

}  // namespace craft
