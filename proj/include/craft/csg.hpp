#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "craft/geometry.hpp"

namespace craft {

enum class Solidity { solid, hole };

std::string_view to_string(Solidity s);

struct Color {
  std::uint8_t r = 200;
  std::uint8_t g = 200;
  std::uint8_t b = 200;
  friend bool operator==(const Color&, const Color&) = default;
};

/// Construction history of an object. A leaf is a unit primitive placed by its
/// transform; op nodes combine their children and then apply their own
/// transform (identity unless an already-combined object was embedded).
struct CsgNode {
  enum class Op { leaf, union_all, difference };

  Op op = Op::leaf;
  PrimitiveKind primitive = PrimitiveKind::cube;
  Solidity solidity = Solidity::solid;
  Transform transform;
  /// Union: any number of children. Difference: {solid subtree, hole subtree}.
  std::vector<CsgNode> children;

  static CsgNode leaf(PrimitiveKind kind, const Transform& t = {},
                      Solidity s = Solidity::solid) {
    CsgNode n;
    n.primitive = kind;
    n.transform = t;
    n.solidity = s;
    return n;
  }
  static CsgNode make_union(std::vector<CsgNode> children);
  static CsgNode make_difference(CsgNode solid, CsgNode hole);

  std::size_t leaf_count() const;
  friend bool operator==(const CsgNode& a, const CsgNode& b);
};

using CsgTree = CsgNode;

/// Throws ErrorCode::semantic when a difference node is malformed.
void check_tree(const CsgTree& tree);

struct CsgOptions {
  /// Coplanarity / point-on-plane / weld tolerance in meters. At 1e-6 curved
  /// operands crossing near a fan apex leave micro-fragments of about the
  /// same size and the weld tears them open.
  double epsilon = 1e-8;
  /// Retry k moves every operand but the first by up to k times this (meters).
  double perturbation = 2e-5;
  /// Seed for the perturbation retries; results depend only on inputs + seed.
  std::uint64_t seed = 0x5eed;
  int max_retries = 4;
  /// Run the per-operand clipping loop with OpenMP.
  bool parallel = true;
};

/// Union of any number of watertight meshes.
Mesh csg_union_all(std::span<const Mesh* const> meshes, const CsgOptions& opts = {});
Mesh csg_union(const Mesh& a, const Mesh& b, const CsgOptions& opts = {});
/// Points in `a` and not in `b`. May return an empty mesh.
Mesh csg_subtract(const Mesh& a, const Mesh& b, const CsgOptions& opts = {});

/// Mesh of a construction tree (children combined, then node transform).
Mesh evaluate_tree(const CsgTree& tree, const TessellationSpec& tess,
                   const CsgOptions& opts = {});

struct CombineItem {
  const Mesh* mesh = nullptr;  // world-space mesh of the object
  CsgTree tree;                // object geometry embedded in world space
  Solidity solidity = Solidity::solid;
  Color color;
  std::uint64_t sequence = 0;  // creation order
};

struct CombineResult {
  Mesh mesh;
  CsgTree tree;
  Color color;
};

/// Union of all solids minus the union of all holes. Throws
/// ErrorCode::semantic for a holes-only selection and ErrorCode::empty_result
/// when nothing remains.
CombineResult combine(std::span<const CombineItem> items, const CsgOptions& opts = {});

}  // namespace craft
