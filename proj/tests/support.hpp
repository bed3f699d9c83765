#pragma once

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "craft/csg.hpp"
#include "craft/geometry.hpp"
#include "craft/scene.hpp"

namespace craft::test {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

#ifdef CRAFT_DESIGNS_DIR
inline std::filesystem::path designs_dir() { return CRAFT_DESIGNS_DIR; }
#endif

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("craft-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Operands of a randomized combine: up to 8 primitives with random pose and
/// size, the first always solid, later ones holes with probability 1/3.
struct RandomScene {
  std::vector<CsgTree> trees;
  std::vector<Mesh> meshes;

  std::vector<CombineItem> items() const {
    std::vector<CombineItem> out;
    for (std::size_t i = 0; i < trees.size(); ++i) {
      out.push_back({&meshes[i], trees[i], trees[i].solidity, {}, i});
    }
    return out;
  }
};

inline RandomScene random_scene(std::mt19937_64& rng, int primitives,
                                const TessellationSpec& tess = {}) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomScene s;
  for (int i = 0; i < primitives; ++i) {
    const bool hole = i > 0 && rng() % 3 == 0;
    Transform t;
    t.translation = 0.25 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
    t.rotation = Quat(Eigen::AngleAxisd(std::numbers::pi * u(rng), axis));
    for (int k = 0; k < 3; ++k) {
      t.scale[k] = hole ? 0.10 + 0.25 * unit(rng) : 0.30 + 0.40 * unit(rng);
    }
    const PrimitiveKind kind = kAllPrimitiveKinds[rng() % kAllPrimitiveKinds.size()];
    s.trees.push_back(CsgNode::leaf(kind, t, hole ? Solidity::hole : Solidity::solid));
    s.meshes.push_back(transform_mesh(make_primitive(kind, tess), t));
  }
  return s;
}

inline double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-6);
}

}  // namespace craft::test
