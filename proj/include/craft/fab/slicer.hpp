#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "craft/fab/stl.hpp"

namespace craft {

struct SliceProfile {
  double layer_height_mm = 0.2;
  double infill_percent = 20.0;
  bool supports = false;

  /// Throws ErrorCode::parameter outside 0.05..1.0 mm / 0..100 %.
  void validate() const;
};

struct SliceResult {
  std::string gcode;
  int layers = 0;
};

/// Layers the mock slicer emits for a part of the given height.
int layer_count(double height_mm, double layer_height_mm);

/// Deterministic planar slicer: one rectangular perimeter per layer around the
/// cross-section bounds at mid-layer height. Input in millimeters. Throws
/// ErrorCode::slicer for an empty mesh.
SliceResult mock_slice(const Mesh& mesh_mm, const SliceProfile& profile);

class Slicer {
 public:
  virtual ~Slicer() = default;
  virtual std::string name() const = 0;
  /// `workdir` holds model.stl; the slicer may write scratch files there.
  virtual SliceResult slice(const StlDocument& stl, const SliceProfile& profile,
                            const std::filesystem::path& workdir) = 0;
};

class MockSlicer final : public Slicer {
 public:
  std::string name() const override { return "mock"; }
  SliceResult slice(const StlDocument& stl, const SliceProfile& profile,
                    const std::filesystem::path& workdir) override;
};

/// Runs a slicer executable. `{input}`, `{output}`, `{layer_height}`,
/// `{infill}` and `{supports}` in the command are substituted; without
/// `{input}` the input and output paths are appended.
class ExternalSlicer final : public Slicer {
 public:
  explicit ExternalSlicer(std::string command) : command_(std::move(command)) {}
  std::string name() const override { return "external"; }
  SliceResult slice(const StlDocument& stl, const SliceProfile& profile,
                    const std::filesystem::path& workdir) override;

 private:
  std::string command_;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace craft
