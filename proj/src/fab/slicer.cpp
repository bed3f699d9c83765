#include "craft/fab/slicer.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "craft/error.hpp"

namespace craft {

namespace {

constexpr double kFilamentDiameter = 1.75;
constexpr double kLineWidth = 0.4;

/// Bounds of the mesh cross-section with the plane z = h, in xy.
Box3 cross_section(const Mesh& m, double h) {
  Box3 b;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = m.vertices[t[k]];
      const Vec3& q = m.vertices[t[(k + 1) % 3]];
      const double dp = p.z() - h;
      const double dq = q.z() - h;
      if (dp == 0.0) b.expand(p);
      if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
        b.expand(p + (q - p) * (dp / (dp - dq)));
      }
    }
  }
  return b;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::slicer, "slicer produced no output at " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

void SliceProfile::validate() const {
  if (!(layer_height_mm >= 0.05 && layer_height_mm <= 1.0)) {
    throw Error(ErrorCode::parameter, "layer height must be within 0.05..1.0 mm");
  }
  if (!(infill_percent >= 0.0 && infill_percent <= 100.0)) {
    throw Error(ErrorCode::parameter, "infill must be within 0..100 %");
  }
}

int layer_count(double height_mm, double layer_height_mm) {
  return static_cast<int>(std::ceil(height_mm / layer_height_mm - 1e-9));
}

SliceResult mock_slice(const Mesh& mesh, const SliceProfile& profile) {
  profile.validate();
  if (mesh.triangles.empty()) throw Error(ErrorCode::slicer, "nothing to slice: the mesh is empty");
  const Box3 bounds = mesh_aabb(mesh);
  const double lh = profile.layer_height_mm;
  SliceResult r;
  r.layers = std::max(1, layer_count(bounds.extent().z(), lh));
  const double e_per_mm =
      lh * kLineWidth / (std::numbers::pi * 0.25 * kFilamentDiameter * kFilamentDiameter);

  std::string& g = r.gcode;
  g += ";FLAVOR:Marlin\n";
  g += ";GENERATOR:craft mock slicer\n";
  g += fmt::format(";LAYER_COUNT:{}\n", r.layers);
  g += fmt::format(";LAYER_HEIGHT:{:.3f}\n", lh);
  g += fmt::format(";INFILL:{:.1f}\n", profile.infill_percent);
  g += fmt::format(";SUPPORTS:{}\n", profile.supports ? 1 : 0);
  g += fmt::format(";MINX:{:.3f}\n;MINY:{:.3f}\n;MINZ:{:.3f}\n", bounds.min.x(), bounds.min.y(),
                   bounds.min.z());
  g += fmt::format(";MAXX:{:.3f}\n;MAXY:{:.3f}\n;MAXZ:{:.3f}\n", bounds.max.x(), bounds.max.y(),
                   bounds.max.z());
  g += "G21\nG90\nM82\nG28\nG92 E0\n";

  double e = 0.0;
  for (int i = 0; i < r.layers; ++i) {
    const double top = bounds.min.z() + (i + 1) * lh;
    const double mid = std::min(bounds.min.z() + (i + 0.5) * lh, bounds.max.z());
    g += fmt::format(";LAYER:{}\n", i);
    const Box3 s = cross_section(mesh, mid);
    if (s.empty()) {
      g += ";EMPTY\n";
      continue;
    }
    const double xs[] = {s.min.x(), s.max.x(), s.max.x(), s.min.x(), s.min.x()};
    const double ys[] = {s.min.y(), s.min.y(), s.max.y(), s.max.y(), s.min.y()};
    g += fmt::format("G0 F6000 X{:.3f} Y{:.3f} Z{:.3f}\n", xs[0], ys[0], top);
    for (int k = 1; k < 5; ++k) {
      e += std::hypot(xs[k] - xs[k - 1], ys[k] - ys[k - 1]) * e_per_mm;
      g += fmt::format("G1 F1800 X{:.3f} Y{:.3f} E{:.5f}\n", xs[k], ys[k], e);
    }
  }
  g += ";END\nM104 S0\nM140 S0\nM84\n";
  return r;
}

SliceResult MockSlicer::slice(const StlDocument& stl, const SliceProfile& profile,
                              const std::filesystem::path&) {
  return mock_slice(stl_to_mesh(stl), profile);
}

SliceResult ExternalSlicer::slice(const StlDocument& stl, const SliceProfile& profile,
                                  const std::filesystem::path& workdir) {
  profile.validate();
  const auto input = workdir / "model.stl";
  const auto output = workdir / "external.gcode";
  if (!std::filesystem::exists(input)) {
    std::ofstream(input, std::ios::binary) << write_stl(stl);
  }
  std::string cmd = command_;
  if (cmd.find("{input}") == std::string::npos) cmd += " {input} {output}";
  replace_all(cmd, "{input}", shell_quote(input.string()));
  replace_all(cmd, "{output}", shell_quote(output.string()));
  replace_all(cmd, "{layer_height}", fmt::format("{:.3f}", profile.layer_height_mm));
  replace_all(cmd, "{infill}", fmt::format("{:.1f}", profile.infill_percent));
  replace_all(cmd, "{supports}", profile.supports ? "1" : "0");
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    throw Error(ErrorCode::slicer, "external slicer exited with status " + std::to_string(status));
  }
  SliceResult r;
  r.gcode = read_file(output);
  std::istringstream lines(r.gcode);
  std::string line;
  int layer_lines = 0;
  while (std::getline(lines, line)) {
    if (line.rfind(";LAYER_COUNT:", 0) == 0) {
      r.layers = std::atoi(line.c_str() + 13);
    } else if (line.rfind(";LAYER:", 0) == 0) {
      ++layer_lines;
    }
  }
  if (r.layers <= 0) r.layers = layer_lines;
  if (r.layers <= 0) throw Error(ErrorCode::slicer, "external slicer output has no layers");
  return r;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace craft
