#include "craft/fab/stl.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "craft/error.hpp"

namespace craft {

namespace {

static_assert(std::endian::native == std::endian::little, "STL writer assumes little endian");

std::array<float, 3> facet_normal(const std::array<std::array<float, 3>, 3>& v) {
  const Vec3 a(v[0][0], v[0][1], v[0][2]);
  const Vec3 b(v[1][0], v[1][1], v[1][2]);
  const Vec3 c(v[2][0], v[2][1], v[2][2]);
  Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (len > 0.0) n /= len;
  return {static_cast<float>(n.x()), static_cast<float>(n.y()), static_cast<float>(n.z())};
}

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

float get_f32(const char* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

StlDocument read_binary(std::string_view bytes) {
  std::uint32_t count;
  std::memcpy(&count, bytes.data() + kStlHeaderBytes, 4);
  StlDocument doc;
  const std::string_view header = bytes.substr(0, kStlHeaderBytes);
  doc.name = std::string(header.substr(0, header.find('\0')));
  doc.facets.resize(count);
  const char* p = bytes.data() + kStlHeaderBytes + 4;
  for (auto& f : doc.facets) {
    for (int k = 0; k < 3; ++k) f.normal[k] = get_f32(p + 4 * k);
    for (int v = 0; v < 3; ++v) {
      for (int k = 0; k < 3; ++k) f.vertices[v][k] = get_f32(p + 12 + 12 * v + 4 * k);
    }
    p += kStlFacetBytes;
  }
  return doc;
}

class AsciiReader {
 public:
  explicit AsciiReader(std::string_view text) : text_(text) {}

  std::string_view word() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string rest_of_line() {
    const auto end = text_.find('\n', pos_);
    std::string s(text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_));
    pos_ = end == std::string_view::npos ? text_.size() : end;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  }

  void expect(std::string_view w) {
    const auto got = word();
    if (got != w) fail("expected \"" + std::string(w) + "\", found \"" + std::string(got) + "\"");
  }

  float number() {
    const auto w = word();
    float v = 0.0f;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      fail("bad number \"" + std::string(w) + "\"");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse, "ASCII STL line " + std::to_string(line_) + ": " + what);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

StlDocument read_ascii(std::string_view text) {
  AsciiReader r(text);
  StlDocument doc;
  r.expect("solid");
  doc.name = r.rest_of_line();
  for (;;) {
    const auto w = r.word();
    if (w == "endsolid") break;
    if (w != "facet") r.fail("expected \"facet\" or \"endsolid\"");
    StlFacet f;
    r.expect("normal");
    for (int k = 0; k < 3; ++k) f.normal[k] = r.number();
    r.expect("outer");
    r.expect("loop");
    for (int v = 0; v < 3; ++v) {
      r.expect("vertex");
      for (int k = 0; k < 3; ++k) f.vertices[v][k] = r.number();
    }
    r.expect("endloop");
    r.expect("endfacet");
    doc.facets.push_back(f);
  }
  return doc;
}

}  // namespace

StlDocument mesh_to_stl(const Mesh& mesh, std::string name, double to_mm) {
  StlDocument doc;
  doc.name = std::move(name);
  doc.facets.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    StlFacet f;
    for (int v = 0; v < 3; ++v) {
      const Vec3 p = mesh.vertices[t[v]] * to_mm;
      f.vertices[v] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z())};
    }
    doc.facets.push_back(f);
  }
  // Separate pass: fused with the loop above, g++ -O3 has been seen to build
  // the normal from the unrounded doubles.
  for (auto& f : doc.facets) f.normal = facet_normal(f.vertices);
  return doc;
}

std::string write_stl(const StlDocument& doc, StlFormat format) {
  std::string out;
  if (format == StlFormat::binary) {
    out.reserve(kStlHeaderBytes + 4 + kStlFacetBytes * doc.facets.size());
    std::string header = doc.name.substr(0, kStlHeaderBytes);
    header.resize(kStlHeaderBytes, '\0');
    out += header;
    put_u32(out, static_cast<std::uint32_t>(doc.facets.size()));
    for (const auto& f : doc.facets) {
      for (float c : f.normal) put_f32(out, c);
      for (const auto& v : f.vertices) {
        for (float c : v) put_f32(out, c);
      }
      out.append(2, '\0');
    }
    return out;
  }
  out += fmt::format("solid {}\n", doc.name);
  for (const auto& f : doc.facets) {
    // Nine significant digits round-trip a float exactly.
    out += fmt::format("  facet normal {:.9g} {:.9g} {:.9g}\n    outer loop\n", f.normal[0],
                       f.normal[1], f.normal[2]);
    for (const auto& v : f.vertices) {
      out += fmt::format("      vertex {:.9g} {:.9g} {:.9g}\n", v[0], v[1], v[2]);
    }
    out += "    endloop\n  endfacet\n";
  }
  out += fmt::format("endsolid {}\n", doc.name);
  return out;
}

StlDocument read_stl(std::string_view bytes) {
  if (bytes.size() >= kStlHeaderBytes + 4) {
    std::uint32_t count;
    std::memcpy(&count, bytes.data() + kStlHeaderBytes, 4);
    if (bytes.size() == kStlHeaderBytes + 4 + kStlFacetBytes * static_cast<std::size_t>(count)) {
      return read_binary(bytes);
    }
  }
  std::size_t start = 0;
  while (start < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[start]))) ++start;
  if (bytes.substr(start, 5) == "solid") return read_ascii(bytes.substr(start));
  throw Error(ErrorCode::parse, "not an STL file: binary size does not match the triangle count");
}

Mesh stl_to_mesh(const StlDocument& doc) {
  Mesh mesh;
  std::map<std::array<float, 3>, std::uint32_t> index;
  for (const auto& f : doc.facets) {
    Triangle t;
    for (int v = 0; v < 3; ++v) {
      auto [it, fresh] = index.emplace(f.vertices[v], static_cast<std::uint32_t>(mesh.vertices.size()));
      if (fresh) mesh.vertices.emplace_back(f.vertices[v][0], f.vertices[v][1], f.vertices[v][2]);
      t[v] = it->second;
    }
    mesh.triangles.push_back(t);
  }
  return mesh;
}

double stl_volume(const StlDocument& doc) {
  double v = 0.0;
  for (const auto& f : doc.facets) {
    const Vec3 a(f.vertices[0][0], f.vertices[0][1], f.vertices[0][2]);
    const Vec3 b(f.vertices[1][0], f.vertices[1][1], f.vertices[1][2]);
    const Vec3 c(f.vertices[2][0], f.vertices[2][1], f.vertices[2][2]);
    v += a.dot(b.cross(c));
  }
  return v / 6.0;
}

std::string export_stl(std::span<const Mesh* const> meshes, StlFormat format) {
  if (meshes.empty()) throw Error(ErrorCode::parameter, "nothing to export");
  for (const Mesh* m : meshes) {
    if (!validate_mesh(*m).watertight()) {
      throw Error(ErrorCode::validity, "cannot export a mesh that is not watertight");
    }
  }
  return write_stl(mesh_to_stl(merge_meshes(meshes)), format);
}

}  // namespace craft
