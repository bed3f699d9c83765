#include "craft/csg.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>

#include "craft/error.hpp"

namespace craft {

namespace {

// ---------------------------------------------------------------------------
// Planar polygons and splitting

struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double w = 0.0;

  static std::optional<Plane> through(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 0.0)) return std::nullopt;
    n /= len;
    return Plane{n, n.dot(a)};
  }

  double distance(const Vec3& p) const { return normal.dot(p) - w; }
};

struct Polygon {
  std::vector<Vec3> vertices;
  Plane plane;

  Box3 bounds() const {
    Box3 b;
    for (const auto& v : vertices) b.expand(v);
    return b;
  }

  void flip() {
    std::reverse(vertices.begin(), vertices.end());
    plane.normal = -plane.normal;
    plane.w = -plane.w;
  }
};

enum Side : int { kCoplanar = 0, kFront = 1, kBack = 2, kSpanning = 3 };

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

/// Intersection of segment (a, b) with `plane`, computed from the
/// lexicographically smaller endpoint so that both polygons sharing an edge
/// produce bit-identical split points.
Vec3 edge_plane_point(const Plane& plane, const Vec3& a, const Vec3& b) {
  const bool swap = lex_less(b, a);
  const Vec3& p = swap ? b : a;
  const Vec3& q = swap ? a : b;
  const double t = (plane.w - plane.normal.dot(p)) / plane.normal.dot(q - p);
  return p + (q - p) * t;
}

struct SplitOutcome {
  Side side = kCoplanar;
  bool same_orientation = false;  // for coplanar polygons
  Polygon front;
  Polygon back;
};

SplitOutcome split_polygon(const Plane& plane, const Polygon& poly, double eps) {
  SplitOutcome out;
  int type = 0;
  std::vector<int> types;
  types.reserve(poly.vertices.size());
  for (const auto& v : poly.vertices) {
    const double d = plane.distance(v);
    const int t = d < -eps ? kBack : (d > eps ? kFront : kCoplanar);
    type |= t;
    types.push_back(t);
  }
  out.side = static_cast<Side>(type);
  if (type == kCoplanar) {
    out.same_orientation = plane.normal.dot(poly.plane.normal) > 0.0;
    return out;
  }
  if (type != kSpanning) return out;

  const auto n = poly.vertices.size();
  out.front.plane = poly.plane;
  out.back.plane = poly.plane;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const int ti = types[i];
    const int tj = types[j];
    const Vec3& vi = poly.vertices[i];
    if (ti != kBack) out.front.vertices.push_back(vi);
    if (ti != kFront) out.back.vertices.push_back(vi);
    if ((ti | tj) == kSpanning) {
      const Vec3 v = edge_plane_point(plane, vi, poly.vertices[j]);
      out.front.vertices.push_back(v);
      out.back.vertices.push_back(v);
    }
  }
  return out;
}

std::vector<Polygon> to_polygons(const Mesh& mesh) {
  std::vector<Polygon> polys;
  polys.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    auto plane = Plane::through(a, b, c);
    if (!plane) continue;
    polys.push_back(Polygon{{a, b, c}, *plane});
  }
  return polys;
}

// ---------------------------------------------------------------------------
// BSP tree used only for classification

struct BspNode {
  Plane plane;
  int front = -1;
  int back = -1;
};

class BspTree {
 public:
  BspTree() = default;

  BspTree(std::vector<Polygon> polys, double eps) {
    if (polys.empty()) return;
    struct Work {
      int node;
      std::vector<Polygon> polys;
    };
    std::vector<Work> stack;
    nodes_.push_back({});
    stack.push_back({0, std::move(polys)});
    while (!stack.empty()) {
      Work work = std::move(stack.back());
      stack.pop_back();
      const std::size_t pick = choose_splitter(work.polys, eps);
      const Plane plane = work.polys[pick].plane;
      nodes_[work.node].plane = plane;

      std::vector<Polygon> front;
      std::vector<Polygon> back;
      for (auto& p : work.polys) {
        auto s = split_polygon(plane, p, eps);
        switch (s.side) {
          case kCoplanar: break;  // lies on this node's plane
          case kFront: front.push_back(std::move(p)); break;
          case kBack: back.push_back(std::move(p)); break;
          case kSpanning:
            if (s.front.vertices.size() >= 3) front.push_back(std::move(s.front));
            if (s.back.vertices.size() >= 3) back.push_back(std::move(s.back));
            break;
        }
      }
      if (!front.empty()) {
        const int child = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        nodes_[work.node].front = child;
        stack.push_back({child, std::move(front)});
      }
      if (!back.empty()) {
        const int child = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        nodes_[work.node].back = child;
        stack.push_back({child, std::move(back)});
      }
    }
  }

  bool empty() const { return nodes_.empty(); }
  const BspNode& node(int i) const { return nodes_[i]; }

 private:
  /// Few-candidate heuristic: fewest splits, then best balance.
  static std::size_t choose_splitter(const std::vector<Polygon>& polys, double eps) {
    constexpr std::size_t kCandidates = 5;
    if (polys.size() <= 2) return 0;
    const std::size_t step = std::max<std::size_t>(1, polys.size() / kCandidates);
    std::size_t best = 0;
    std::int64_t best_score = std::numeric_limits<std::int64_t>::max();
    for (std::size_t c = 0; c < polys.size(); c += step) {
      const Plane& plane = polys[c].plane;
      std::int64_t front = 0;
      std::int64_t back = 0;
      std::int64_t splits = 0;
      for (const auto& p : polys) {
        int type = 0;
        for (const auto& v : p.vertices) {
          const double d = plane.distance(v);
          type |= d < -eps ? kBack : (d > eps ? kFront : kCoplanar);
        }
        if (type == kFront) ++front;
        if (type == kBack) ++back;
        if (type == kSpanning) ++splits;
      }
      const std::int64_t score = 8 * splits + std::abs(front - back);
      if (score < best_score) {
        best_score = score;
        best = c;
      }
    }
    return best;
  }

  std::vector<BspNode> nodes_;
};

// ---------------------------------------------------------------------------
// Fragments: polygons of one operand plus the history of how they were split,
// so sibling pieces that all survive are emitted as their unsplit parent.

class FragmentSet {
 public:
  explicit FragmentSet(std::vector<Polygon> polys) {
    nodes_.reserve(polys.size() * 2);
    for (auto& p : polys) {
      const Box3 b = p.bounds();
      nodes_.push_back({std::move(p), b});
      roots_.push_back(static_cast<int>(nodes_.size() - 1));
    }
  }

  const Polygon& polygon(int id) const { return nodes_[id].poly; }
  const Box3& bounds(int id) const { return nodes_[id].bounds; }
  void remove(int id) { nodes_[id].removed = true; }

  std::pair<int, int> split(int id, Polygon front, Polygon back) {
    const int f = static_cast<int>(nodes_.size());
    const Box3 fb = front.bounds();
    nodes_.push_back({std::move(front), fb});
    const Box3 bb = back.bounds();
    nodes_.push_back({std::move(back), bb});
    nodes_[id].front = f;
    nodes_[id].back = f + 1;
    return {f, f + 1};
  }

  /// Live leaves whose bounds touch `region`.
  std::vector<int> live_leaves(const Box3& region) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      const auto& n = nodes_[i];
      if (n.front < 0 && !n.removed && n.bounds.overlaps(region)) out.push_back(i);
    }
    return out;
  }

  std::vector<int> live_leaves_outside(const Box3& region) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      const auto& n = nodes_[i];
      if (n.front < 0 && !n.removed && !n.bounds.overlaps(region)) out.push_back(i);
    }
    return out;
  }

  void collect(std::vector<Polygon>& out) const {
    std::vector<std::int8_t> intact(nodes_.size(), -1);
    for (int r : roots_) emit(r, intact, out);
  }

 private:
  struct Node {
    Polygon poly;
    Box3 bounds;
    int front = -1;
    int back = -1;
    bool removed = false;
  };

  bool is_intact(int id, std::vector<std::int8_t>& memo) const {
    if (memo[id] >= 0) return memo[id] != 0;
    const auto& n = nodes_[id];
    bool ok;
    if (n.front < 0) {
      ok = !n.removed;
    } else {
      // Evaluate both so the memo is filled for emit().
      const bool f = is_intact(n.front, memo);
      const bool b = is_intact(n.back, memo);
      ok = f && b;
    }
    memo[id] = ok ? 1 : 0;
    return ok;
  }

  void emit(int id, std::vector<std::int8_t>& memo, std::vector<Polygon>& out) const {
    if (is_intact(id, memo)) {
      out.push_back(nodes_[id].poly);
      return;
    }
    const auto& n = nodes_[id];
    if (n.front >= 0) {
      emit(n.front, memo, out);
      emit(n.back, memo, out);
    }
  }

  std::vector<Node> nodes_;
  std::vector<int> roots_;
};

struct ClipRule {
  bool keep_outside = true;
  bool coplanar_same_front = true;
  bool coplanar_opposite_front = false;
};

/// Pushes `ids` down `tree`, splitting as needed, and removes every fragment
/// that lands on the side the rule does not keep.
void clip(const BspTree& tree, FragmentSet& fs, std::vector<int> ids, const ClipRule& rule,
          double eps) {
  if (tree.empty()) {
    if (!rule.keep_outside) {
      for (int id : ids) fs.remove(id);
    }
    return;
  }
  struct Work {
    int node;
    std::vector<int> ids;
  };
  std::vector<Work> stack;
  stack.push_back({0, std::move(ids)});
  auto resolve = [&](const std::vector<int>& list, bool outside) {
    if (outside != rule.keep_outside) {
      for (int id : list) fs.remove(id);
    }
  };
  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    const BspNode& node = tree.node(work.node);
    std::vector<int> front;
    std::vector<int> back;
    for (int id : work.ids) {
      auto s = split_polygon(node.plane, fs.polygon(id), eps);
      switch (s.side) {
        case kCoplanar: {
          const bool to_front =
              s.same_orientation ? rule.coplanar_same_front : rule.coplanar_opposite_front;
          (to_front ? front : back).push_back(id);
          break;
        }
        case kFront: front.push_back(id); break;
        case kBack: back.push_back(id); break;
        case kSpanning: {
          if (s.front.vertices.size() < 3 || s.back.vertices.size() < 3) {
            // Numerically spanning but one side vanished; keep it whole.
            (s.front.vertices.size() >= 3 ? front : back).push_back(id);
            break;
          }
          auto [f, b] = fs.split(id, std::move(s.front), std::move(s.back));
          front.push_back(f);
          back.push_back(b);
          break;
        }
      }
    }
    if (!front.empty()) {
      if (node.front >= 0) {
        stack.push_back({node.front, std::move(front)});
      } else {
        resolve(front, true);
      }
    }
    if (!back.empty()) {
      if (node.back >= 0) {
        stack.push_back({node.back, std::move(back)});
      } else {
        resolve(back, false);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Polygon soup -> watertight indexed mesh

struct CellKey {
  std::int64_t x, y, z;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

class VertexWelder {
 public:
  explicit VertexWelder(double tol) : tol_(tol) {}

  std::uint32_t index_of(const Vec3& p) {
    const CellKey c = cell(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == grid_.end()) continue;
          for (std::uint32_t idx : it->second) {
            if ((positions_[idx] - p).squaredNorm() <= tol_ * tol_) return idx;
          }
        }
      }
    }
    const auto idx = static_cast<std::uint32_t>(positions_.size());
    positions_.push_back(p);
    grid_[c].push_back(idx);
    return idx;
  }

  std::vector<Vec3>& positions() { return positions_; }

 private:
  CellKey cell(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / tol_)),
            static_cast<std::int64_t>(std::floor(p.y() / tol_)),
            static_cast<std::int64_t>(std::floor(p.z() / tol_))};
  }

  double tol_;
  std::vector<Vec3> positions_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid_;
};

struct IndexedPolygon {
  std::vector<std::uint32_t> idx;
  Vec3 normal;
};

std::uint64_t directed_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

/// Inserts vertices that lie inside an edge whose reverse is missing.
/// Only endpoints of such unmatched edges can be T-junction vertices.
bool repair_t_junctions(std::vector<IndexedPolygon>& polys, const std::vector<Vec3>& pos,
                        double tol) {
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& p : polys) {
    const auto n = p.idx.size();
    for (std::size_t i = 0; i < n; ++i) ++count[directed_key(p.idx[i], p.idx[(i + 1) % n])];
  }
  auto unmatched = [&](std::uint32_t a, std::uint32_t b) {
    auto it = count.find(directed_key(b, a));
    return it == count.end() || it->second == 0;
  };

  std::vector<std::uint32_t> candidates;
  for (const auto& p : polys) {
    const auto n = p.idx.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = p.idx[i];
      const auto b = p.idx[(i + 1) % n];
      if (unmatched(a, b)) {
        candidates.push_back(a);
        candidates.push_back(b);
      }
    }
  }
  if (candidates.empty()) return false;
  std::sort(candidates.begin(), candidates.end(),
            [&](std::uint32_t l, std::uint32_t r) {
              return pos[l].x() != pos[r].x() ? pos[l].x() < pos[r].x() : l < r;
            });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  bool changed = false;
  for (auto& p : polys) {
    const auto n = p.idx.size();
    std::vector<std::uint32_t> rebuilt;
    bool poly_changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = p.idx[i];
      const auto b = p.idx[(i + 1) % n];
      rebuilt.push_back(a);
      if (!unmatched(a, b)) continue;
      const Vec3& pa = pos[a];
      const Vec3 d = pos[b] - pa;
      const double len2 = d.squaredNorm();
      if (len2 <= 0.0) continue;
      const double lo = std::min(pa.x(), pos[b].x()) - tol;
      const double hi = std::max(pa.x(), pos[b].x()) + tol;
      auto first = std::lower_bound(candidates.begin(), candidates.end(), lo,
                                    [&](std::uint32_t v, double x) { return pos[v].x() < x; });
      std::vector<std::pair<double, std::uint32_t>> hits;
      for (auto it = first; it != candidates.end() && pos[*it].x() <= hi; ++it) {
        const auto c = *it;
        if (std::find(p.idx.begin(), p.idx.end(), c) != p.idx.end()) continue;
        const double t = (pos[c] - pa).dot(d) / len2;
        if (t <= 0.0 || t >= 1.0) continue;
        if ((pa + t * d - pos[c]).squaredNorm() > tol * tol) continue;
        hits.emplace_back(t, c);
      }
      if (hits.empty()) continue;
      std::sort(hits.begin(), hits.end());
      for (const auto& h : hits) rebuilt.push_back(h.second);
      poly_changed = true;
    }
    if (poly_changed) {
      p.idx = std::move(rebuilt);
      changed = true;
    }
  }
  return changed;
}

void triangulate(const IndexedPolygon& poly, const std::vector<Vec3>& pos, double tol,
                 std::vector<Triangle>& out) {
  std::vector<std::uint32_t> ring = poly.idx;
  const Vec3& n = poly.normal;
  auto orient = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    return (pos[b] - pos[a]).cross(pos[c] - pos[a]).dot(n);
  };
  // x on the closed triangle (a, b, c), with a tolerance band along each edge.
  auto covers = [&](std::uint32_t x, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const std::array<std::uint32_t, 3> t = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      const auto p = t[k];
      const auto q = t[(k + 1) % 3];
      const double edge = (pos[q] - pos[p]).norm();
      if (orient(p, q, x) < -tol * edge) return false;
    }
    return true;
  };

  // Best ear by shape quality. The strict pass keeps a tolerance band around
  // every ear; the relaxed pass only needs positive area and no vertex
  // strictly inside, which is enough for tiny near-degenerate polygons.
  auto find_ear = [&](bool strict) {
    const std::size_t m = ring.size();
    std::size_t best = m;
    double best_quality = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto a = ring[(i + m - 1) % m];
      const auto b = ring[i];
      const auto c = ring[(i + 1) % m];
      const double area2 = orient(a, b, c);
      const double perim2 = (pos[b] - pos[a]).squaredNorm() + (pos[c] - pos[b]).squaredNorm() +
                            (pos[a] - pos[c]).squaredNorm();
      if (strict ? (area2 <= 2.0 * kDegenerateArea || area2 <= tol * std::sqrt(perim2))
                 : !(area2 > 0.0)) {
        continue;
      }
      bool ok = true;
      for (std::size_t k = 0; k < m && ok; ++k) {
        const auto x = ring[k];
        if (x == a || x == b || x == c) continue;
        if (strict ? covers(x, a, b, c)
                   : (orient(a, b, x) > 0.0 && orient(b, c, x) > 0.0 && orient(c, a, x) > 0.0)) {
          ok = false;
        }
      }
      if (!ok) continue;
      const double quality = area2 / perim2;
      if (quality > best_quality) {
        best_quality = quality;
        best = i;
      }
    }
    return best;
  };

  while (ring.size() > 3) {
    const std::size_t m = ring.size();
    std::size_t best = find_ear(true);
    if (best == m) best = find_ear(false);
    if (best == m) return;  // only collinear remnants are left
    out.push_back({ring[(best + m - 1) % m], ring[best], ring[(best + 1) % m]});
    ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(best));
  }
  if (ring.size() == 3 && orient(ring[0], ring[1], ring[2]) > 0.0) {
    out.push_back({ring[0], ring[1], ring[2]});
  }
}

/// Welding can pinch a polygon so that one vertex appears twice. Each pinch
/// splits the ring into two loops; two-vertex loops are spikes and vanish.
std::vector<IndexedPolygon> split_pinched(IndexedPolygon poly) {
  std::vector<IndexedPolygon> out;
  std::vector<IndexedPolygon> work;
  work.push_back(std::move(poly));
  while (!work.empty()) {
    IndexedPolygon p = std::move(work.back());
    work.pop_back();
    if (p.idx.size() < 3) continue;
    bool split = false;
    std::unordered_map<std::uint32_t, std::size_t> seen;
    for (std::size_t i = 0; i < p.idx.size() && !split; ++i) {
      auto [it, fresh] = seen.emplace(p.idx[i], i);
      if (fresh) continue;
      const std::size_t first = it->second;
      IndexedPolygon inner{{p.idx.begin() + static_cast<std::ptrdiff_t>(first),
                            p.idx.begin() + static_cast<std::ptrdiff_t>(i)},
                           p.normal};
      IndexedPolygon outer{{p.idx.begin(), p.idx.begin() + static_cast<std::ptrdiff_t>(first)},
                           p.normal};
      outer.idx.insert(outer.idx.end(), p.idx.begin() + static_cast<std::ptrdiff_t>(i),
                       p.idx.end());
      work.push_back(std::move(inner));
      work.push_back(std::move(outer));
      split = true;
    }
    if (!split) out.push_back(std::move(p));
  }
  return out;
}

/// Misclassified slivers leave holes bounded by a closed chain of open edges.
/// Each simple chain is capped with a triangulated patch.
void fill_small_holes(std::vector<Triangle>& tris, std::vector<bool>& drop,
                      const std::vector<Vec3>& pos, double tol) {
  std::unordered_map<std::uint64_t, int> count;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    if (drop[i]) continue;
    for (int k = 0; k < 3; ++k) ++count[directed_key(tris[i][k], tris[i][(k + 1) % 3])];
  }
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> next;
  for (const auto& [key, c] : count) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (c != 1 || count.count(directed_key(b, a))) continue;
    next[a].push_back(b);
  }
  if (next.empty()) return;
  std::vector<std::uint32_t> starts;
  for (const auto& [a, list] : next) starts.push_back(a);
  std::sort(starts.begin(), starts.end());

  std::unordered_map<std::uint32_t, bool> used;
  for (auto start : starts) {
    if (used[start] || next[start].size() != 1) continue;
    std::vector<std::uint32_t> loop;
    std::uint32_t v = start;
    bool closed = false;
    while (loop.size() <= next.size()) {
      auto it = next.find(v);
      if (it == next.end() || it->second.size() != 1 || used[v]) break;
      loop.push_back(v);
      used[v] = true;
      v = it->second.front();
      if (v == start) {
        closed = true;
        break;
      }
    }
    if (!closed || loop.size() < 3) continue;
    std::reverse(loop.begin(), loop.end());
    IndexedPolygon patch{loop, Vec3::Zero()};
    for (std::size_t i = 0; i < loop.size(); ++i) {
      patch.normal += pos[loop[i]].cross(pos[loop[(i + 1) % loop.size()]]);
    }
    if (!(patch.normal.norm() > 0.0)) continue;
    patch.normal.normalize();
    const auto before = tris.size();
    triangulate(patch, pos, tol, tris);
    drop.resize(tris.size(), false);
    if (tris.size() - before != loop.size() - 2) {
      tris.resize(before);
      drop.resize(before);
    }
  }
}

Mesh polygons_to_mesh(const std::vector<Polygon>& polys, double eps) {
  const double tol = eps;
  VertexWelder welder(tol);
  std::vector<IndexedPolygon> indexed;
  indexed.reserve(polys.size());
  for (const auto& p : polys) {
    IndexedPolygon ip;
    ip.normal = p.plane.normal;
    for (const auto& v : p.vertices) {
      const auto idx = welder.index_of(v);
      if (!ip.idx.empty() && ip.idx.back() == idx) continue;
      ip.idx.push_back(idx);
    }
    while (ip.idx.size() > 1 && ip.idx.front() == ip.idx.back()) ip.idx.pop_back();
    if (ip.idx.size() >= 3) indexed.push_back(std::move(ip));
  }
  const auto& pos = welder.positions();
  for (int pass = 0; pass < 4; ++pass) {
    if (!repair_t_junctions(indexed, pos, tol)) break;
  }

  std::vector<Triangle> tris;
  for (auto& ip : indexed) {
    for (const auto& loop : split_pinched(std::move(ip))) triangulate(loop, pos, tol, tris);
  }

  // Coincident opposite triangles are a zero-thickness sheet; drop both.
  std::map<std::array<std::uint32_t, 3>, std::vector<std::size_t>> by_set;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    auto key = tris[i];
    std::sort(key.begin(), key.end());
    by_set[key].push_back(i);
  }
  std::vector<bool> drop(tris.size(), false);
  auto canonical = [](Triangle t) {
    const auto m = std::min_element(t.begin(), t.end()) - t.begin();
    std::rotate(t.begin(), t.begin() + m, t.end());
    return t;
  };
  for (const auto& [key, list] : by_set) {
    if (list.size() < 2) continue;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (drop[list[i]]) continue;
      const auto ti = canonical(tris[list[i]]);
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        if (drop[list[j]]) continue;
        const auto tj = canonical(tris[list[j]]);
        if (ti[1] == tj[2] && ti[2] == tj[1]) {
          drop[list[i]] = drop[list[j]] = true;
          break;
        }
      }
    }
  }

  fill_small_holes(tris, drop, pos, tol);

  Mesh mesh;
  std::vector<std::int64_t> remap(pos.size(), -1);
  for (std::size_t i = 0; i < tris.size(); ++i) {
    if (drop[i]) continue;
    Triangle t = tris[i];
    for (auto& v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<std::int64_t>(mesh.vertices.size());
        mesh.vertices.push_back(pos[v]);
      }
      v = static_cast<std::uint32_t>(remap[v]);
    }
    mesh.triangles.push_back(t);
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Boolean drivers

Box3 polygons_bounds(const std::vector<Polygon>& polys) {
  Box3 b;
  for (const auto& p : polys) {
    for (const auto& v : p.vertices) b.expand(v);
  }
  return b;
}

std::vector<Polygon> perturbed_polygons(const Mesh& mesh, int attempt, std::size_t operand,
                                        const CsgOptions& opts) {
  if (attempt == 0) return to_polygons(mesh);
  std::mt19937_64 rng(opts.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(attempt)) ^
                      (0xD1B54A32D192ED03ull * (operand + 1)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double magnitude = opts.perturbation * attempt;
  const Vec3 shift(unit(rng) * magnitude, unit(rng) * magnitude, unit(rng) * magnitude);
  const Eigen::AngleAxisd twist(unit(rng) * 1e-5 * attempt,
                                Vec3(unit(rng), unit(rng), unit(rng) + 2.0).normalized());
  const Vec3 pivot = mesh_aabb(mesh).center();
  Mesh moved = mesh;
  for (auto& v : moved.vertices) v = twist * (v - pivot) + pivot + shift;
  return to_polygons(moved);
}

std::vector<Polygon> union_polygons(const std::vector<std::vector<Polygon>>& operands,
                                    const CsgOptions& opts) {
  const double eps = opts.epsilon;
  const auto n = operands.size();
  std::vector<Box3> bounds(n);
  for (std::size_t i = 0; i < n; ++i) bounds[i] = polygons_bounds(operands[i]);

  std::vector<bool> needs_tree(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && bounds[i].overlaps(bounds[j].inflated(eps))) needs_tree[j] = true;
    }
  }
  std::vector<BspTree> trees(n);
  const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (std::int64_t j = 0; j < sn; ++j) {
    if (needs_tree[j]) trees[j] = BspTree(operands[j], eps);
  }

  std::vector<std::vector<Polygon>> kept(n);
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (std::int64_t si = 0; si < sn; ++si) {
    const auto i = static_cast<std::size_t>(si);
    FragmentSet fs(operands[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Box3 region = bounds[j].inflated(eps);
      if (!bounds[i].overlaps(region)) continue;
      // Duplicated coplanar faces survive only from the lower-indexed operand;
      // touching opposite faces are interior to the union.
      const ClipRule rule{true, i < j, false};
      clip(trees[j], fs, fs.live_leaves(region), rule, eps);
    }
    fs.collect(kept[i]);
  }
  std::vector<Polygon> out;
  for (auto& k : kept) {
    std::move(k.begin(), k.end(), std::back_inserter(out));
  }
  return out;
}

Mesh finish(const std::vector<Polygon>& polys, const CsgOptions& opts) {
  return polygons_to_mesh(polys, opts.epsilon);
}

template <typename Attempt>
Mesh with_retries(const CsgOptions& opts, const char* what, Attempt&& attempt) {
  for (int k = 0; k <= opts.max_retries; ++k) {
    Mesh m = attempt(k);
    auto rep = validate_mesh(m);
    if (rep.watertight()) return m;
  }
  throw Error(ErrorCode::robustness, std::string(what) + ": result not watertight after " +
                                         std::to_string(opts.max_retries) +
                                         " perturbation retries");
}

std::uint64_t content_key(const Mesh& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 0x100000001b3ull;
  };
  for (const auto& v : m.vertices) mix(v.data(), sizeof(double) * 3);
  for (const auto& t : m.triangles) mix(t.data(), sizeof(t[0]) * 3);
  return h;
}

void require_watertight(const Mesh& m, const char* what) {
  const auto r = validate_mesh(m);
  if (!r.watertight()) {
    throw Error(ErrorCode::validity, std::string(what) + ": operand is not watertight");
  }
}

Mesh subtract_attempt(const Mesh& a, const Mesh& b, int attempt, const CsgOptions& opts) {
  const double eps = opts.epsilon;
  auto pa = perturbed_polygons(a, 0, 0, opts);
  auto pb = perturbed_polygons(b, attempt, 1, opts);
  const Box3 ba = polygons_bounds(pa);
  const Box3 bb = polygons_bounds(pb);
  if (pb.empty() || pa.empty() || !ba.overlaps(bb.inflated(eps))) return finish(pa, opts);

  const BspTree tree_a(pa, eps);
  const BspTree tree_b(pb, eps);
  std::vector<Polygon> out;

  FragmentSet fa(std::move(pa));
  // Faces of A inside B go; coplanar with the same orientation means B covers
  // that face from the same side, so it goes too.
  clip(tree_b, fa, fa.live_leaves(bb.inflated(eps)), ClipRule{true, false, true}, eps);
  fa.collect(out);

  FragmentSet fb(std::move(pb));
  for (int id : fb.live_leaves_outside(ba.inflated(eps))) fb.remove(id);
  // Faces of B strictly inside A become the cavity walls; coplanar ones are
  // already represented (or cancelled) by A's faces.
  clip(tree_a, fb, fb.live_leaves(ba.inflated(eps)), ClipRule{false, true, true}, eps);
  std::vector<Polygon> cavity;
  fb.collect(cavity);
  for (auto& p : cavity) {
    p.flip();
    out.push_back(std::move(p));
  }
  return finish(out, opts);
}

}  // namespace

std::string_view to_string(Solidity s) { return s == Solidity::solid ? "solid" : "hole"; }

CsgNode CsgNode::make_union(std::vector<CsgNode> children) {
  CsgNode n;
  n.op = Op::union_all;
  n.children = std::move(children);
  return n;
}

CsgNode CsgNode::make_difference(CsgNode solid, CsgNode hole) {
  CsgNode n;
  n.op = Op::difference;
  solid.solidity = Solidity::solid;
  hole.solidity = Solidity::hole;
  n.children.push_back(std::move(solid));
  n.children.push_back(std::move(hole));
  return n;
}

std::size_t CsgNode::leaf_count() const {
  if (op == Op::leaf) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

bool operator==(const CsgNode& a, const CsgNode& b) {
  return a.op == b.op && a.primitive == b.primitive && a.solidity == b.solidity &&
         a.transform == b.transform && a.children == b.children;
}

void check_tree(const CsgTree& tree) {
  switch (tree.op) {
    case CsgNode::Op::leaf:
      if (!tree.children.empty()) throw Error(ErrorCode::semantic, "leaf node with children");
      if ((tree.transform.scale.array() <= 0.0).any()) {
        throw Error(ErrorCode::semantic, "leaf transform has non-positive scale");
      }
      return;
    case CsgNode::Op::union_all:
      if (tree.children.empty()) throw Error(ErrorCode::semantic, "union node without children");
      break;
    case CsgNode::Op::difference:
      if (tree.children.size() != 2 || tree.children[0].solidity != Solidity::solid ||
          tree.children[1].solidity != Solidity::hole) {
        throw Error(ErrorCode::semantic,
                    "difference node needs exactly one solid and one hole subtree");
      }
      break;
  }
  for (const auto& c : tree.children) check_tree(c);
}

Mesh csg_union_all(std::span<const Mesh* const> meshes, const CsgOptions& opts) {
  for (const Mesh* m : meshes) require_watertight(*m, "union");
  std::vector<const Mesh*> live;
  for (const Mesh* m : meshes) {
    if (!m->empty()) live.push_back(m);
  }
  if (live.empty()) return {};
  if (live.size() == 1) return *live.front();
  // Operand order decides which mesh gets perturbed on a retry and which
  // duplicate coplanar face survives; fix it by content so a|b == b|a.
  std::vector<std::pair<std::uint64_t, const Mesh*>> keyed;
  for (const Mesh* m : live) keyed.emplace_back(content_key(*m), m);
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 0; i < live.size(); ++i) live[i] = keyed[i].second;
  return with_retries(opts, "union", [&](int attempt) {
    std::vector<std::vector<Polygon>> ops;
    ops.reserve(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      ops.push_back(perturbed_polygons(*live[i], i == 0 ? 0 : attempt, i, opts));
    }
    return finish(union_polygons(ops, opts), opts);
  });
}

Mesh csg_union(const Mesh& a, const Mesh& b, const CsgOptions& opts) {
  const std::array<const Mesh*, 2> ms = {&a, &b};
  return csg_union_all(ms, opts);
}

Mesh csg_subtract(const Mesh& a, const Mesh& b, const CsgOptions& opts) {
  require_watertight(a, "subtract");
  require_watertight(b, "subtract");
  if (a.empty()) return {};
  if (b.empty()) return a;
  return with_retries(opts, "subtract",
                      [&](int attempt) { return subtract_attempt(a, b, attempt, opts); });
}

Mesh evaluate_tree(const CsgTree& tree, const TessellationSpec& tess, const CsgOptions& opts) {
  Mesh result;
  switch (tree.op) {
    case CsgNode::Op::leaf:
      result = make_primitive(tree.primitive, tess);
      break;
    case CsgNode::Op::union_all: {
      std::vector<Mesh> parts;
      parts.reserve(tree.children.size());
      for (const auto& c : tree.children) parts.push_back(evaluate_tree(c, tess, opts));
      std::vector<const Mesh*> ptrs;
      for (const auto& p : parts) ptrs.push_back(&p);
      result = csg_union_all(ptrs, opts);
      break;
    }
    case CsgNode::Op::difference: {
      check_tree(tree);
      const Mesh solid = evaluate_tree(tree.children[0], tess, opts);
      const Mesh hole = evaluate_tree(tree.children[1], tess, opts);
      result = csg_subtract(solid, hole, opts);
      break;
    }
  }
  if (!tree.transform.is_identity()) result = transform_mesh(result, tree.transform);
  return result;
}

CombineResult combine(std::span<const CombineItem> items, const CsgOptions& opts) {
  std::vector<const CombineItem*> solids;
  std::vector<const CombineItem*> holes;
  for (const auto& it : items) {
    (it.solidity == Solidity::solid ? solids : holes).push_back(&it);
  }
  if (solids.empty()) {
    throw Error(ErrorCode::semantic, "combine needs at least one solid object");
  }

  auto group = [](const std::vector<const CombineItem*>& list, Solidity role) {
    std::vector<const Mesh*> meshes;
    std::vector<CsgNode> trees;
    for (const auto* it : list) {
      meshes.push_back(it->mesh);
      trees.push_back(it->tree);
      trees.back().solidity = role;
    }
    CsgNode node = trees.size() == 1 ? std::move(trees.front()) : CsgNode::make_union(std::move(trees));
    node.solidity = role;
    return std::make_pair(std::move(meshes), std::move(node));
  };

  auto [solid_meshes, solid_tree] = group(solids, Solidity::solid);
  CombineResult result;
  result.mesh = csg_union_all(solid_meshes, opts);
  if (holes.empty()) {
    result.tree = std::move(solid_tree);
  } else {
    auto [hole_meshes, hole_tree] = group(holes, Solidity::hole);
    const Mesh cutter = csg_union_all(hole_meshes, opts);
    result.mesh = csg_subtract(result.mesh, cutter, opts);
    result.tree = CsgNode::make_difference(std::move(solid_tree), std::move(hole_tree));
  }
  if (result.mesh.empty()) {
    throw Error(ErrorCode::empty_result, "combine removed all material");
  }

  const auto* last = *std::max_element(solids.begin(), solids.end(), [](auto* l, auto* r) {
    return l->sequence < r->sequence;
  });
  result.color = last->color;
  return result;
}

}  // namespace craft
