// Acceptance run: one PASS/FAIL line per headline criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "craft/cli.hpp"
#include "craft/error.hpp"
#include "craft/fab/clock.hpp"
#include "craft/fab/fabrication.hpp"
#include "craft/fab/printer_gateway.hpp"
#include "craft/fab/server.hpp"
#include "craft/fab/service.hpp"
#include "craft/fab/slicer.hpp"
#include "craft/fab/stl.hpp"
#include "craft/manipulation.hpp"
#include "craft/scene.hpp"
#include "craft/voxel.hpp"
#include "../support.hpp"

// After Eigen: resolv.h defines _res.
#include <httplib.h>

using namespace craft;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (problems.size() < 5) problems.push_back(what);
    }
  }
};

bool watertight(const Mesh& m) { return validate_mesh(m).watertight(); }

bool on_lattice(double x, double s) { return std::abs(x - s * std::round(x / s)) <= 1e-9; }

// Places objects by a history-free drag, recorded as one command.
void set_transforms(SceneDocument& s, const std::map<ObjectId, Transform>& t) {
  s.begin_drag();
  s.preview_transforms(t);
  s.commit_drag("place");
}

// ---------------------------------------------------------------------------

Outcome csg_oracle_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  int empty = 0;
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto scene = craft::test::random_scene(rng, n);
    const double oracle = voxel_oracle_volume(scene.trees, 128);
    CombineResult r;
    try {
      r = combine(scene.items());
    } catch (const Error& e) {
      // Only acceptable when the oracle agrees nothing is left.
      o.require(e.code() == ErrorCode::empty_result && oracle < 1e-6,
                fmt::format("scene {}: {}", i, e.what()));
      if (e.code() == ErrorCode::empty_result) ++empty;
      continue;
    }
    const double err = craft::test::rel_error(mesh_volume(r.mesh), oracle);
    worst = std::max(worst, err);
    o.require(err <= 0.02, fmt::format("scene {}: volume off by {:.2f}%", i, 100 * err));
    o.require(watertight(r.mesh), fmt::format("scene {}: not watertight", i));
  }
  const double secs = seconds_since(t0);
  o.require(secs <= 300.0, fmt::format("took {:.1f} s", secs));
  o.detail = fmt::format("200 scenes at 128^3, worst rel err {:.3f}% (limit 2%), {} empty, {:.1f} s (limit 300 s)",
                         100 * worst, empty, secs);
  return o;
}

Outcome figure6_corner_hole() {
  Outcome o;
  // Unit cube at the origin, hole sphere of radius 0.4 centred on corner (+,+,+).
  // Analytic removed volume is one octant of the ball: pi r^3 / 6.
  const double analytic = 0.9664896783617088;
  Transform st;
  st.translation = Vec3::Constant(0.5);
  st.scale = Vec3::Constant(0.8);
  const std::vector<CsgTree> trees = {CsgNode::leaf(PrimitiveKind::cube),
                                      CsgNode::leaf(PrimitiveKind::sphere, st, Solidity::hole)};
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  const Mesh ball = transform_mesh(make_primitive(PrimitiveKind::sphere), st);
  const std::vector<CombineItem> items = {{&cube, trees[0], Solidity::solid, {}, 0},
                                          {&ball, trees[1], Solidity::hole, {}, 1}};
  const CombineResult r = combine(items);
  const double v = mesh_volume(r.mesh);
  const double oracle = voxel_oracle_volume(trees, 128);
  const double e_oracle = craft::test::rel_error(v, oracle);
  const double e_analytic = craft::test::rel_error(v, analytic);
  o.require(watertight(r.mesh), "result not watertight");
  o.require(e_oracle <= 0.02, "oracle mismatch");
  o.require(e_analytic <= 0.02, "analytic mismatch");
  o.detail = fmt::format("volume {:.6f}, oracle {:.6f} ({:.3f}%), analytic {:.6f} ({:.3f}%), limit 2%", v,
                         oracle, 100 * e_oracle, analytic, 100 * e_analytic);
  return o;
}

SceneDocument desk_scene() {
  SceneDocument s;
  s.select_workspace(workspace_by_label(s.room(), "table"), 0.01);
  return s;
}

std::vector<ObjectId> create_cubes(SceneDocument& s, int n) {
  std::vector<ObjectId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(s.create_object(PrimitiveKind::cube));
  return ids;
}

ObjectId combine_all(SceneDocument& s) {
  s.set_selection_mode(SelectionMode::multiple);
  s.select_all();
  return s.combine(s.selected_ids());
}

Outcome capacity() {
  Outcome o;
  std::mt19937_64 rng(300);
  std::uniform_real_distribution<double> jitter(-0.002, 0.002);

  // 300 cuboids in a 20 x 15 slab of overlapping blocks on the table top.
  SceneDocument s = desk_scene();
  const auto ids = create_cubes(s, 300);
  o.require(s.counters().blocks == 300 && s.counters().vertices == 2400,
            fmt::format("counters {} blocks / {} vertices", s.counters().blocks, s.counters().vertices));
  const Vec3 base = s.grid()->origin;
  std::map<ObjectId, Transform> placed;
  for (int i = 0; i < 300; ++i) {
    Transform t;
    t.scale = Vec3(0.022 + jitter(rng), 0.02 + 0.01 * (i % 3) + jitter(rng), 0.022 + jitter(rng));
    t.translation = base + Vec3(0.1 + 0.018 * (i % 20), t.scale.y() / 2, -0.1 - 0.018 * (i / 20));
    t.rotation = Quat(Eigen::AngleAxisd(jitter(rng) * 20, Vec3::UnitY()));
    placed.emplace(ids[i], t);
  }
  set_transforms(s, placed);
  const std::string saved = s.save();
  SceneDocument loaded = SceneDocument::load(saved);
  o.require(loaded.save() == saved, "300-block document does not reload byte-stable");
  loaded.set_selection_mode(SelectionMode::multiple);
  loaded.select_all();
  {
    auto drag = DragSession::move(loaded);
    drag.update_move(drag.grab_start() + Vec3(0.013, 0.0, -0.007), SnapMode::snapped);
    drag.commit();
    auto rot = DragSession::rotate(loaded, 1);
    rot.update_rotation(0.3, SnapMode::snapped);
    rot.commit();
  }
  const auto t300 = Clock::now();
  const ObjectId slab = combine_all(loaded);
  const double slab_secs = seconds_since(t300);
  o.require(watertight(loaded.object(slab).mesh()), "300-block combine not watertight");

  // One block more than allowed.
  try {
    s.create_object(PrimitiveKind::cube);
    o.require(false, "301st block accepted");
  } catch (const Error& e) {
    o.require(e.code() == ErrorCode::capacity && std::string(e.what()).find("300") != std::string::npos,
              std::string("unexpected error: ") + e.what());
  }

  // Candy bowl: 8 rings of 32 overlapping tiles, 256 blocks / 2048 vertices.
  SceneDocument bowl = desk_scene();
  const auto tiles = create_cubes(bowl, 256);
  const Vec3 c = bowl.grid()->origin + Vec3(0.6, 0.0, -0.3);
  std::map<ObjectId, Transform> rings;
  for (int k = 0; k < 8; ++k) {
    const double r = 0.05 + 0.007 * k;
    for (int j = 0; j < 32; ++j) {
      const double a = 2 * std::numbers::pi * (j + 0.5 * (k % 2)) / 32;
      Transform t;
      t.scale = Vec3(0.006, 0.014, 2 * r * std::sin(std::numbers::pi / 32) + 0.004);
      t.rotation = Quat(Eigen::AngleAxisd(-a, Vec3::UnitY()));
      t.translation = c + Vec3(r * std::cos(a), 0.007 + 0.012 * k, r * std::sin(a));
      rings.emplace(tiles[k * 32 + j], t);
    }
  }
  set_transforms(bowl, rings);
  o.require(bowl.counters().blocks == 256 && bowl.counters().vertices == 2048, "bowl counters");
  const auto tb = Clock::now();
  const ObjectId combined = combine_all(bowl);
  const double bowl_secs = seconds_since(tb);
  o.require(bowl_secs <= 5.0, fmt::format("bowl combine took {:.2f} s", bowl_secs));
  o.require(watertight(bowl.object(combined).mesh()), "bowl not watertight");

  o.detail = fmt::format("300 cuboids load/move/rotate/combine ok ({:.2f} s), 256-block bowl combine {:.2f} s "
                         "(limit 5 s), block 301 -> capacity error",
                         slab_secs, bowl_secs);
  return o;
}

// ---------------------------------------------------------------------------

SceneDocument gridded(const std::string& label, double spacing) {
  SceneDocument s;
  s.select_workspace(workspace_by_label(s.room(), label), spacing);
  return s;
}

ObjectId place(SceneDocument& s, const Vec3& center, const Vec3& size) {
  const ObjectId id = s.create_object(PrimitiveKind::cube);
  s.select(id);
  set_transforms(s, {{id, Transform{center, Quat::Identity(), size}}});
  return id;
}

Outcome snap_semantics() {
  Outcome o;
  constexpr double kDeg = std::numbers::pi / 180.0;
  const char* labels[] = {"floor", "table", "north wall", "east wall", "ceiling"};
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int moves = 0, rotations = 0, scales = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    const double spacing = std::array{0.01, 0.02, 0.05}[rng() % 3];
    SceneDocument s = gridded(labels[rng() % 5], spacing);
    const WorkspaceGrid& g = *s.grid();
    const Vec3 size(0.03 + 0.1 * std::abs(u(rng)), 0.03 + 0.1 * std::abs(u(rng)), 0.03 + 0.1 * std::abs(u(rng)));
    const Vec3 center = g.to_world(Vec3(0.3 * u(rng), 0.3 * u(rng), 0.1 + 0.1 * std::abs(u(rng))));
    const ObjectId id = place(s, center, size);

    switch (trial % 3) {
      case 0: {
        ++moves;
        auto drag = DragSession::move(s);
        const Box3 before = drag.start_box().box;
        const Vec3 raw(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
        drag.update_move(drag.grab_start() + raw, SnapMode::snapped);
        drag.commit();
        // Designated faces, worked out from the raw motion.
        const Vec3 lo = g.to_grid(before.min + raw), hi = g.to_grid(before.max + raw);
        const Vec3 moved = g.vector_to_grid(raw);
        const Box3 after = manipulation_box(s).box;
        const Vec3 alo = g.to_grid(after.min), ahi = g.to_grid(after.max);
        for (int a = 0; a < 3; ++a) {
          const double rlo = std::min(lo[a], hi[a]), rhi = std::max(lo[a], hi[a]);
          const bool take_lo = a == 2 ? std::abs(rlo) <= std::abs(rhi) : !(moved[a] > 0.0);
          const double face = take_lo ? std::min(alo[a], ahi[a]) : std::max(alo[a], ahi[a]);
          o.require(on_lattice(face, spacing), fmt::format("move {}: axis {} face {:.12f}", trial, a, face));
        }
        break;
      }
      case 1: {
        ++rotations;
        const Quat start = s.object(id).transform.rotation;
        auto drag = DragSession::rotate(s, static_cast<int>(rng() % 3));
        const double applied = drag.update_rotation(std::numbers::pi * u(rng), SnapMode::snapped);
        drag.commit();
        const double steps = applied / (15 * kDeg);
        o.require(std::abs(steps - std::round(steps)) * 15 * kDeg <= 1e-9, "rotation not a 15 degree multiple");
        const double rel = Eigen::AngleAxisd(s.object(id).transform.rotation * start.inverse()).angle();
        const double rsteps = rel / (15 * kDeg);
        o.require(std::abs(rsteps - std::round(rsteps)) * 15 * kDeg <= 1e-9,
                  fmt::format("rotate {}: object turned {:.12f} rad", trial, rel));
        break;
      }
      default: {
        ++scales;
        const int corner = static_cast<int>(rng() % 8);
        auto drag = DragSession::scale(s, corner);
        const Vec3 anchor = drag.anchor();
        const Vec3 start = drag.grab_start();
        // Hand positions whose lattice point stays clear of the anchor.
        Vec3 hand;
        for (int tries = 0;; ++tries) {
          hand = start + Vec3(0.06 * u(rng), 0.06 * u(rng), 0.06 * u(rng));
          const Vec3 snapped = g.snap(hand);
          bool clear = true;
          for (int a = 0; a < 3; ++a) {
            clear = clear && (snapped[a] - anchor[a]) * (start[a] - anchor[a]) > 0 &&
                    std::abs(snapped[a] - anchor[a]) > 2e-3;
          }
          if (clear || tries > 100) break;
        }
        const bool uniform = false;
        drag.update_scale(hand, uniform, SnapMode::snapped);
        drag.commit();
        const Box3 after = manipulation_box(s).box;
        const Vec3 moved_anchor = after.corner(ManipulationBox::opposite_corner(corner));
        o.require((moved_anchor - anchor).cwiseAbs().maxCoeff() <= 1e-9,
                  fmt::format("scale {}: anchor moved {:.3e} m", trial, (moved_anchor - anchor).norm()));
        const Vec3 cg = g.to_grid(after.corner(corner));
        for (int a = 0; a < 3; ++a) {
          o.require(on_lattice(cg[a], spacing), fmt::format("scale {}: corner off lattice on {}", trial, a));
        }
        break;
      }
    }
  }

  // Worked examples.
  {
    SceneDocument s = gridded("floor", 0.02);
    place(s, {1.0, 0.063, 1.0}, Vec3::Constant(0.1));
    auto drag = DragSession::move(s);
    drag.update_move(drag.grab_start(), SnapMode::snapped);
    drag.commit();
    o.require(std::abs(manipulation_box(s).box.min.y() - 0.02) <= 1e-12, "example: bottom 0.013 -> 0.02");
  }
  {
    SceneDocument s = gridded("floor", 0.02);
    place(s, {0.051, 0.05, 1.0}, Vec3::Constant(0.1));
    auto drag = DragSession::move(s);
    drag.update_move(drag.grab_start() + Vec3(0.004, 0, 0), SnapMode::snapped);
    drag.commit();
    const Box3 b = manipulation_box(s).box;
    o.require(std::abs(b.min.x()) <= 1e-12 && std::abs(b.max.x() - 0.10) <= 1e-12,
              "example: u-extent [0.005, 0.105] -> [0, 0.10]");
  }
  {
    SceneDocument s = gridded("floor", 0.02);
    const WorkspaceGrid g = *s.grid();
    place(s, g.origin, Vec3::Constant(0.1));
    auto drag = DragSession::scale(s, 3);
    drag.update_scale(g.to_world({0.031, 0.049, 0.012}), false, SnapMode::snapped);
    drag.commit();
    const Vec3 c = g.to_grid(manipulation_box(s).box.corner(3));
    o.require((c - Vec3(0.04, 0.04, 0.02)).cwiseAbs().maxCoeff() <= 1e-12,
              "example: hand (0.031, 0.049, 0.012) -> corner (0.04, 0.04, 0.02)");
  }
  o.require(std::abs(snap_angle(37 * kDeg, SnapMode::snapped) - 30 * kDeg) <= 1e-12 &&
                std::abs(snap_angle(37.5 * kDeg, SnapMode::snapped) - 45 * kDeg) <= 1e-12,
            "example: 37 -> 30, 37.5 -> 45 degrees");

  o.detail = fmt::format("{} moves, {} rotations, {} scales at 1e-9; worked examples exact", moves, rotations,
                         scales);
  return o;
}

// ---------------------------------------------------------------------------

Outcome stl_correctness() {
  Outcome o;
  const Mesh cube = make_primitive(PrimitiveKind::cube);
  const std::string bytes = write_stl(mesh_to_stl(cube));
  o.require(bytes.size() == 684, fmt::format("unit cube is {} bytes", bytes.size()));

  std::vector<Mesh> meshes = {cube, make_primitive(PrimitiveKind::sphere), make_primitive(PrimitiveKind::cone)};
  std::mt19937_64 rng(677);
  for (int i = 0; i < 5; ++i) {
    const auto s = craft::test::random_scene(rng, 4);
    try {
      meshes.push_back(combine(s.items()).mesh);
    } catch (const Error&) {
    }
  }
  double worst = 0.0;
  for (const Mesh& m : meshes) {
    const StlDocument doc = mesh_to_stl(m);
    const std::string once = write_stl(doc);
    const std::string twice = write_stl(mesh_to_stl(stl_to_mesh(read_stl(once)), "craft", 1.0));
    o.require(once == twice, "export -> import -> export changed bytes");
    const std::string ascii = write_stl(doc, StlFormat::ascii);
    o.require(write_stl(read_stl(ascii)) == once, "ascii reimport differs");
    const double err = craft::test::rel_error(stl_volume(read_stl(once)), 1e9 * mesh_volume(m));
    worst = std::max(worst, err);
  }
  o.require(worst <= 1e-6, fmt::format("volume rel err {:.3e}", worst));
  o.detail = fmt::format("cube {} bytes, {} meshes byte-identical on reexport, worst volume rel err {:.2e} "
                         "(limit 1e-6)",
                         bytes.size(), meshes.size(), worst);
  return o;
}

// ---------------------------------------------------------------------------

std::string cube_mm(double mm, double x0 = 0.0) {
  Transform t;
  t.scale = Vec3::Constant(mm / 1000.0);
  t.translation = Vec3(x0 + mm / 2, mm / 2, mm / 2) / 1000.0;
  return write_stl(mesh_to_stl(transform_mesh(make_primitive(PrimitiveKind::cube), t)));
}

Outcome fabrication_protocol() {
  Outcome o;
  const auto t0 = Clock::now();
  ManualClock clock;
  MockPrinterFleet printers(clock);
  MockPrinterOptions grumpy;
  grumpy.reject_handshake = true;
  printers.add("mock://grumpy", grumpy);
  FabService service({craft::test::scratch_dir("acceptance-fab"), 3600.0}, std::make_unique<MockSlicer>(),
                     printers, clock);
  FabServer server(service);
  const int port = server.start();
  httplib::Client raw("127.0.0.1", port);
  FabClient client("127.0.0.1:" + std::to_string(port));
  const std::string stl = cube_mm(10);

  auto post_print = [&](const std::string& id, const std::string& printer,
                        std::optional<std::array<double, 3>> vol = std::nullopt) {
    nlohmann::json body = {{"job_id", id}, {"printer_address", printer}};
    if (vol) body["build_volume_mm"] = *vol;
    auto r = raw.Post("/print", body.dump(), "application/json");
    return r ? r->status : -1;
  };
  auto put = [&](const std::string& id, JobCommand c) {
    auto r = raw.Put("/print", nlohmann::json{{"id", id}, {"command", to_string(c)}}.dump(), "application/json");
    return r ? r->status : -1;
  };

  // 10 mm cube at 0.2 mm.
  const PrintJob first = client.slice(stl, {0.2, 20, false});
  o.require(first.total_layers == 50 && first.state == JobState::sliced,
            fmt::format("10 mm cube sliced into {} layers", first.total_layers));

  // Transition table over every reachable state and command.
  // A fresh printer per cell: printing and paused jobs keep theirs busy.
  int cell = 0;
  auto job_in = [&](JobState want) {
    const PrintJob j = client.slice(stl);
    const std::string printer = fmt::format("mock://cell{}", cell++);
    switch (want) {
      case JobState::sliced: break;
      case JobState::printing: client.print(j.id, printer); break;
      case JobState::paused:
        client.print(j.id, printer);
        client.command(j.id, JobCommand::pause);
        break;
      case JobState::done:
        client.print(j.id, printer);
        clock.advance(60);
        break;
      case JobState::aborted:
        client.print(j.id, printer);
        client.command(j.id, JobCommand::stop);
        break;
      case JobState::failed: post_print(j.id, "mock://grumpy"); break;
      default: break;
    }
    o.require(client.status(j.id).state == want, fmt::format("could not reach {}", to_string(want)));
    return j.id;
  };
  int table_cells = 0;
  for (JobState s : {JobState::sliced, JobState::printing, JobState::paused, JobState::done, JobState::aborted,
                     JobState::failed}) {
    for (JobCommand c : {JobCommand::continue_, JobCommand::pause, JobCommand::stop}) {
      const std::string id = job_in(s);
      const auto next = apply_command(s, c);
      const int status = put(id, c);
      const JobState now = client.status(id).state;
      o.require(next ? status == 200 && now == *next : status == 409 && now == s,
                fmt::format("{} + {} gave HTTP {} and {}", to_string(s), to_string(c), status, to_string(now)));
      ++table_cells;
    }
  }
  for (JobState s : {JobState::queued, JobState::slicing}) {
    for (JobCommand c : {JobCommand::continue_, JobCommand::pause, JobCommand::stop}) {
      o.require(!apply_command(s, c), "command accepted before slicing finished");
      ++table_cells;
    }
  }

  // Tokens: one handshake for three jobs on one printer within the TTL.
  for (int i = 0; i < 3; ++i) {
    const PrintJob j = client.slice(stl);
    client.print(j.id, "mock://tokens");
    clock.advance(60);
    o.require(client.status(j.id).state == JobState::done, "token job did not finish");
  }
  const int handshakes = printers.find("mock://tokens")->handshake_count();
  o.require(handshakes == 1, fmt::format("{} handshakes for 3 jobs", handshakes));

  // Two printers at once.
  const PrintJob a = client.slice(cube_mm(10));
  const PrintJob b = client.slice(cube_mm(14));
  std::thread ta([&] { FabClient("127.0.0.1:" + std::to_string(port)).print(a.id, "mock://left"); });
  std::thread tb([&] { FabClient("127.0.0.1:" + std::to_string(port)).print(b.id, "mock://right"); });
  ta.join();
  tb.join();
  const bool both_printing = client.status(a.id).state == JobState::printing &&
                             client.status(b.id).state == JobState::printing;
  clock.advance(100);
  o.require(both_printing && client.status(a.id).state == JobState::done &&
                client.status(b.id).state == JobState::done,
            "concurrent jobs did not both print");
  o.require(hex64(printers.find("mock://left")->last_gcode_hash()) == a.gcode_hash &&
                hex64(printers.find("mock://right")->last_gcode_hash()) == b.gcode_hash && a.gcode_hash != b.gcode_hash,
            "G-code crossed between printers");

  // Build volume.
  const PrintJob big = client.slice(cube_mm(10, 215));
  const int blocked = post_print(big.id, "mock://table", std::array{220.0, 220.0, 250.0});
  o.require(blocked == 422 && client.status(big.id).state == JobState::sliced,
            fmt::format("out-of-volume print gave HTTP {}", blocked));

  server.stop();
  const double secs = seconds_since(t0);
  o.require(secs <= 30.0, fmt::format("took {:.1f} s", secs));
  o.detail = fmt::format("50 layers, {} table cells, {} handshake(s) for 3 jobs, hashes not crossed, volume "
                         "violation -> 422, {:.2f} s wall (limit 30 s)",
                         table_cells, handshakes, secs);
  return o;
}

// ---------------------------------------------------------------------------

void check_invariants(const SceneDocument& s, Outcome& o, int step) {
  const SceneCounters c = s.recount();
  o.require(c == s.counters(), fmt::format("step {}: counters drifted", step));
  o.require(c.blocks <= s.limits().max_blocks && c.vertices <= s.limits().max_vertices,
            fmt::format("step {}: over the limits", step));
  for (const auto& [id, obj] : s.objects()) {
    o.require(id == obj.id && id < s.next_id(), fmt::format("step {}: bad id {}", step, id));
    o.require(watertight(obj.mesh()), fmt::format("step {}: object {} not watertight", step, id));
  }
  for (ObjectId id : s.selection()) o.require(s.contains(id), fmt::format("step {}: stale selection", step));
}

Outcome undo_fuzz() {
  Outcome o;
  SceneDocument s;
  const std::string empty = s.save();
  s.select_workspace(workspace_by_label(s.room(), "table"), 0.01);
  s.set_selection_mode(SelectionMode::multiple);
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  // Saved documents along the history, newest last; `at` mirrors the cursor.
  // Picking the workspace is itself undoable.
  std::deque<std::string> snaps = {empty, s.save()};
  std::size_t at = 1;
  int undos = 0, redos = 0, failures = 0;

  auto random_subset = [&]() {
    std::vector<ObjectId> ids;
    for (const auto& [id, obj] : s.objects()) {
      if (rng() % 2) ids.push_back(id);
    }
    if (ids.empty() && !s.objects().empty()) ids.push_back(s.objects().begin()->first);
    return ids;
  };

  for (int step = 0; step < 1000; ++step) {
    const int op = static_cast<int>(rng() % 10);
    const std::string before = s.save();
    bool recorded = false;
    try {
      if (op == 0 || op == 1) {
        if (s.can_undo()) {
          s.undo();
          --at;
          ++undos;
          o.require(s.save() == snaps[at], fmt::format("step {}: undo did not restore", step));
        }
      } else if (op == 2) {
        if (s.can_redo()) {
          s.redo();
          ++at;
          ++redos;
          o.require(s.save() == snaps[at], fmt::format("step {}: redo did not restore", step));
        }
      } else {
        s.deselect_all();
        for (ObjectId id : random_subset()) s.select(id);
        const auto sel = s.selected_ids();
        bool record = true;
        switch (op) {
          case 3: s.create_object(kAllPrimitiveKinds[rng() % kAllPrimitiveKinds.size()]); break;
          case 4: s.set_solidity(sel, rng() % 2 ? Solidity::hole : Solidity::solid); break;
          case 5: s.duplicate(sel); break;
          case 6: s.remove(sel); break;
          case 7: s.combine(sel); break;
          case 8: {
            auto drag = DragSession::move(s);
            drag.update_move(drag.grab_start() + Vec3(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)),
                             rng() % 2 ? SnapMode::snapped : SnapMode::free);
            if (rng() % 4) {
              drag.commit();
            } else {
              drag.cancel();
              record = false;
            }
            break;
          }
          default: {
            auto drag = DragSession::rotate(s, static_cast<int>(rng() % 3));
            drag.update_rotation(std::numbers::pi * u(rng), SnapMode::snapped);
            drag.commit();
            break;
          }
        }
        recorded = record;
      }
    } catch (const Error& e) {
      ++failures;
      o.require(s.save() == before && !s.drag_active(),
                fmt::format("step {}: failed command ({}) changed the scene", step, e.what()));
    }
    if (recorded) {
      snaps.resize(at + 1);
      snaps.push_back(s.save());
      ++at;
      while (snaps.size() > s.history_depth() + 1) {
        snaps.pop_front();
        --at;
      }
    }
    o.require(s.can_undo() == (at > 0) && s.can_redo() == (at + 1 < snaps.size()),
              fmt::format("step {}: history cursor out of step", step));
    check_invariants(s, o, step);
    const std::string text = s.save();
    o.require(SceneDocument::load(text).save() == text, fmt::format("step {}: save/load not byte-stable", step));
  }
  o.detail = fmt::format("1000 commands ({} undo, {} redo, {} rejected), invariants held, {} objects at end, "
                         "save/load byte-stable",
                         undos, redos, failures, s.objects().size());
  return o;
}

// ---------------------------------------------------------------------------

Outcome cli_designs() {
  Outcome o;
  const fs::path designs = craft::test::designs_dir();
  const fs::path dir = craft::test::scratch_dir("acceptance-cli");
  std::vector<std::string> parts;
  for (const std::string name : {"pen_holder", "ramp", "key_hanger"}) {
    const fs::path doc = dir / (name + ".craft");
    const fs::path stl = dir / (name + ".stl");
    std::ostringstream out, err;
    int code = cli::craft_main({"run", (designs / (name + ".craft")).string(), "--room",
                                (designs / "room.json").string(), "--printers",
                                (designs / "printers.json").string(), "--out", doc.string()},
                               out, err);
    o.require(code == 0, name + " run: " + err.str());
    if (code != 0) continue;
    code = cli::craft_main({"validate", doc.string()}, out, err);
    o.require(code == 0, name + " does not validate");
    code = cli::craft_main({"export", doc.string(), "--stl", stl.string()}, out, err);
    o.require(code == 0, name + " export: " + err.str());

    const StlDocument exported = read_stl(craft::test::slurp(stl));
    o.require(watertight(stl_to_mesh(exported)), name + " STL not watertight");
    const SceneDocument scene = SceneDocument::load(craft::test::slurp(doc));
    std::vector<CsgTree> trees;
    double volume = 0.0;
    for (const auto& [id, obj] : scene.objects()) {
      if (obj.on_plate) continue;
      trees.push_back(obj.world_tree());
      volume += mesh_volume(obj.mesh());
    }
    std::string extra;
    if (name == "pen_holder") {
      const double oracle = voxel_oracle_volume(trees, 128);
      const double e = craft::test::rel_error(volume, oracle);
      o.require(e <= 0.02, fmt::format("pen holder {:.2f}% off the oracle", 100 * e));
      extra = fmt::format(", oracle {:.2f}%", 100 * e);
    }
    parts.push_back(fmt::format("{} {:.1f} cm^3 {} blocks{}", name, volume * 1e6, scene.counters().blocks, extra));
  }
  o.detail = fmt::format("built, validated and exported: {}", fmt::join(parts, "; "));
  return o;
}

}  // namespace

// Optional arguments pick criteria by name.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"csg-oracle-suite", csg_oracle_suite},   {"figure6-corner-hole", figure6_corner_hole},
      {"capacity", capacity},                   {"snap-semantics", snap_semantics},
      {"stl-correctness", stl_correctness},     {"fabrication-protocol", fabrication_protocol},
      {"undo-redo-persistence", undo_fuzz},     {"cli-application-shapes", cli_designs},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.problems.push_back(std::string("exception: ") + e.what());
    }
    std::string line = fmt::format("{} {}: {}", o.pass ? "PASS" : "FAIL", c.name, o.detail);
    if (!o.problems.empty()) line += fmt::format(" [{}]", fmt::join(o.problems, "; "));
    std::cout << line << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
