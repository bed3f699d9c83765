#include <gtest/gtest.h>

#include <functional>
#include <sstream>
#include <thread>

#include "craft/error.hpp"
#include "craft/fab/clock.hpp"
#include "craft/fab/job.hpp"
#include "craft/fab/printer_gateway.hpp"
#include "craft/fab/server.hpp"
#include "craft/fab/service.hpp"
#include "craft/fab/slicer.hpp"
#include "craft/fab/stl.hpp"
#include "support.hpp"

// After Eigen: resolv.h defines _res.
#include <httplib.h>

using namespace craft;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::io;
}

/// Cube of `mm` millimeters standing on z = 0, as STL bytes.
std::string cube_stl(double mm, const Vec3& at_mm = {0, 0, 0}) {
  Transform t;
  t.scale = Vec3::Constant(mm / 1000.0);
  t.translation = (at_mm + Vec3(mm / 2, mm / 2, mm / 2)) / 1000.0;
  const Mesh m = transform_mesh(make_primitive(PrimitiveKind::cube), t);
  return write_stl(mesh_to_stl(m));
}

Mesh mm_sphere(double d) {
  Transform t;
  t.scale = Vec3::Constant(d);
  t.translation = Vec3(0, 0, d / 2);
  return transform_mesh(make_primitive(PrimitiveKind::sphere), t);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class FailingSlicer final : public Slicer {
 public:
  std::string name() const override { return "failing"; }
  SliceResult slice(const StlDocument&, const SliceProfile&, const std::filesystem::path&) override {
    throw Error(ErrorCode::slicer, "boom");
  }
};

struct Rig {
  explicit Rig(const std::string& name, std::unique_ptr<Slicer> slicer = std::make_unique<MockSlicer>())
      : printers(clock),
        service({craft::test::scratch_dir(name), 3600.0}, std::move(slicer), printers, clock) {}

  ManualClock clock;
  MockPrinterFleet printers;
  FabService service;
};

}  // namespace

TEST(Slicer, TenMillimeterCubeHasFiftyLayers) {
  const Mesh cube = stl_to_mesh(read_stl(cube_stl(10)));
  const SliceResult r = mock_slice(cube, {0.2, 20, false});
  EXPECT_EQ(r.layers, 50);
  int layers = 0, g1 = 0;
  for (const auto& l : lines_of(r.gcode)) {
    if (l.rfind(";LAYER:", 0) == 0) ++layers;
    if (l.rfind("G1 ", 0) == 0) ++g1;
  }
  EXPECT_EQ(layers, 50);
  EXPECT_EQ(g1, 200);
  EXPECT_NE(r.gcode.find(";LAYER_COUNT:50\n"), std::string::npos);
  EXPECT_EQ(layer_count(10.0, 0.2), 50);
}

TEST(Slicer, Deterministic) {
  const Mesh cube = stl_to_mesh(read_stl(cube_stl(12)));
  EXPECT_EQ(mock_slice(cube, {}).gcode, mock_slice(cube, {}).gcode);
}

TEST(Slicer, SphereWidthsGrowThenShrink) {
  const double d = 10.0;
  const SliceResult r = mock_slice(mm_sphere(d), {0.5, 20, false});
  std::vector<double> widths;
  double x0 = 0;
  bool first = false;
  for (const auto& l : lines_of(r.gcode)) {
    if (l.rfind("G0 ", 0) == 0) {
      x0 = std::stod(l.substr(l.find('X') + 1));
      first = true;
    } else if (l.rfind("G1 ", 0) == 0 && first) {
      widths.push_back(std::stod(l.substr(l.find('X') + 1)) - x0);
      first = false;
    }
  }
  ASSERT_EQ(widths.size(), 20u);
  const auto peak = std::max_element(widths.begin(), widths.end()) - widths.begin();
  EXPECT_GT(peak, 0);
  EXPECT_LT(peak, 19);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const double z = (i + 0.5) * 0.5 - d / 2;
    const double analytic = 2 * std::sqrt(d * d / 4 - z * z);
    EXPECT_NEAR(widths[i], analytic, 0.05 * d) << "layer " << i;
  }
}

TEST(Slicer, ErrorsAndProfile) {
  EXPECT_EQ(code_of([] { mock_slice(Mesh{}, {}); }), ErrorCode::slicer);
  EXPECT_EQ(code_of([] { SliceProfile{0.01, 20, false}.validate(); }), ErrorCode::parameter);
  EXPECT_EQ(code_of([] { SliceProfile{0.2, 101, false}.validate(); }), ErrorCode::parameter);
  EXPECT_NO_THROW((SliceProfile{0.05, 0, true}.validate()));
}

TEST(Slicer, ExternalCommand) {
  const auto dir = craft::test::scratch_dir("external");
  ExternalSlicer ok("printf ';LAYER_COUNT:7\\n;layer {layer_height}\\n' > {output} && test -s {input}");
  const StlDocument stl = read_stl(cube_stl(5));
  const SliceResult r = ok.slice(stl, {}, dir);
  EXPECT_EQ(r.layers, 7);
  EXPECT_NE(r.gcode.find(";layer 0.200"), std::string::npos);
  ExternalSlicer bad("false");
  EXPECT_EQ(code_of([&] { bad.slice(stl, {}, dir); }), ErrorCode::slicer);
}

TEST(JobState, TransitionTableIsExhaustive) {
  const JobState all[] = {JobState::queued, JobState::slicing, JobState::sliced, JobState::printing,
                          JobState::paused, JobState::done,    JobState::aborted, JobState::failed};
  std::set<std::pair<JobState, JobState>> legal = {
      {JobState::queued, JobState::slicing},   {JobState::slicing, JobState::sliced},
      {JobState::slicing, JobState::failed},   {JobState::sliced, JobState::printing},
      {JobState::sliced, JobState::failed},    {JobState::printing, JobState::paused},
      {JobState::printing, JobState::done},    {JobState::printing, JobState::aborted},
      {JobState::printing, JobState::failed},  {JobState::paused, JobState::printing},
      {JobState::paused, JobState::aborted}};
  for (JobState a : all) {
    for (JobState b : all) {
      EXPECT_EQ(legal_transition(a, b), legal.count({a, b}) == 1) << to_string(a) << "->" << to_string(b);
      PrintJob j;
      j.state = a;
      if (legal.count({a, b})) {
        EXPECT_NO_THROW(j.move_to(b));
      } else {
        EXPECT_EQ(code_of([&] { j.move_to(b); }), ErrorCode::state);
      }
    }
    for (JobCommand c : {JobCommand::continue_, JobCommand::pause, JobCommand::stop}) {
      const auto next = apply_command(a, c);
      std::optional<JobState> want;
      if (c == JobCommand::pause && a == JobState::printing) want = JobState::paused;
      if (c == JobCommand::continue_ && a == JobState::paused) want = JobState::printing;
      if (c == JobCommand::stop && (a == JobState::printing || a == JobState::paused)) want = JobState::aborted;
      EXPECT_EQ(next, want) << to_string(a) << " " << to_string(c);
    }
    EXPECT_EQ(parse_job_state(to_string(a)), a);
  }
}

TEST(MockPrinter, FiftyTicksToDone) {
  ManualClock clock;
  MockPrinter p(clock, {});
  const std::string tok = p.handshake();
  p.start(tok, "G1", 50);
  for (int i = 0; i < 49; ++i) clock.advance(1.0);
  EXPECT_EQ(p.status(tok).state, JobState::printing);
  EXPECT_EQ(p.status(tok).current_layer, 49);
  clock.advance(1.0);
  EXPECT_EQ(p.status(tok).state, JobState::done);
  EXPECT_EQ(code_of([&] { p.status("forged"); }), ErrorCode::unavailable);
}

TEST(Tokens, ReusedUntilExpiry) {
  ManualClock clock;
  MockPrinterFleet fleet(clock);
  TokenCache cache(fleet, clock, 100.0);
  const std::string a = cache.get("mock://a");
  EXPECT_EQ(cache.get("mock://a"), a);
  clock.advance(50);
  EXPECT_EQ(cache.get("mock://a"), a);
  EXPECT_EQ(fleet.find("mock://a")->handshake_count(), 1);
  clock.advance(60);
  cache.get("mock://a");
  EXPECT_EQ(fleet.find("mock://a")->handshake_count(), 2);
  cache.expire("mock://a");
  cache.get("mock://a");
  EXPECT_EQ(fleet.find("mock://a")->handshake_count(), 3);
  EXPECT_EQ(code_of([&] { cache.get("192.168.0.9"); }), ErrorCode::unavailable);
}

TEST(Service, SliceStoresArtifacts) {
  Rig rig("svc-slice");
  const std::string stl = cube_stl(10);
  const PrintJob job = rig.service.slice(stl, {0.2, 20, false});
  EXPECT_EQ(job.state, JobState::sliced);
  EXPECT_EQ(job.total_layers, 50);
  const auto dir = rig.service.job_dir(job.id);
  EXPECT_EQ(craft::test::slurp(dir / "model.stl"), stl);
  EXPECT_EQ(hex64(fnv1a(craft::test::slurp(dir / "model.gcode"))), job.gcode_hash);
  EXPECT_NE(craft::test::slurp(dir / "job.state").find("\"sliced\""), std::string::npos);
  EXPECT_EQ(rig.service.status(job.id).state, JobState::sliced);
}

TEST(Service, SliceRejections) {
  Rig rig("svc-reject");
  EXPECT_EQ(code_of([&] { rig.service.slice(cube_stl(10), {0.01, 20, false}); }), ErrorCode::parameter);
  EXPECT_EQ(code_of([&] { rig.service.slice("garbage", {}); }), ErrorCode::parse);
  StlDocument open = read_stl(cube_stl(10));
  open.facets.pop_back();
  EXPECT_EQ(code_of([&] { rig.service.slice(write_stl(open), {}); }), ErrorCode::validity);
}

TEST(Service, SlicerFailureLeavesFailedJob) {
  Rig rig("svc-fail", std::make_unique<FailingSlicer>());
  EXPECT_EQ(code_of([&] { rig.service.slice(cube_stl(10), {}); }), ErrorCode::slicer);
}

TEST(Service, PrintLifecycle) {
  Rig rig("svc-life");
  const PrintJob sliced = rig.service.slice(cube_stl(10), {});
  EXPECT_EQ(code_of([&] { rig.service.status("missing"); }), ErrorCode::not_found);
  PrintJob j = rig.service.print(sliced.id, "mock://one");
  EXPECT_EQ(j.state, JobState::printing);
  EXPECT_EQ(j.progress, 0.0);
  EXPECT_EQ(code_of([&] { rig.service.print(sliced.id, "mock://one"); }), ErrorCode::state);
  EXPECT_EQ(code_of([&] { rig.service.command(sliced.id, JobCommand::continue_); }), ErrorCode::state);

  rig.clock.advance(10.0);
  j = rig.service.status(sliced.id);
  EXPECT_GT(j.progress, 0.0);
  EXPECT_LT(j.progress, 100.0);

  j = rig.service.command(sliced.id, JobCommand::pause);
  EXPECT_EQ(j.state, JobState::paused);
  const double frozen = j.progress;
  rig.clock.advance(20.0);
  EXPECT_EQ(rig.service.status(sliced.id).progress, frozen);
  j = rig.service.command(sliced.id, JobCommand::continue_);
  EXPECT_EQ(j.state, JobState::printing);
  rig.clock.advance(100.0);
  j = rig.service.status(sliced.id);
  EXPECT_EQ(j.state, JobState::done);
  EXPECT_EQ(j.progress, 100.0);
  EXPECT_EQ(code_of([&] { rig.service.command(sliced.id, JobCommand::continue_); }), ErrorCode::state);
}

TEST(Service, StopAtLayerTen) {
  Rig rig("svc-stop");
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  rig.service.print(job.id, "mock://one");
  rig.clock.advance(10.0);
  const PrintJob stopped = rig.service.command(job.id, JobCommand::stop);
  EXPECT_EQ(stopped.state, JobState::aborted);
  EXPECT_EQ(stopped.current_layer, 10);
  EXPECT_DOUBLE_EQ(stopped.progress, 20.0);
}

TEST(Service, StopWhilePaused) {
  Rig rig("svc-stop-paused");
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  rig.service.print(job.id, "mock://one");
  rig.service.command(job.id, JobCommand::pause);
  EXPECT_EQ(rig.service.command(job.id, JobCommand::stop).state, JobState::aborted);
}

TEST(Service, HandshakeRejectionFailsJob) {
  Rig rig("svc-reject-hs");
  MockPrinterOptions o;
  o.reject_handshake = true;
  rig.printers.add("mock://grumpy", o);
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  EXPECT_EQ(code_of([&] { rig.service.print(job.id, "mock://grumpy"); }), ErrorCode::unavailable);
  EXPECT_EQ(rig.service.status(job.id).state, JobState::failed);
}

TEST(Service, ConnectionDropFailsJob) {
  Rig rig("svc-drop");
  MockPrinterOptions o;
  o.drop_at_layer = 5;
  rig.printers.add("mock://flaky", o);
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  rig.service.print(job.id, "mock://flaky");
  rig.clock.advance(8.0);
  const PrintJob j = rig.service.status(job.id);
  EXPECT_EQ(j.state, JobState::failed);
  EXPECT_FALSE(j.reason.empty());
}

TEST(Service, BuildVolumeViolationBlocksPrint) {
  Rig rig("svc-volume");
  const PrintJob job = rig.service.slice(cube_stl(10, {215, 0, 0}), {});
  EXPECT_EQ(code_of([&] { rig.service.print(job.id, "mock://one", Vec3(220, 220, 250)); }), ErrorCode::placement);
  EXPECT_EQ(rig.service.status(job.id).state, JobState::sliced);
  EXPECT_EQ(rig.service.print(job.id, "mock://one", Vec3(240, 220, 250)).state, JobState::printing);
}

TEST(Service, OneHandshakePerPrinterAcrossJobs) {
  Rig rig("svc-tokens");
  for (int i = 0; i < 3; ++i) {
    const PrintJob job = rig.service.slice(cube_stl(10), {});
    rig.service.print(job.id, "mock://one");
    rig.clock.advance(60.0);
    EXPECT_EQ(rig.service.status(job.id).state, JobState::done);
  }
  EXPECT_EQ(rig.printers.find("mock://one")->handshake_count(), 1);
  rig.service.tokens().expire_all();
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  rig.service.print(job.id, "mock://one");
  EXPECT_EQ(rig.printers.find("mock://one")->handshake_count(), 2);
}

TEST(Service, TwoPrintersDoNotCrossArtifacts) {
  Rig rig("svc-two");
  const PrintJob a = rig.service.slice(cube_stl(10), {});
  const PrintJob b = rig.service.slice(cube_stl(16), {});
  std::thread ta([&] { rig.service.print(a.id, "mock://a"); });
  std::thread tb([&] { rig.service.print(b.id, "mock://b"); });
  ta.join();
  tb.join();
  rig.clock.advance(200.0);
  EXPECT_EQ(rig.service.status(a.id).state, JobState::done);
  EXPECT_EQ(rig.service.status(b.id).state, JobState::done);
  EXPECT_EQ(hex64(rig.printers.find("mock://a")->last_gcode_hash()), a.gcode_hash);
  EXPECT_EQ(hex64(rig.printers.find("mock://b")->last_gcode_hash()), b.gcode_hash);
  EXPECT_NE(a.gcode_hash, b.gcode_hash);
}

TEST(Service, ProgressIsMonotone) {
  Rig rig("svc-mono");
  const PrintJob job = rig.service.slice(cube_stl(10), {});
  rig.service.print(job.id, "mock://one");
  double last = 0.0;
  for (int i = 0; i < 80; ++i) {
    rig.clock.advance(0.7);
    const double p = rig.service.status(job.id).progress;
    EXPECT_GE(p, last);
    last = p;
  }
  EXPECT_EQ(last, 100.0);
}

TEST(Http, EndpointsAndStatusCodes) {
  ManualClock clock;
  MockPrinterFleet printers(clock);
  FabService service({craft::test::scratch_dir("http"), 3600.0}, std::make_unique<MockSlicer>(), printers, clock);
  FabServer server(service);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client raw("127.0.0.1", port);
  const std::string stl = cube_stl(10);

  auto res = raw.Post("/slice?layer_height=0.2&infill=15", stl, "application/octet-stream");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = nlohmann::json::parse(res->body);
  EXPECT_EQ(body["state"], "sliced");
  EXPECT_EQ(body["total_layers"], 50);
  const std::string id = body["job_id"];

  EXPECT_EQ(raw.Post("/slice?layer_height=0.01", stl, "application/octet-stream")->status, 400);
  EXPECT_EQ(raw.Post("/slice", std::string("junk"), "application/octet-stream")->status, 400);
  StlDocument open = read_stl(stl);
  open.facets.pop_back();
  EXPECT_EQ(raw.Post("/slice", write_stl(open), "application/octet-stream")->status, 422);
  EXPECT_EQ(raw.Get("/print?id=nope")->status, 404);
  EXPECT_EQ(raw.Post("/print", R"({"job_id": "nope", "printer_address": "mock://p"})", "application/json")->status, 404);
  EXPECT_EQ(raw.Post("/print", R"({"job_id": )", "application/json")->status, 400);
  EXPECT_EQ(raw.Put("/print", nlohmann::json{{"id", id}, {"command", "pause"}}.dump(), "application/json")->status, 409);
  EXPECT_EQ(raw.Put("/print", nlohmann::json{{"id", id}, {"command", "explode"}}.dump(), "application/json")->status, 400);

  FabClient client("127.0.0.1:" + std::to_string(port));
  PrintJob j = client.print(id, "mock://p");
  EXPECT_EQ(j.state, JobState::printing);
  EXPECT_EQ(j.progress, 0.0);
  EXPECT_EQ(code_of([&] { client.print(id, "mock://p"); }), ErrorCode::state);
  clock.advance(25.0);
  j = client.status(id);
  EXPECT_DOUBLE_EQ(j.progress, 50.0);
  j = client.command(id, JobCommand::pause);
  EXPECT_EQ(j.state, JobState::paused);
  j = client.command(id, JobCommand::continue_);
  EXPECT_EQ(j.state, JobState::printing);
  clock.advance(25.0);
  EXPECT_EQ(client.status(id).state, JobState::done);

  const PrintJob other = client.slice(stl);
  EXPECT_EQ(code_of([&] { client.print(other.id, "10.1.2.3"); }), ErrorCode::unavailable);
  EXPECT_EQ(client.status(other.id).state, JobState::failed);
  EXPECT_EQ(raw.Post("/print", nlohmann::json{{"job_id", client.slice(stl).id}, {"printer_address", "10.1.2.3"}}.dump(),
                     "application/json")->status, 502);

  server.stop();
  EXPECT_EQ(code_of([&] { client.status(id); }), ErrorCode::unavailable);
}

TEST(Http, StatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::parameter), 400);
  EXPECT_EQ(http_status(ErrorCode::parse), 400);
  EXPECT_EQ(http_status(ErrorCode::validity), 422);
  EXPECT_EQ(http_status(ErrorCode::placement), 422);
  EXPECT_EQ(http_status(ErrorCode::not_found), 404);
  EXPECT_EQ(http_status(ErrorCode::state), 409);
  EXPECT_EQ(http_status(ErrorCode::unavailable), 502);
  EXPECT_EQ(http_status(ErrorCode::slicer), 500);
}
