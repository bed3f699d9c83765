#include "craft/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "craft/fab/fabrication.hpp"
#include "craft/fab/printer_gateway.hpp"
#include "craft/fab/server.hpp"
#include "craft/fab/service.hpp"
#include "craft/scene.hpp"
#include "craft/script.hpp"

namespace craft::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::validity:
    case ErrorCode::placement: return kValidationFailure;
    case ErrorCode::unavailable:
    case ErrorCode::slicer: return kNetworkFailure;
    default: return kCommandError;
  }
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
}

bool is_stl_path(const fs::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".stl";
}

std::vector<ObjectId> design_ids(const SceneDocument& scene) {
  std::vector<ObjectId> ids;
  for (const auto& [id, obj] : scene.objects()) {
    if (!obj.on_plate) ids.push_back(id);
  }
  return ids;
}

bool has_plate(const SceneDocument& scene) {
  return scene.printer() && !scene.printer()->placed.empty();
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string script;
  std::string room;
  std::string printers;
  std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  const DesignScript script = DesignScript::parse(read_file(a.script));
  ScriptOptions options;
  if (!a.printers.empty()) options.presets = load_printer_presets(read_file(a.printers));
  SceneDocument scene(a.room.empty() ? default_room() : load_room(read_file(a.room)));
  ScriptRunner runner(scene, options);
  runner.run(script);
  for (const auto& line : runner.log()) out << line << "\n";
  const SceneCounters& c = scene.counters();
  fmt::print(out, "{} object(s), {} block(s), {} vertices\n", scene.objects().size(), c.blocks,
             c.vertices);
  if (!a.out.empty()) {
    write_file(a.out, scene.save());
    fmt::print(out, "saved {}\n", a.out);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// export / validate

struct ExportArgs {
  std::string doc;
  std::string stl;
  bool ascii = false;
  bool plate = false;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const SceneDocument scene = SceneDocument::load(read_file(a.doc));
  const StlFormat format = a.ascii ? StlFormat::ascii : StlFormat::binary;
  std::string bytes;
  if (a.plate) {
    require_printable(scene);
    bytes = export_plate_stl(scene, format);
  } else {
    const auto ids = design_ids(scene);
    bytes = export_objects_stl(scene, ids, format);
  }
  write_file(a.stl, bytes);
  fmt::print(out, "wrote {} ({} bytes)\n", a.stl, bytes.size());
  return kOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const SceneDocument scene = SceneDocument::load(read_file(path));
  bool ok = true;
  for (const auto& [id, obj] : scene.objects()) {
    const ValidationReport r = validate_mesh(obj.mesh());
    const std::string where = obj.on_plate ? " (on plate)" : "";
    if (r.watertight()) {
      fmt::print(out, "object {}{}: watertight, {} triangles, {:.3f} cm^3\n", id, where,
                 obj.mesh().triangles.size(), mesh_volume(obj.mesh()) * 1e6);
    } else {
      ok = false;
      fmt::print(out, "object {}{}: NOT watertight ({} open edges, {} non-manifold edges)\n", id,
                 where, r.boundary_edges, r.non_manifold_edges);
    }
  }
  const SceneCounters c = scene.recount();
  const SceneLimits defaults;
  fmt::print(out, "{} block(s) of {}, {} vertices of {}\n", c.blocks, scene.limits().max_blocks,
             c.vertices, scene.limits().max_vertices);
  const std::size_t block_limit = std::min(defaults.max_blocks, scene.limits().max_blocks);
  const std::size_t vertex_limit = std::min(defaults.max_vertices, scene.limits().max_vertices);
  if (c.blocks > block_limit) {
    fmt::print(out, "warning: {} building blocks exceed the limit of {} building blocks\n",
               c.blocks, block_limit);
  }
  if (c.vertices > vertex_limit) {
    fmt::print(out, "warning: {} vertices exceed the limit of {} vertices\n", c.vertices,
               vertex_limit);
  }
  if (scene.printer()) {
    const BuildVolumeReport report = check_build_volume(scene);
    if (!report.ok()) {
      ok = false;
      fmt::print(out, "build volume: {}\n", report.describe());
    } else {
      fmt::print(out, "build volume: ok ({} object(s) on the plate)\n",
                 scene.printer()->placed.size());
    }
  }
  fmt::print(out, "{}\n", ok ? "valid" : "invalid");
  return ok ? kOk : kValidationFailure;
}

// ---------------------------------------------------------------------------
// print

struct PrintArgs {
  std::string input;
  std::string server;
  std::string printer;
  std::string save;
  bool watch = false;
  double layer_height = 0.2;
  double infill = 20.0;
  bool supports = false;
  double poll_seconds = 0.5;
  double timeout_seconds = 0.0;
};

int cmd_print(PrintArgs a, std::ostream& out, std::ostream& err) {
  std::string bytes;
  std::optional<Vec3> volume;
  if (is_stl_path(a.input)) {
    bytes = read_file(a.input);
    const StlDocument doc = read_stl(bytes);
    if (!validate_mesh(stl_to_mesh(doc)).watertight()) {
      throw Error(ErrorCode::validity, "STL model is not watertight");
    }
  } else {
    const SceneDocument scene = SceneDocument::load(read_file(a.input));
    if (has_plate(scene)) {
      require_printable(scene);
      bytes = export_plate_stl(scene);
      const PrinterTwin& p = *scene.printer();
      volume = Vec3(p.width_mm, p.depth_mm, p.height_mm);
      if (a.server.empty()) a.server = p.server_address;
      if (a.printer.empty()) a.printer = p.printer_address;
    } else {
      bytes = export_objects_stl(scene, design_ids(scene));
    }
    if (a.save.empty() && a.server.empty()) a.save = fs::path(a.input).stem().string() + ".stl";
  }
  if (a.server.empty() && !a.printer.empty()) {
    throw Error(ErrorCode::parameter, "--printer needs --server");
  }
  if (!a.save.empty()) {
    write_file(a.save, bytes);
    fmt::print(out, "saved {}\n", a.save);
  }
  if (a.server.empty()) {
    if (a.save.empty()) fmt::print(out, "no server given; model kept locally at {}\n", a.input);
    return kOk;
  }

  FabClient client(a.server);
  SliceProfile profile{a.layer_height, a.infill, a.supports};
  PrintJob job;
  try {
    job = client.slice(bytes, profile);
    fmt::print(out, "job {} {} ({} layers)\n", job.id, to_string(job.state), job.total_layers);
    if (a.printer.empty()) return kOk;
    job = client.print(job.id, a.printer, volume);
    fmt::print(out, "job {} {} on {} {:.0f}%\n", job.id, to_string(job.state), a.printer,
               job.progress);
    if (!a.watch) return kOk;
    const auto started = std::chrono::steady_clock::now();
    double last_progress = -1.0;
    JobState last_state = job.state;
    while (!is_terminal(job.state)) {
      std::this_thread::sleep_for(std::chrono::duration<double>(a.poll_seconds));
      job = client.status(job.id);
      if (job.progress != last_progress || job.state != last_state) {
        fmt::print(out, "job {} {} {:.0f}% layer {}/{}\n", job.id, to_string(job.state),
                   job.progress, job.current_layer, job.total_layers);
        last_progress = job.progress;
        last_state = job.state;
      }
      const std::chrono::duration<double> waited = std::chrono::steady_clock::now() - started;
      if (a.timeout_seconds > 0.0 && waited.count() > a.timeout_seconds) {
        fmt::print(err, "error: gave up waiting for job {} ({})\n", job.id, to_string(job.state));
        return kNetworkFailure;
      }
    }
  } catch (const Error& e) {
    if (!job.id.empty()) {
      try {
        job = client.status(job.id);
      } catch (const Error&) {
      }
    }
    const std::string state = job.id.empty() ? "" : " (job " + job.id + " " +
                                                        std::string(to_string(job.state)) + ")";
    fmt::print(err, "error: {}{}\n", e.what(), state);
    switch (e.code()) {
      case ErrorCode::parameter:
      case ErrorCode::parse:
      case ErrorCode::io: return kCommandError;
      case ErrorCode::validity:
      case ErrorCode::placement: return kValidationFailure;
      default: return kNetworkFailure;
    }
  }
  if (job.state != JobState::done) {
    fmt::print(err, "error: job {} ended {}{}\n", job.id, to_string(job.state),
               job.reason.empty() ? "" : ": " + job.reason);
    return kNetworkFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// serve

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string storage_dir = "fab-storage";
  std::string slicer = "mock";
  std::string slicer_cmd;
  double token_ttl = 3600.0;
  double seconds_per_layer = 1.0;
};

void add_serve_options(CLI::App& app, ServeArgs& a) {
  app.add_option("--host", a.host, "Interface to bind")->envname("FABSERVER_HOST");
  app.add_option("--port", a.port, "TCP port (0 picks a free one)")
      ->envname("FABSERVER_PORT")
      ->check(CLI::Range(0, 65535));
  app.add_option("--storage-dir", a.storage_dir, "Where job artifacts are stored")
      ->envname("FABSERVER_STORAGE_DIR");
  app.add_option("--slicer", a.slicer, "Slicer adapter")
      ->envname("FABSERVER_SLICER")
      ->check(CLI::IsMember({"mock", "external"}));
  app.add_option("--slicer-cmd", a.slicer_cmd, "Command line of the external slicer")
      ->envname("FABSERVER_SLICER_CMD");
  app.add_option("--token-ttl-seconds", a.token_ttl, "Printer access token lifetime")
      ->envname("FABSERVER_TOKEN_TTL_SECONDS")
      ->check(CLI::PositiveNumber);
  app.add_option("--sim-seconds-per-layer", a.seconds_per_layer,
                 "Simulated printers: seconds per layer")
      ->envname("FABSERVER_SIM_SECONDS_PER_LAYER")
      ->check(CLI::PositiveNumber);
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  std::unique_ptr<Slicer> slicer;
  if (a.slicer == "external") {
    if (a.slicer_cmd.empty()) throw Error(ErrorCode::parameter, "--slicer external needs --slicer-cmd");
    slicer = std::make_unique<ExternalSlicer>(a.slicer_cmd);
  } else {
    slicer = std::make_unique<MockSlicer>();
  }
  SystemClock clock;
  MockPrinterOptions sim;
  sim.seconds_per_layer = a.seconds_per_layer;
  MockPrinterFleet printers(clock, sim);
  FabService service({a.storage_dir, a.token_ttl}, std::move(slicer), printers, clock);
  FabServer server(service);
  const int port = server.start(a.host, a.port);
  fmt::print(out, "fabserver listening on {}:{} (slicer {}, storage {})\n", a.host, port,
             service.slicer_name(), a.storage_dir);
  out.flush();
  g_stop = false;
  auto old_int = std::signal(SIGINT, on_signal);
  auto old_term = std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);
  server.stop();
  fmt::print(out, "fabserver stopped\n");
  return kOk;
}

/// Parses with CLI11 into the given streams; returns an exit code when parsing
/// ends the program (help, bad flags).
std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
                         std::ostream& err) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kCommandError;
  }
  return std::nullopt;
}

template <typename F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const ScriptError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(e.code()) == kValidationFailure ? kValidationFailure : kCommandError;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kCommandError;
  }
}

}  // namespace

int craft_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headless RealityCraft kernel: design scripts, STL export, printing", "craft"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Replay a design script");
  run_cmd->add_option("script", run.script, "Design script")->required();
  run_cmd->add_option("--room", run.room, "Room description (default: built-in room)");
  run_cmd->add_option("--printers", run.printers, "Printer preset file");
  run_cmd->add_option("--out", run.out, "Where to save the resulting document");

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "Export a document to STL");
  export_cmd->add_option("doc", exp.doc, "Scene document")->required();
  export_cmd->add_option("--stl", exp.stl, "Output STL file")->required();
  export_cmd->add_flag("--ascii", exp.ascii, "Write ASCII STL");
  export_cmd->add_flag("--plate", exp.plate, "Export the printer plate in printer coordinates");

  std::string validate_doc;
  auto* validate_cmd = app.add_subcommand("validate", "Check watertightness, limits and placement");
  validate_cmd->add_option("doc", validate_doc, "Scene document")->required();

  PrintArgs pr;
  auto* print_cmd = app.add_subcommand("print", "Save, slice and print a model");
  print_cmd->add_option("input", pr.input, "STL file or scene document")->required();
  print_cmd->add_option("--server", pr.server, "Fab server address host:port");
  print_cmd->add_option("--printer", pr.printer, "Printer address known to the server");
  print_cmd->add_option("--save", pr.save, "Also save the STL locally");
  print_cmd->add_flag("--watch", pr.watch, "Poll until the print ends");
  print_cmd->add_option("--layer-height", pr.layer_height, "Layer height in mm");
  print_cmd->add_option("--infill", pr.infill, "Infill percent");
  print_cmd->add_flag("--supports", pr.supports, "Generate supports");
  print_cmd->add_option("--poll-seconds", pr.poll_seconds, "Status poll interval")
      ->check(CLI::PositiveNumber);
  print_cmd->add_option("--timeout-seconds", pr.timeout_seconds, "Give up watching after this");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the fab server");
  add_serve_options(*serve_cmd, serve);

  if (auto code = parse(app, args, out, err)) return *code;

  return guarded(
      [&]() -> int {
        if (*run_cmd) return cmd_run(run, out);
        if (*export_cmd) return cmd_export(exp, out);
        if (*validate_cmd) return cmd_validate(validate_doc, out);
        if (*print_cmd) return cmd_print(pr, out, err);
        return cmd_serve(serve, out);
      },
      err);
}

int fabserver_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Slicing and print service", "fabserver"};
  ServeArgs serve;
  add_serve_options(app, serve);
  if (auto code = parse(app, args, out, err)) return *code;
  return guarded([&] { return cmd_serve(serve, out); }, err);
}

}  // namespace craft::cli
