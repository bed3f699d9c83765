#include "craft/fab/service.hpp"

#include <fstream>
#include <random>

#include "craft/error.hpp"
#include "craft/fab/stl.hpp"

namespace craft {

using nlohmann::json;

namespace {

void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
}

}  // namespace

json job_to_json(const PrintJob& j) {
  json out = {{"job_id", j.id},
              {"state", to_string(j.state)},
              {"progress", j.progress},
              {"current_layer", j.current_layer},
              {"total_layers", j.total_layers},
              {"printer_address", j.printer_address},
              {"stl_hash", j.stl_hash},
              {"gcode_hash", j.gcode_hash},
              {"profile",
               {{"layer_height_mm", j.layer_height_mm},
                {"infill_percent", j.infill_percent},
                {"supports", j.supports}}}};
  if (!j.reason.empty()) out["reason"] = j.reason;
  return out;
}

FabService::FabService(FabServiceConfig config, std::unique_ptr<Slicer> slicer,
                       PrinterGateway& printers, const Clock& clock)
    : config_(std::move(config)),
      slicer_(std::move(slicer)),
      printers_(&printers),
      clock_(&clock),
      tokens_(printers, clock, config_.token_ttl_seconds) {
  std::filesystem::create_directories(config_.storage_dir);
}

std::filesystem::path FabService::job_dir(const std::string& id) const {
  return config_.storage_dir / id;
}

std::string FabService::new_id() {
  static std::mt19937_64 rng{std::random_device{}()};
  for (;;) {
    std::string id = hex64(rng()).substr(0, 12);
    if (!jobs_.count(id)) return id;
  }
}

void FabService::persist(const PrintJob& job) const {
  write_file(job_dir(job.id) / "job.state", job_to_json(job).dump(2) + "\n");
}

void FabService::fail(PrintJob& job, const std::string& reason) {
  job.move_to(JobState::failed);
  job.reason = reason;
  persist(job);
}

PrintJob& FabService::find(const std::string& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(ErrorCode::not_found, "unknown job " + id);
  return it->second;
}

PrintJob FabService::slice(std::string_view stl_bytes, const SliceProfile& profile) {
  profile.validate();
  StlDocument stl = read_stl(stl_bytes);
  if (stl.facets.empty()) throw Error(ErrorCode::parse, "STL has no triangles");
  const Mesh mesh = stl_to_mesh(stl);
  if (!validate_mesh(mesh).watertight()) {
    throw Error(ErrorCode::validity, "STL model is not watertight");
  }

  std::lock_guard lock(mutex_);
  PrintJob job;
  job.id = new_id();
  job.layer_height_mm = profile.layer_height_mm;
  job.infill_percent = profile.infill_percent;
  job.supports = profile.supports;
  job.stl_hash = hex64(fnv1a(stl_bytes));
  const auto dir = job_dir(job.id);
  std::filesystem::create_directories(dir);
  write_file(dir / "model.stl", stl_bytes);
  persist(job);

  job.move_to(JobState::slicing);
  persist(job);
  try {
    SliceResult r = slicer_->slice(stl, profile, dir);
    write_file(dir / "model.gcode", r.gcode);
    job.gcode_hash = hex64(fnv1a(r.gcode));
    job.total_layers = r.layers;
    job.move_to(JobState::sliced);
    persist(job);
  } catch (const Error& e) {
    fail(job, e.what());
    jobs_.emplace(job.id, job);
    throw Error(ErrorCode::slicer, "job " + job.id + ": slicing failed: " + e.what());
  }
  bounds_.emplace(job.id, mesh_aabb(mesh));
  jobs_.emplace(job.id, job);
  return job;
}

PrintJob FabService::print(const std::string& id, const std::string& address,
                           const std::optional<Vec3>& volume) {
  std::lock_guard lock(mutex_);
  PrintJob& job = find(id);
  if (address.empty()) throw Error(ErrorCode::parameter, "printer address is required");
  if (job.state != JobState::sliced) {
    throw Error(ErrorCode::state, "job " + id + " is " + std::string(to_string(job.state)) +
                                      ", only sliced jobs can be printed");
  }
  if (volume) {
    const Box3& b = bounds_.at(id);
    const double tol = 1e-3;
    for (int a = 0; a < 3; ++a) {
      if (b.min[a] < -tol || b.max[a] > (*volume)[a] + tol) {
        throw Error(ErrorCode::placement, std::string("model lies outside the build volume on ") +
                                              "xyz"[a]);
      }
    }
  }
  job.printer_address = address;
  std::string gcode;
  {
    std::ifstream in(job_dir(id) / "model.gcode", std::ios::binary);
    gcode.assign(std::istreambuf_iterator<char>(in), {});
  }
  try {
    const std::string token = tokens_.get(address);
    printers_->start(address, token, gcode, job.total_layers);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::state) throw;  // printer busy: the job stays sliced
    fail(job, e.what());
    throw Error(ErrorCode::unavailable, "job " + id + ": " + e.what());
  }
  job.move_to(JobState::printing);
  job.progress = 0.0;
  job.current_layer = 0;
  persist(job);
  return job;
}

void FabService::refresh(PrintJob& job) {
  if (job.state != JobState::printing && job.state != JobState::paused) return;
  PrinterStatus st;
  try {
    st = printers_->status(job.printer_address, tokens_.get(job.printer_address));
  } catch (const Error& e) {
    if (job.state == JobState::printing) fail(job, e.what());
    return;
  }
  const int layer = std::max(job.current_layer, st.current_layer);
  job.current_layer = layer;
  job.progress = job.total_layers > 0 ? 100.0 * layer / job.total_layers : 0.0;
  if (st.state != job.state && legal_transition(job.state, st.state)) {
    job.move_to(st.state);
    if (st.state == JobState::done) {
      job.current_layer = job.total_layers;
      job.progress = 100.0;
    }
    if (st.state == JobState::failed) job.reason = st.reason;
  }
  persist(job);
}

PrintJob FabService::status(const std::string& id) {
  std::lock_guard lock(mutex_);
  PrintJob& job = find(id);
  refresh(job);
  return job;
}

PrintJob FabService::command(const std::string& id, JobCommand command) {
  std::lock_guard lock(mutex_);
  PrintJob& job = find(id);
  refresh(job);
  const auto next = apply_command(job.state, command);
  if (!next) {
    throw Error(ErrorCode::state, "cannot " + std::string(to_string(command)) + " job " + id +
                                      " while " + std::string(to_string(job.state)));
  }
  try {
    const std::string token = tokens_.get(job.printer_address);
    switch (command) {
      case JobCommand::pause: printers_->pause(job.printer_address, token); break;
      case JobCommand::continue_: printers_->resume(job.printer_address, token); break;
      case JobCommand::stop: printers_->stop(job.printer_address, token); break;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::state) throw;
    if (job.state == JobState::printing) fail(job, e.what());
    throw Error(ErrorCode::unavailable, "job " + id + ": " + e.what());
  }
  refresh(job);
  if (job.state != *next) job.move_to(*next);
  persist(job);
  return job;
}

}  // namespace craft
