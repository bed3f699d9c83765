#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "craft/fab/clock.hpp"
#include "craft/fab/job.hpp"
#include "craft/fab/printer_gateway.hpp"
#include "craft/fab/slicer.hpp"

namespace craft {

struct FabServiceConfig {
  std::filesystem::path storage_dir = "fab-storage";
  double token_ttl_seconds = 3600.0;
};

/// Slicing and print orchestration behind the HTTP endpoints. Every call is
/// linearizable; errors are craft::Error with codes the server maps to HTTP.
class FabService {
 public:
  FabService(FabServiceConfig config, std::unique_ptr<Slicer> slicer, PrinterGateway& printers,
             const Clock& clock);

  /// Parses and checks the STL, slices it and stores model.stl, model.gcode
  /// and job.state under storage_dir/job-id. Bad input throws before a job
  /// exists; a slicer failure leaves a failed job and throws
  /// ErrorCode::slicer.
  PrintJob slice(std::string_view stl_bytes, const SliceProfile& profile);

  /// Starts printing a sliced job. `build_volume_mm`, when given, must contain
  /// the job's model ([0..W] x [0..D] x [0..H]).
  PrintJob print(const std::string& job_id, const std::string& printer_address,
                 const std::optional<Vec3>& build_volume_mm = std::nullopt);
  PrintJob status(const std::string& job_id);
  PrintJob command(const std::string& job_id, JobCommand command);

  TokenCache& tokens() { return tokens_; }
  std::filesystem::path job_dir(const std::string& job_id) const;
  std::string slicer_name() const { return slicer_->name(); }

 private:
  PrintJob& find(const std::string& job_id);
  void refresh(PrintJob& job);
  void persist(const PrintJob& job) const;
  void fail(PrintJob& job, const std::string& reason);
  std::string new_id();

  FabServiceConfig config_;
  std::unique_ptr<Slicer> slicer_;
  PrinterGateway* printers_;
  const Clock* clock_;
  TokenCache tokens_;
  std::mutex mutex_;
  std::map<std::string, PrintJob> jobs_;
  std::map<std::string, Box3> bounds_;  // model bounds per job (mm)
};

nlohmann::json job_to_json(const PrintJob& job);

}  // namespace craft
