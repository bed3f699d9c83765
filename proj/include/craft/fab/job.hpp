#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace craft {

enum class JobState { queued, slicing, sliced, printing, paused, done, aborted, failed };

std::string_view to_string(JobState s);
std::optional<JobState> parse_job_state(std::string_view s);
bool is_terminal(JobState s);

/// Legal edges: queued->slicing->{sliced,failed}; sliced->{printing,failed};
/// printing->{paused,done,aborted,failed}; paused->{printing,aborted}.
bool legal_transition(JobState from, JobState to);

enum class JobCommand { continue_, pause, stop };

std::string_view to_string(JobCommand c);
std::optional<JobCommand> parse_job_command(std::string_view s);

/// Target state of `command` from `from`, or none when it is illegal.
std::optional<JobState> apply_command(JobState from, JobCommand command);

struct PrintJob {
  std::string id;
  JobState state = JobState::queued;
  std::string reason;  // set when failed
  double progress = 0.0;
  int current_layer = 0;
  int total_layers = 0;
  std::string printer_address;
  std::string stl_hash;
  std::string gcode_hash;
  double layer_height_mm = 0.2;
  double infill_percent = 20.0;
  bool supports = false;

  /// Throws ErrorCode::state on an illegal edge.
  void move_to(JobState next);
};

}  // namespace craft
