#include "craft/fab/job.hpp"

#include <array>

#include "craft/error.hpp"

namespace craft {

namespace {

constexpr std::array<std::string_view, 8> kStateNames = {
    "queued", "slicing", "sliced", "printing", "paused", "done", "aborted", "failed"};

}  // namespace

std::string_view to_string(JobState s) { return kStateNames[static_cast<std::size_t>(s)]; }

std::optional<JobState> parse_job_state(std::string_view s) {
  for (std::size_t i = 0; i < kStateNames.size(); ++i) {
    if (kStateNames[i] == s) return static_cast<JobState>(i);
  }
  return std::nullopt;
}

bool is_terminal(JobState s) {
  return s == JobState::done || s == JobState::aborted || s == JobState::failed;
}

bool legal_transition(JobState from, JobState to) {
  using S = JobState;
  switch (from) {
    case S::queued: return to == S::slicing;
    case S::slicing: return to == S::sliced || to == S::failed;
    case S::sliced: return to == S::printing || to == S::failed;
    case S::printing:
      return to == S::paused || to == S::done || to == S::aborted || to == S::failed;
    case S::paused: return to == S::printing || to == S::aborted;
    case S::done:
    case S::aborted:
    case S::failed: return false;
  }
  return false;
}

std::string_view to_string(JobCommand c) {
  switch (c) {
    case JobCommand::continue_: return "continue";
    case JobCommand::pause: return "pause";
    case JobCommand::stop: return "stop";
  }
  return "stop";
}

std::optional<JobCommand> parse_job_command(std::string_view s) {
  if (s == "continue") return JobCommand::continue_;
  if (s == "pause") return JobCommand::pause;
  if (s == "stop") return JobCommand::stop;
  return std::nullopt;
}

std::optional<JobState> apply_command(JobState from, JobCommand c) {
  switch (c) {
    case JobCommand::pause:
      if (from == JobState::printing) return JobState::paused;
      break;
    case JobCommand::continue_:
      if (from == JobState::paused) return JobState::printing;
      break;
    case JobCommand::stop:
      if (from == JobState::printing || from == JobState::paused) return JobState::aborted;
      break;
  }
  return std::nullopt;
}

void PrintJob::move_to(JobState next) {
  if (!legal_transition(state, next)) {
    throw Error(ErrorCode::state, "job " + id + ": illegal transition " +
                                      std::string(to_string(state)) + " -> " +
                                      std::string(to_string(next)));
  }
  state = next;
}

}  // namespace craft
