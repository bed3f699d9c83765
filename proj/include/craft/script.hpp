#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "craft/error.hpp"
#include "craft/fab/printer.hpp"
#include "craft/scene.hpp"

namespace craft {

/// One line of a design script: a command word and its literal arguments.
struct ScriptCommand {
  int line = 0;
  std::string name;
  std::vector<std::string> args;
};

/// Line-oriented design script. Blank lines and text after '#' are ignored;
/// arguments with spaces are written in double quotes.
///
///   workspace <label> [face]          pick <ox oy oz> <dx dy dz>
///   grid spacing <m> | offset <m> | occlusion on|off | color <#rrggbb>
///   create <kind>                     select-mode single|multiple
///   select <id|last>...               select-all | deselect-all
///   move <dx dy dz> [snap]            center <x y z>
///   rotate <x|y|z> <degrees> [snap]   scale <+-corner> <dx dy dz> [uniform] [snap]
///   resize <x|y|z> <meters>           solid | hole | color <#rrggbb | r g b>
///   combine | duplicate | delete | undo | redo
///   printer preset <name> | dims <name> <w> <d> <h> | server <addr> | address <addr>
///   drop                              ruler <ax ay az> <bx by bz>
///
/// Lengths are meters in world coordinates (Y up); printer dims are mm.
struct DesignScript {
  std::vector<ScriptCommand> commands;

  /// Throws ScriptError with the offending line for unknown commands or a
  /// wrong argument count.
  static DesignScript parse(std::string_view text);
};

/// Error raised while parsing or replaying a script; keeps the kernel code.
class ScriptError : public Error {
 public:
  ScriptError(int line, const Error& cause);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct ScriptOptions {
  std::vector<PrinterPreset> presets = default_printer_presets();
};

class ScriptRunner {
 public:
  explicit ScriptRunner(SceneDocument& scene, ScriptOptions options = {});

  /// Replays every command; the first failure aborts with its line number.
  void run(const DesignScript& script);
  void execute(const ScriptCommand& command);

  /// Output of informational commands (ruler, drop), one entry per line.
  const std::vector<std::string>& log() const { return log_; }
  /// Most recently created, duplicated or combined object.
  ObjectId last() const { return last_; }

 private:
  ObjectId parse_id(const std::string& token) const;
  void select_only(std::span<const ObjectId> ids);

  SceneDocument* scene_;
  ScriptOptions options_;
  std::vector<std::string> log_;
  ObjectId last_ = 0;
};

}  // namespace craft
