#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "craft/fab/clock.hpp"
#include "craft/fab/job.hpp"

namespace craft {

struct PrinterStatus {
  JobState state = JobState::sliced;  // printing, paused, done, aborted or failed
  int current_layer = 0;
  int total_layers = 0;
  std::string reason;
};

/// How the fab server talks to printers. Failures to reach a printer or a
/// refused handshake throw ErrorCode::unavailable.
class PrinterGateway {
 public:
  virtual ~PrinterGateway() = default;
  /// Access handshake; returns the token to present on later calls.
  virtual std::string handshake(const std::string& address) = 0;
  virtual void start(const std::string& address, const std::string& token,
                     const std::string& gcode, int layers) = 0;
  virtual PrinterStatus status(const std::string& address, const std::string& token) = 0;
  virtual void pause(const std::string& address, const std::string& token) = 0;
  virtual void resume(const std::string& address, const std::string& token) = 0;
  virtual void stop(const std::string& address, const std::string& token) = 0;
};

struct MockPrinterOptions {
  double seconds_per_layer = 1.0;
  bool reject_handshake = false;
  /// Connection drops once this many layers are done; the job then fails.
  std::optional<int> drop_at_layer;
};

/// Simulated printer: advances one layer per `seconds_per_layer` of the clock
/// while printing.
class MockPrinter {
 public:
  MockPrinter(const Clock& clock, MockPrinterOptions options) : clock_(&clock), opt_(options) {}

  std::string handshake();
  void start(const std::string& token, const std::string& gcode, int layers);
  PrinterStatus status(const std::string& token);
  void pause(const std::string& token);
  void resume(const std::string& token);
  void stop(const std::string& token);

  int handshake_count() const;
  int jobs_received() const;
  std::uint64_t last_gcode_hash() const;
  MockPrinterOptions& options() { return opt_; }

 private:
  void check_token(const std::string& token) const;
  void advance();  // call with mutex_ held
  int layers_done() const;

  const Clock* clock_;
  MockPrinterOptions opt_;
  mutable std::mutex mutex_;
  int handshakes_ = 0;
  int jobs_ = 0;
  std::map<std::string, bool> tokens_;
  std::uint64_t gcode_hash_ = 0;
  PrinterStatus status_;
  bool busy_ = false;
  double active_seconds_ = 0.0;  // printing time before the current run
  double run_started_ = 0.0;
};

/// In-process printers addressed by name. Addresses starting with "mock://"
/// are provisioned on first contact when auto-provisioning is on; anything
/// else unknown is unreachable.
class MockPrinterFleet final : public PrinterGateway {
 public:
  explicit MockPrinterFleet(const Clock& clock, MockPrinterOptions defaults = {},
                            bool auto_provision = true)
      : clock_(&clock), defaults_(defaults), auto_(auto_provision) {}

  MockPrinter& add(const std::string& address, std::optional<MockPrinterOptions> options = {});
  MockPrinter* find(const std::string& address);

  std::string handshake(const std::string& address) override;
  void start(const std::string& address, const std::string& token, const std::string& gcode,
             int layers) override;
  PrinterStatus status(const std::string& address, const std::string& token) override;
  void pause(const std::string& address, const std::string& token) override;
  void resume(const std::string& address, const std::string& token) override;
  void stop(const std::string& address, const std::string& token) override;

 private:
  MockPrinter& get(const std::string& address);

  const Clock* clock_;
  MockPrinterOptions defaults_;
  bool auto_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<MockPrinter>> printers_;
};

/// Printer access tokens, reused until they expire.
class TokenCache {
 public:
  TokenCache(PrinterGateway& gateway, const Clock& clock, double ttl_seconds = 3600.0)
      : gateway_(&gateway), clock_(&clock), ttl_(ttl_seconds) {}

  /// Cached token, or a fresh handshake when missing or expired.
  std::string get(const std::string& address);
  void expire(const std::string& address);
  void expire_all();
  int handshakes() const;
  double ttl() const { return ttl_; }

 private:
  struct Entry {
    std::string token;
    double expires = 0.0;
  };
  PrinterGateway* gateway_;
  const Clock* clock_;
  double ttl_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> tokens_;
  int handshakes_ = 0;
};

}  // namespace craft
