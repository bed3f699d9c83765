#include "craft/fab/printer_gateway.hpp"

#include <cmath>
#include <random>

#include "craft/error.hpp"
#include "craft/fab/slicer.hpp"

namespace craft {

namespace {

std::string random_token() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  return hex64(rng()) + hex64(rng());
}

}  // namespace

std::string MockPrinter::handshake() {
  std::lock_guard lock(mutex_);
  if (opt_.reject_handshake) throw Error(ErrorCode::unavailable, "printer refused access");
  ++handshakes_;
  std::string token = random_token();
  tokens_[token] = true;
  return token;
}

void MockPrinter::check_token(const std::string& token) const {
  if (!tokens_.count(token)) throw Error(ErrorCode::unavailable, "printer rejected the access token");
}

int MockPrinter::layers_done() const {
  double active = active_seconds_;
  if (status_.state == JobState::printing) active += clock_->now() - run_started_;
  const double layers = std::floor(active / opt_.seconds_per_layer + 1e-9);
  return static_cast<int>(std::min<double>(layers, status_.total_layers));
}

void MockPrinter::advance() {
  if (status_.state != JobState::printing) return;
  const int layers = layers_done();
  if (opt_.drop_at_layer && layers >= *opt_.drop_at_layer) {
    status_.current_layer = std::min(*opt_.drop_at_layer, status_.total_layers);
    status_.state = JobState::failed;
    status_.reason = "printer connection dropped";
    busy_ = false;
    return;
  }
  status_.current_layer = layers;
  if (layers >= status_.total_layers) {
    status_.state = JobState::done;
    busy_ = false;
  }
}

void MockPrinter::start(const std::string& token, const std::string& gcode, int layers) {
  std::lock_guard lock(mutex_);
  check_token(token);
  advance();
  if (busy_) throw Error(ErrorCode::state, "printer is busy with another job");
  if (layers <= 0) throw Error(ErrorCode::parameter, "job has no layers");
  ++jobs_;
  gcode_hash_ = fnv1a(gcode);
  status_ = {JobState::printing, 0, layers, {}};
  busy_ = true;
  active_seconds_ = 0.0;
  run_started_ = clock_->now();
}

PrinterStatus MockPrinter::status(const std::string& token) {
  std::lock_guard lock(mutex_);
  check_token(token);
  advance();
  return status_;
}

void MockPrinter::pause(const std::string& token) {
  std::lock_guard lock(mutex_);
  check_token(token);
  advance();
  if (status_.state != JobState::printing) throw Error(ErrorCode::state, "printer is not printing");
  active_seconds_ += clock_->now() - run_started_;
  status_.state = JobState::paused;
}

void MockPrinter::resume(const std::string& token) {
  std::lock_guard lock(mutex_);
  check_token(token);
  if (status_.state != JobState::paused) throw Error(ErrorCode::state, "printer is not paused");
  status_.state = JobState::printing;
  run_started_ = clock_->now();
}

void MockPrinter::stop(const std::string& token) {
  std::lock_guard lock(mutex_);
  check_token(token);
  advance();
  if (status_.state != JobState::printing && status_.state != JobState::paused) {
    throw Error(ErrorCode::state, "printer has no active job");
  }
  if (status_.state == JobState::printing) active_seconds_ += clock_->now() - run_started_;
  status_.state = JobState::aborted;
  busy_ = false;
}

int MockPrinter::handshake_count() const {
  std::lock_guard lock(mutex_);
  return handshakes_;
}

int MockPrinter::jobs_received() const {
  std::lock_guard lock(mutex_);
  return jobs_;
}

std::uint64_t MockPrinter::last_gcode_hash() const {
  std::lock_guard lock(mutex_);
  return gcode_hash_;
}

MockPrinter& MockPrinterFleet::add(const std::string& address,
                                   std::optional<MockPrinterOptions> options) {
  std::lock_guard lock(mutex_);
  auto& slot = printers_[address];
  slot = std::make_unique<MockPrinter>(*clock_, options.value_or(defaults_));
  return *slot;
}

MockPrinter* MockPrinterFleet::find(const std::string& address) {
  std::lock_guard lock(mutex_);
  auto it = printers_.find(address);
  return it == printers_.end() ? nullptr : it->second.get();
}

MockPrinter& MockPrinterFleet::get(const std::string& address) {
  std::lock_guard lock(mutex_);
  auto it = printers_.find(address);
  if (it != printers_.end()) return *it->second;
  if (auto_ && address.rfind("mock://", 0) == 0 && address.size() > 7) {
    auto& slot = printers_[address];
    slot = std::make_unique<MockPrinter>(*clock_, defaults_);
    return *slot;
  }
  throw Error(ErrorCode::unavailable, "printer " + address + " is unreachable");
}

std::string MockPrinterFleet::handshake(const std::string& a) { return get(a).handshake(); }

void MockPrinterFleet::start(const std::string& a, const std::string& token,
                             const std::string& gcode, int layers) {
  get(a).start(token, gcode, layers);
}

PrinterStatus MockPrinterFleet::status(const std::string& a, const std::string& token) {
  return get(a).status(token);
}

void MockPrinterFleet::pause(const std::string& a, const std::string& t) { get(a).pause(t); }
void MockPrinterFleet::resume(const std::string& a, const std::string& t) { get(a).resume(t); }
void MockPrinterFleet::stop(const std::string& a, const std::string& t) { get(a).stop(t); }

std::string TokenCache::get(const std::string& address) {
  std::lock_guard lock(mutex_);
  const double now = clock_->now();
  auto it = tokens_.find(address);
  if (it != tokens_.end() && now < it->second.expires) return it->second.token;
  std::string token = gateway_->handshake(address);
  ++handshakes_;
  tokens_[address] = {token, now + ttl_};
  return token;
}

void TokenCache::expire(const std::string& address) {
  std::lock_guard lock(mutex_);
  tokens_.erase(address);
}

void TokenCache::expire_all() {
  std::lock_guard lock(mutex_);
  tokens_.clear();
}

int TokenCache::handshakes() const {
  std::lock_guard lock(mutex_);
  return handshakes_;
}

}  // namespace craft
