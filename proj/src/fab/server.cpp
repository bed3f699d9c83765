#include "craft/fab/server.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include "../json_util.hpp"

namespace craft {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter:
    case ErrorCode::parse: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::state: return 409;
    case ErrorCode::validity:
    case ErrorCode::placement: return 422;
    case ErrorCode::unavailable: return 502;
    default: return 500;
  }
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  reply(res, http_status(code), {{"error", to_string(code)}, {"message", message}});
}

double query_number(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::parameter, std::string(key) + " must be a number");
}

bool query_bool(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  const std::string v = req.get_param_value(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::parameter, std::string(key) + " must be true or false");
}

template <typename Handler>
httplib::Server::Handler guarded(Handler h) {
  return [h](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      reply_error(res, ErrorCode::io, e.what());
    }
  };
}

}  // namespace

FabServer::FabServer(FabService& service)
    : service_(&service), http_(std::make_unique<httplib::Server>()) {
  routes();
}

FabServer::~FabServer() { stop(); }

void FabServer::routes() {
  http_->Post("/slice", guarded([this](const httplib::Request& req, httplib::Response& res) {
    SliceProfile p;
    p.layer_height_mm = query_number(req, "layer_height", p.layer_height_mm);
    p.infill_percent = query_number(req, "infill", p.infill_percent);
    p.supports = query_bool(req, "supports");
    reply(res, 200, job_to_json(service_->slice(req.body, p)));
  }));
  http_->Post("/print", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = detail::parse_json(req.body, "request");
    const std::string id = detail::text(detail::member(body, "job_id", "request"), "job_id");
    const std::string printer =
        detail::text(detail::member(body, "printer_address", "request"), "printer_address");
    std::optional<Vec3> volume;
    if (body.contains("build_volume_mm")) {
      volume = detail::vec3(body["build_volume_mm"], "build_volume_mm");
    }
    reply(res, 200, job_to_json(service_->print(id, printer, volume)));
  }));
  http_->Get("/print", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("id")) throw Error(ErrorCode::parameter, "missing id");
    reply(res, 200, job_to_json(service_->status(req.get_param_value("id"))));
  }));
  http_->Put("/print", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = detail::parse_json(req.body, "request");
    const std::string id = detail::text(detail::member(body, "id", "request"), "id");
    const std::string name = detail::text(detail::member(body, "command", "request"), "command");
    const auto cmd = parse_job_command(name);
    if (!cmd) throw Error(ErrorCode::parameter, "command must be continue, pause or stop");
    reply(res, 200, job_to_json(service_->command(id, *cmd)));
  }));
}

int FabServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = http_->bind_to_any_port(host);
  } else {
    port_ = http_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port_;
}

void FabServer::run(const std::string& host, int port) {
  if (!http_->bind_to_port(host, port)) {
    throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  }
  port_ = port;
  http_->listen_after_bind();
}

void FabServer::stop() {
  http_->stop();
  if (thread_.joinable()) thread_.join();
}

// ---------------------------------------------------------------------------

PrintJob job_from_json(const json& j) {
  PrintJob job;
  job.id = j.value("job_id", "");
  const auto state = parse_job_state(j.value("state", ""));
  if (!state) throw Error(ErrorCode::parse, "bad job state in server reply");
  job.state = *state;
  job.reason = j.value("reason", "");
  job.progress = j.value("progress", 0.0);
  job.current_layer = j.value("current_layer", 0);
  job.total_layers = j.value("total_layers", 0);
  job.printer_address = j.value("printer_address", "");
  job.stl_hash = j.value("stl_hash", "");
  job.gcode_hash = j.value("gcode_hash", "");
  if (j.contains("profile")) {
    const json& p = j["profile"];
    job.layer_height_mm = p.value("layer_height_mm", 0.2);
    job.infill_percent = p.value("infill_percent", 20.0);
    job.supports = p.value("supports", false);
  }
  return job;
}

namespace {

PrintJob unpack(const httplib::Result& r, const std::string& url) {
  if (!r) {
    throw Error(ErrorCode::unavailable,
                "cannot reach fab server at " + url + ": " + httplib::to_string(r.error()));
  }
  json body;
  try {
    body = json::parse(r->body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse, "fab server sent a non-JSON reply (HTTP " +
                                      std::to_string(r->status) + ")");
  }
  if (r->status != 200) {
    const auto code = parse_error_code(body.value("error", "")).value_or(ErrorCode::io);
    throw Error(code, body.value("message", "HTTP " + std::to_string(r->status)));
  }
  return job_from_json(body);
}

}  // namespace

FabClient::FabClient(std::string address) : url_(std::move(address)) {
  if (url_.find("://") == std::string::npos) url_ = "http://" + url_;
}

PrintJob FabClient::slice(std::string_view stl, const SliceProfile& p) {
  httplib::Client c(url_);
  const httplib::Params params = {{"layer_height", fmt::format("{}", p.layer_height_mm)},
                                  {"infill", fmt::format("{}", p.infill_percent)},
                                  {"supports", p.supports ? "true" : "false"}};
  const std::string path = httplib::append_query_params("/slice", params);
  return unpack(c.Post(path, stl.data(), stl.size(), "application/octet-stream"), url_);
}

PrintJob FabClient::print(const std::string& id, const std::string& printer,
                          const std::optional<Vec3>& volume) {
  httplib::Client c(url_);
  json body = {{"job_id", id}, {"printer_address", printer}};
  if (volume) body["build_volume_mm"] = detail::to_json(*volume);
  return unpack(c.Post("/print", body.dump(), "application/json"), url_);
}

PrintJob FabClient::status(const std::string& id) {
  httplib::Client c(url_);
  return unpack(c.Get("/print", httplib::Params{{"id", id}}, httplib::Headers{}), url_);
}

PrintJob FabClient::command(const std::string& id, JobCommand cmd) {
  httplib::Client c(url_);
  const json body = {{"id", id}, {"command", to_string(cmd)}};
  return unpack(c.Put("/print", body.dump(), "application/json"), url_);
}

}  // namespace craft
