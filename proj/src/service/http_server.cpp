#include "scamsim/service/http_server.hpp"

#include <httplib.h>

#include "scamsim/text.hpp"

namespace scamsim::service {

namespace {

void bridge(Platform& platform, const httplib::Request& in, httplib::Response& out) {
  Request req;
  req.method = in.method;
  req.path = in.path;
  for (const auto& [k, v] : in.params) req.query[k] = v;
  const std::string auth = in.get_header_value("Authorization");
  if (auth.rfind("Bearer ", 0) == 0) req.bearer = trim(auth.substr(7));
  if (!in.body.empty()) {
    try {
      req.body = Json::parse(in.body);
    } catch (const std::exception& e) {
      Json err{{"error", Json{{"code", "ParseError"}, {"status", 400}, {"message", e.what()}}}};
      out.status = 400;
      out.set_content(err.dump(), "application/json");
      return;
    }
  }
  const Response res = platform.handle(req);
  out.status = res.status;
  if (res.raw) {
    out.set_content(*res.raw, res.content_type);
  } else {
    out.set_content(res.body.dump(), res.content_type);
  }
}

}  // namespace

void serve(Platform& platform, const ServerOptions& options) {
  httplib::Server server;
  if (!options.static_dir.empty() && !server.set_mount_point("/", options.static_dir.string())) {
    fail(ErrorCode::IoError, "cannot mount static directory " + options.static_dir.string());
  }
  auto handler = [&platform](const httplib::Request& in, httplib::Response& out) { bridge(platform, in, out); };
  for (const char* prefix : {R"(/health)", R"(/api/.*)", R"(/internal/.*)", R"(/admin/.*)"}) {
    server.Get(prefix, handler);
    server.Post(prefix, handler);
  }
  if (!server.listen(options.host, options.port)) {
    fail(ErrorCode::IoError, "cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
}

}  // namespace scamsim::service
