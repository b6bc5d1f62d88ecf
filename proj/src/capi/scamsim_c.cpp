#include "scamsim/scamsim.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "scamsim/service/export.hpp"
#include "scamsim/service/headless.hpp"
#include "scamsim/service/http_server.hpp"
#include "scamsim/service/platform.hpp"
#include "scamsim/stats/power.hpp"
#include "scamsim/stats/reliability.hpp"
#include "scamsim/stats/report.hpp"
#include "scamsim/text.hpp"

using scamsim::Error;
using scamsim::ErrorCode;
using scamsim::Json;
namespace svc = scamsim::service;

struct scamsim_platform {
  std::unique_ptr<svc::Platform> impl;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
scamsim_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<scamsim_status>(e.code());
  } catch (const Json::exception& e) {
    g_last_error = e.what();
    return SCAMSIM_PARSE_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SCAMSIM_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SCAMSIM_INTERNAL;
  }
}

Json parse_or_empty(const char* text) {
  if (!text || !*text) return Json::object();
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
}

svc::PlatformConfig make_config(const char* config_json, int use_env) {
  svc::PlatformConfig cfg = svc::config_from_json(parse_or_empty(config_json));
  if (use_env) cfg = svc::config_from_env(cfg);
  return cfg;
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* scamsim_version(void) { return "1.0.0"; }

const char* scamsim_status_name(scamsim_status status) {
  if (status == SCAMSIM_INTERNAL) return "Internal";
  static thread_local std::string name;
  name = std::string(scamsim::error_code_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* scamsim_last_error(void) { return g_last_error.c_str(); }

void scamsim_free(char* text) { std::free(text); }

scamsim_status scamsim_platform_open(const char* config_json, int use_env, scamsim_platform** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<scamsim_platform>();
    handle->impl = std::make_unique<svc::Platform>(make_config(config_json, use_env));
    *out = handle.release();
    return SCAMSIM_OK;
  });
}

void scamsim_platform_close(scamsim_platform* platform) { delete platform; }

scamsim_status scamsim_platform_call(scamsim_platform* platform, const char* method, const char* path,
                                     const char* body_json, const char* bearer, int* http_status, char** out_body) {
  return guarded([&] {
    require(platform, "platform");
    require(method, "method");
    require(path, "path");
    require(http_status, "http_status");
    require(out_body, "out_body");
    svc::Request req;
    req.method = method;
    std::string p = path;
    if (auto q = p.find('?'); q != std::string::npos) {
      for (const auto& pair : scamsim::split(p.substr(q + 1), '&')) {
        if (pair.empty()) continue;
        const auto eq = pair.find('=');
        req.query[percent_decode(pair.substr(0, eq))] =
            eq == std::string::npos ? std::string{} : percent_decode(pair.substr(eq + 1));
      }
      p = p.substr(0, q);
    }
    req.path = p;
    req.body = parse_or_empty(body_json);
    if (bearer) req.bearer = bearer;
    const svc::Response res = platform->impl->handle(req);
    *http_status = res.status;
    *out_body = dup_string(res.raw ? *res.raw : res.body.dump());
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_serve(const char* config_json, int use_env, const char* host, int port,
                             const char* static_dir) {
  return guarded([&] {
    svc::Platform platform(make_config(config_json, use_env));
    svc::ServerOptions opts;
    if (host) opts.host = host;
    opts.port = port;
    if (static_dir) opts.static_dir = static_dir;
    svc::serve(platform, opts);
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_pack_validate(const char* pack_dir, const char* cadence, char** out_json) {
  return guarded([&] {
    require(pack_dir, "pack_dir");
    require(out_json, "out_json");
    const auto c = cadence ? scamsim::cadence_from_string(cadence) : scamsim::QuizCadence::BeforeEachAdvice;
    const auto report = scamsim::pack_validate(pack_dir, c);
    *out_json = dup_string(scamsim::to_json(report).dump(2));
    if (!report.pass) {
      g_last_error = "pack failed validation";
      return SCAMSIM_PACK_INVALID;
    }
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_run_headless(const char* options_json, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    const auto options = svc::headless_options_from_json(parse_or_empty(options_json));
    const auto result = svc::run_headless(options);
    *out_json = dup_string(svc::summarize(result).dump(2));
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_export(const char* store, const char* pack_dir, int include_excluded, const char* format,
                              char** out_text) {
  return guarded([&] {
    require(store, "store");
    require(pack_dir, "pack_dir");
    require(out_text, "out_text");
    const std::string fmt = format ? format : "csv";
    if (fmt != "csv" && fmt != "json") throw Error(ErrorCode::InvalidArgument, "format must be csv or json");
    const auto pack = scamsim::load_pack(pack_dir);
    auto db = svc::open_store(store);
    const auto table = svc::export_table(svc::read_sessions(*db), pack.instruments, include_excluded != 0);
    *out_text = dup_string(fmt == "csv" ? scamsim::stats::to_csv(table) : scamsim::stats::to_json(table).dump(2));
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_analyze(const char* table_csv_path, const char* models_json, int as_text, char** out) {
  return guarded([&] {
    require(table_csv_path, "table_csv_path");
    require(out, "out");
    const auto table = scamsim::stats::read_csv(table_csv_path);
    const auto specs = models_json && *models_json
                           ? scamsim::stats::model_specs_from_json(parse_or_empty(models_json))
                           : scamsim::stats::default_model_specs();
    const auto report = scamsim::stats::analyze(table, specs);
    *out = dup_string(as_text ? scamsim::stats::render_text(report) : scamsim::stats::to_json(report).dump(2));
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_irr(const char* labels_path, const char* codebook_path, char** out_json) {
  return guarded([&] {
    require(labels_path, "labels_path");
    require(out_json, "out_json");
    const auto labels = scamsim::stats::read_labels(labels_path);
    Json out{{"alpha", scamsim::stats::to_json(scamsim::stats::krippendorff_alpha(labels))}};
    if (codebook_path && *codebook_path) {
      const auto codebook = scamsim::stats::load_codebook(codebook_path);
      scamsim::stats::check_labels(labels, codebook);
      out["frequencies"] = scamsim::stats::to_json(scamsim::stats::label_frequencies(labels, codebook));
    }
    *out_json = dup_string(out.dump(2));
    return SCAMSIM_OK;
  });
}

scamsim_status scamsim_power_n_per_group(int k_groups, double cohens_f, double alpha, double power, int* out_n) {
  return guarded([&] {
    require(out_n, "out_n");
    *out_n = scamsim::stats::power_n_per_group(k_groups, cohens_f, alpha, power);
    return SCAMSIM_OK;
  });
}

}  // extern "C"
