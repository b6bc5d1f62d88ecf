// Command-line front end. Links only the C API.
//
// Exit codes:
//   0  success
//   1  the operation failed (status name and message on stderr)
//   2  usage error
//   3  the pack failed validation

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scamsim/scamsim.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPackInvalid = 3;

int report(scamsim_status status) {
  std::cerr << "error: " << scamsim_status_name(status) << ": " << scamsim_last_error() << "\n";
  return status == SCAMSIM_PACK_INVALID ? kExitPackInvalid : kExitFailed;
}

// Takes ownership of `text`.
void emit(char* text, const std::string& out_path) {
  if (!text) return;
  if (out_path.empty()) {
    std::cout << text;
    if (*text && text[std::strlen(text) - 1] != '\n') std::cout << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    out << text;
  }
  scamsim_free(text);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scam-intervention study platform: sessions, surveys and analysis"};
  app.require_subcommand(1);
  const std::string default_pack = env_or("SCAMSIM_PACK", "packs/default");

  // run
  auto* run = app.add_subcommand("run", "Run headless participant sessions");
  std::string condition = "quiz_advice", policy = "scripted", theme, provider = "scripted", cadence = "before_each_advice";
  std::string run_pack = default_pack, out_dir;
  std::uint64_t seed = 1;
  std::size_t n = 1;
  bool fumble = false, whole_session = false;
  run->add_option("--condition", condition, "control | quiz | advice | quiz_advice | random")->capture_default_str();
  run->add_option("--policy", policy, "scripted | canned | silent")->capture_default_str();
  run->add_option("--theme", theme, "Canned advice theme id");
  run->add_option("--provider", provider, "scripted | remote (remote reads SCAMSIM_PROVIDER_*)")->capture_default_str();
  run->add_option("--cadence", cadence, "before_each_advice | after_each_scammer_message")->capture_default_str();
  run->add_option("--seed", seed, "Seed for ids, allocation and synthetic answers")->capture_default_str();
  run->add_option("--n", n, "Number of sessions")->capture_default_str();
  run->add_option("--pack", run_pack, "Prompt pack directory")->capture_default_str();
  run->add_option("--out", out_dir, "Write sessions, transcripts.json and table.csv here");
  run->add_flag("--fumble", fumble, "Answer every wrong quiz option before the right one");
  run->add_flag("--feedback-whole-session", whole_session, "Feedback sees the whole session");

  // pack-validate
  auto* validate = app.add_subcommand("pack-validate", "Check a prompt pack for completeness");
  std::string validate_pack = default_pack, validate_cadence = "before_each_advice";
  validate->add_option("--pack", validate_pack, "Prompt pack directory")->capture_default_str();
  validate->add_option("--cadence", validate_cadence, "Quiz cadence to validate for")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Export the participant table from a store");
  std::string store, export_pack = default_pack, format = "csv", export_out;
  bool include_excluded = false;
  exp->add_option("--store", store, "Store directory (or file:<dir>)")->required();
  exp->add_option("--pack", export_pack, "Prompt pack directory")->capture_default_str();
  exp->add_option("--format", format, "csv | json")->capture_default_str();
  exp->add_flag("--include-excluded", include_excluded, "Keep rows that failed attention checks");
  exp->add_option("--out", export_out, "Output file (default stdout)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "ANCOVA and rank-based ANCOVA per outcome");
  std::string table, models, analyze_out;
  bool as_text = false;
  analyze->add_option("--table", table, "Participant table CSV")->required();
  analyze->add_option("--models", models, "Model spec JSON file (default: built-in outcomes)");
  analyze->add_flag("--text", as_text, "Plain-text report instead of JSON");
  analyze->add_option("--out", analyze_out, "Output file (default stdout)");

  // irr
  auto* irr = app.add_subcommand("irr", "Krippendorff alpha for advice labels");
  std::string labels, codebook;
  irr->add_option("--labels", labels, "Label JSON file")->required();
  irr->add_option("--codebook", codebook, "Codebook JSON (adds theme and code frequencies)");

  // power
  auto* power = app.add_subcommand("power", "Per-group sample size for a one-way ANOVA");
  int k = 4;
  double f = 0.3, alpha = 0.05, target = 0.8;
  power->add_option("--k", k, "Number of groups")->capture_default_str();
  power->add_option("--f", f, "Cohen's f")->capture_default_str();
  power->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  power->add_option("--power", target, "Target power")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the participant and admin HTTP API");
  std::string config_path, host = "127.0.0.1", static_dir;
  int port = 8080;
  serve->add_option("--config", config_path, "Platform config JSON file; SCAMSIM_* variables override it");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory with a built web client to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      Json opts{{"pack_dir", run_pack}, {"condition", condition}, {"cadence", cadence}, {"policy", policy},
                {"seed", seed},         {"sessions", n},         {"fumble", fumble},   {"provider", provider},
                {"feedback_whole_session", whole_session}};
      if (!theme.empty()) opts["canned_theme"] = theme;
      if (!out_dir.empty()) opts["out_dir"] = out_dir;
      if (provider == "remote") {
        opts["remote"] = Json{{"url", env_or("SCAMSIM_PROVIDER_URL", "")},
                              {"api_key", env_or("SCAMSIM_PROVIDER_KEY", "")},
                              {"model", env_or("SCAMSIM_PROVIDER_MODEL", "")}};
      }
      char* out = nullptr;
      const auto st = scamsim_run_headless(opts.dump().c_str(), &out);
      if (st != SCAMSIM_OK) return report(st);
      emit(out, "");
      return 0;
    }
    if (*validate) {
      char* out = nullptr;
      const auto st = scamsim_pack_validate(validate_pack.c_str(), validate_cadence.c_str(), &out);
      emit(out, "");
      if (st == SCAMSIM_PACK_INVALID) return kExitPackInvalid;
      if (st != SCAMSIM_OK) return report(st);
      return 0;
    }
    if (*exp) {
      char* out = nullptr;
      const auto st = scamsim_export(store.c_str(), export_pack.c_str(), include_excluded ? 1 : 0, format.c_str(), &out);
      if (st != SCAMSIM_OK) return report(st);
      emit(out, export_out);
      return 0;
    }
    if (*analyze) {
      const std::string spec = models.empty() ? std::string{} : read_file(models);
      char* out = nullptr;
      const auto st = scamsim_analyze(table.c_str(), models.empty() ? nullptr : spec.c_str(), as_text ? 1 : 0, &out);
      if (st != SCAMSIM_OK) return report(st);
      emit(out, analyze_out);
      return 0;
    }
    if (*irr) {
      char* out = nullptr;
      const auto st = scamsim_irr(labels.c_str(), codebook.empty() ? nullptr : codebook.c_str(), &out);
      if (st != SCAMSIM_OK) return report(st);
      emit(out, "");
      return 0;
    }
    if (*power) {
      int n_per_group = 0;
      const auto st = scamsim_power_n_per_group(k, f, alpha, target, &n_per_group);
      if (st != SCAMSIM_OK) return report(st);
      std::cout << Json{{"k", k}, {"f", f}, {"alpha", alpha}, {"power", target}, {"n_per_group", n_per_group},
                        {"total", n_per_group * k}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*serve) {
      const std::string config = config_path.empty() ? std::string("{}") : read_file(config_path);
      std::cerr << "listening on " << host << ":" << port << "\n";
      const auto st = scamsim_serve(config.c_str(), 1, host.c_str(), port, static_dir.empty() ? nullptr : static_dir.c_str());
      if (st != SCAMSIM_OK) return report(st);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
