#include "scamsim/service/headless.hpp"

#include <fstream>
#include <random>

#include "scamsim/service/export.hpp"
#include "scamsim/text.hpp"

namespace scamsim::service {

namespace fs = std::filesystem;

std::string_view to_string(AdvicePolicy p) {
  switch (p) {
    case AdvicePolicy::Scripted: return "scripted";
    case AdvicePolicy::Canned: return "canned";
    case AdvicePolicy::Silent: return "silent";
  }
  return "scripted";
}

AdvicePolicy advice_policy_from_string(std::string_view s) {
  if (s == "scripted") return AdvicePolicy::Scripted;
  if (s == "canned") return AdvicePolicy::Canned;
  if (s == "silent") return AdvicePolicy::Silent;
  fail(ErrorCode::InvalidArgument, "unknown advice policy: '" + std::string(s) + "'");
}

namespace {

constexpr Timestamp kEpoch = 1'700'000'000'000;
const std::string kAdminToken = "headless-admin";

ErrorCode code_from_name(const std::string& name) {
  for (int i = 0; i < 100; ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (error_code_name(code) == name) return code;
  }
  return ErrorCode::InvalidArgument;
}

class Driver {
 public:
  Driver(const HeadlessOptions& options, std::shared_ptr<Timestamp> clock)
      : options_(options), clock_(std::move(clock)), rng_(options.seed * 0x9e3779b97f4a7c15ULL + 17) {
    PlatformConfig cfg;
    cfg.pack_dir = options.pack_dir;
    cfg.admin_token = kAdminToken;
    cfg.allocator = AllocatorMode::BalancedBlock;
    cfg.cadence = options.cadence;
    cfg.seed = options.seed;
    cfg.provider = options.provider;
    cfg.remote = options.remote;
    cfg.synchronous = true;
    cfg.allow_duplicate_participants = false;
    cfg.orchestrator = options.orchestrator;
    cfg.clock = [c = clock_] { return *c; };
    platform_ = std::make_unique<Platform>(cfg, options.provider_override);
    advice_ = advice_texts();
  }

  Platform& platform() { return *platform_; }

  std::string run_one(const std::string& participant) {
    Json body{{"participant_id", participant}};
    if (options_.condition) body["condition"] = to_string(*options_.condition);
    const Json created = call("POST", "/api/v1/sessions", body, kAdminToken);
    const std::string id = created.at("session_id").get<std::string>();
    token_ = created.at("token").get<std::string>();
    const std::string base = "/api/v1/sessions/" + id;

    for (int guard = 0; guard < 500; ++guard) {
      const Json view = call("GET", base + "/step", Json::object(), token_);
      const Json& step = view.at("step");
      const StepType type = step_type_from_string(step.at("type").get<std::string>());
      switch (type) {
        case StepType::Done:
          return id;
        case StepType::SurveyPre:
        case StepType::SurveyPost: {
          tick();
          const bool pre = type == StepType::SurveyPre;
          call("POST", base + "/survey",
               Json{{"stage", pre ? "pre" : "post"},
                    {"responses", synthetic_responses(pre ? SurveyPhase::Pre : SurveyPhase::Post)}},
               token_);
          break;
        }
        case StepType::Tutorial:
          for (const auto& v : step.at("videos")) {
            *clock_ += v.at("duration_ms").get<std::int64_t>();
            call("POST", base + "/tutorial/watched", Json{{"video_id", v.at("id")}}, token_);
          }
          tick();
          call("POST", base + "/tutorial", Json{{"responses", synthetic_responses(SurveyPhase::Tutorial)}},
               token_);
          break;
        case StepType::RevealMessage:
        case StepType::FeedbackSummary:
          if (step.at("pending").get<bool>()) {
            fail(ErrorCode::ProviderError, "generation did not complete at step " + step.dump() + ": " +
                                               step.value("error", std::string("no content")));
          }
          tick();
          call("POST", base + "/reveal/ack", Json::object(), token_);
          break;
        case StepType::Quiz:
          answer_quiz(base, step);
          break;
        case StepType::AdviceInput: {
          tick();
          const Phase phase = phase_from_index(step.at("phase").get<int>());
          const int ordinal = step.at("ordinal").get<int>();
          std::string text;
          if (options_.advice_override) {
            text = options_.advice_override(*platform_->load_session(id), phase, ordinal);
          } else {
            text = advice_.at(static_cast<std::size_t>((phase_index(phase) - 1) * 2 + ordinal - 1));
          }
          call("POST", base + "/advice", Json{{"text", text}}, token_);
          break;
        }
      }
    }
    fail(ErrorCode::SessionIncomplete, "session " + id + " did not finish");
  }

 private:
  Json call(const std::string& method, const std::string& path, const Json& body, const std::string& bearer) {
    Request req;
    req.method = method;
    req.path = path;
    req.body = body;
    req.bearer = bearer;
    const Response res = platform_->handle(req);
    if (res.status >= 400) {
      const Json& err = res.body.at("error");
      throw Error(code_from_name(err.at("code").get<std::string>()),
                  method + " " + path + ": " + err.at("message").get<std::string>());
    }
    return res.body;
  }

  void tick() {
    std::uniform_int_distribution<Timestamp> think(800, 6000);
    *clock_ += think(rng_);
  }

  void answer_quiz(const std::string& base, const Json& step) {
    const Json& item = step.at("item");
    const std::string token = item.at("permutation_token").get<std::string>();
    const OptionPermutation perm = permutation_from_token(token);
    const Phase phase = phase_from_index(step.at("phase").get<int>());
    const QuizItem* qi = find_quiz_item(platform_->pack().quiz_bank, phase, step.at("ordinal").get<int>());
    if (!qi) fail(ErrorCode::NoItemForStep, "no quiz item at " + step.dump());
    int correct_pos = 0;
    for (int i = 0; i < 4; ++i) {
      if (perm[static_cast<std::size_t>(i)] == qi->correct_index) correct_pos = i;
    }
    std::vector<int> order;
    if (options_.fumble) {
      for (int i = 0; i < 4; ++i) {
        if (i != correct_pos) order.push_back(i);
      }
    }
    order.push_back(correct_pos);
    for (int pos : order) {
      tick();
      const Json out = call("POST", base + "/quiz", Json{{"choice", pos}, {"permutation_token", token}}, token_);
      if (out.at("correct").get<bool>()) return;
    }
  }

  Json synthetic_responses(SurveyPhase stage) {
    Json out = Json::object();
    for (const auto& def : platform_->pack().instruments) {
      Json answers = Json::object();
      for (const auto& item : def.items) {
        if (stage_of(def, item) != stage) continue;
        switch (item.scale) {
          case Scale::Likert5:
            answers[item.id] = std::uniform_int_distribution<int>(1, 5)(rng_);
            break;
          case Scale::Likert7:
            answers[item.id] = std::uniform_int_distribution<int>(1, 7)(rng_);
            break;
          case Scale::Choice:
            if (!item.correct_option.empty()) {
              answers[item.id] = item.correct_option;
            } else {
              const auto n = static_cast<int>(item.options.size());
              answers[item.id] = item.options.at(
                  static_cast<std::size_t>(std::uniform_int_distribution<int>(0, n - 1)(rng_)));
            }
            break;
          case Scale::FreeText:
            answers[item.id] = "no comment";
            break;
        }
        if (item.justification) answers[item.id + "_why"] = "The request and its urgency decided it.";
      }
      if (!answers.empty()) out[std::string(to_string(def.key))] = answers;
    }
    return out;
  }

  std::vector<std::string> advice_texts() const {
    const PromptPack& pack = platform_->pack();
    std::vector<std::string> out;
    if (options_.policy == AdvicePolicy::Scripted) {
      if (pack.scripted_fixtures.contains("advice")) {
        for (const auto& a : pack.scripted_fixtures.at("advice")) out.push_back(a.get<std::string>());
      } else if (!pack.canned_advice.empty()) {
        out = pack.canned_advice.front().advice;
      }
    } else if (options_.policy == AdvicePolicy::Canned) {
      for (const auto& c : pack.canned_advice) {
        if (options_.canned_theme.empty() || c.theme_id == options_.canned_theme) {
          out = c.advice;
          break;
        }
      }
      if (out.empty()) fail(ErrorCode::InvalidArgument, "no canned advice for theme '" + options_.canned_theme + "'");
    }
    if (options_.policy != AdvicePolicy::Silent && out.size() != 6) {
      fail(ErrorCode::PackInvalid, "advice policy needs six advice texts");
    }
    return out;
  }

  const HeadlessOptions& options_;
  std::shared_ptr<Timestamp> clock_;
  std::mt19937_64 rng_;
  std::unique_ptr<Platform> platform_;
  std::vector<std::string> advice_;
  std::string token_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

HeadlessResult run_headless(const HeadlessOptions& options) {
  if (options.sessions == 0) fail(ErrorCode::InvalidArgument, "at least one session is required");
  if (options.policy == AdvicePolicy::Silent && !options.advice_override &&
      (!options.condition || has_advice(*options.condition))) {
    fail(ErrorCode::InvalidArgument, "the silent policy cannot drive a condition that takes advice");
  }
  auto clock = std::make_shared<Timestamp>(kEpoch);
  Driver driver(options, clock);

  HeadlessResult result;
  for (std::size_t i = 0; i < options.sessions; ++i) {
    const std::string participant = "P" + std::to_string(options.seed) + "-" + std::to_string(i + 1);
    const std::string id = driver.run_one(participant);
    result.sessions.push_back(*driver.platform().load_session(id));
    *clock += 60'000;
  }
  result.table = export_table(result.sessions, driver.platform().pack().instruments, true);

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir / "sessions");
    for (const auto& s : result.sessions) {
      write_file(options.out_dir / "sessions" / (s.id + ".json"), serialize_session(s));
    }
    write_file(options.out_dir / "transcripts.json", export_transcripts(result.sessions).dump(2));
    write_file(options.out_dir / "table.csv", stats::to_csv(result.table));
  }
  return result;
}

HeadlessOptions headless_options_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "headless options must be a JSON object");
  HeadlessOptions o;
  try {
    if (j.contains("pack_dir")) o.pack_dir = j.at("pack_dir").get<std::string>();
    if (j.contains("condition") && !j.at("condition").is_null()) {
      const auto c = j.at("condition").get<std::string>();
      if (c != "random") o.condition = condition_from_string(c);
    }
    if (j.contains("cadence")) o.cadence = cadence_from_string(j.at("cadence").get<std::string>());
    if (j.contains("policy")) o.policy = advice_policy_from_string(j.at("policy").get<std::string>());
    o.canned_theme = j.value("canned_theme", o.canned_theme);
    o.seed = j.value("seed", o.seed);
    o.sessions = j.value("sessions", o.sessions);
    o.fumble = j.value("fumble", o.fumble);
    o.provider = j.value("provider", o.provider);
    if (j.contains("remote")) {
      const Json& r = j.at("remote");
      o.remote.url = r.value("url", o.remote.url);
      o.remote.api_key = r.value("api_key", o.remote.api_key);
      o.remote.model = r.value("model", o.remote.model);
    }
    o.orchestrator.feedback_whole_session = j.value("feedback_whole_session", false);
    if (j.contains("out_dir")) o.out_dir = j.at("out_dir").get<std::string>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("headless options: ") + e.what());
  }
  return o;
}

Json summarize(const HeadlessResult& result) {
  Json sessions = Json::array();
  for (const auto& s : result.sessions) {
    std::size_t attempts = 0;
    for (const auto& q : s.quiz_log) attempts += q.attempts.size();
    sessions.push_back(Json{{"session_id", s.id},
                            {"participant_id", s.participant_id},
                            {"condition", to_string(s.condition)},
                            {"status", to_string(s.status)},
                            {"dialogue_turns", s.transcript.size()},
                            {"advice", s.advice_log.size()},
                            {"quizzes", s.quiz_log.size()},
                            {"quiz_attempts", attempts},
                            {"feedback", s.feedback_log.size()}});
  }
  return Json{{"sessions", sessions}};
}

}  // namespace scamsim::service
