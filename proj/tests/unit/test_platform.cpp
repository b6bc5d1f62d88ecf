#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <thread>
#include <unistd.h>

#include "helpers.hpp"
#include "scamsim/service/export.hpp"
#include "scamsim/service/platform.hpp"
#include "scamsim/service/store.hpp"
#include "scamsim/text.hpp"

using namespace scamsim;
using namespace scamsim::service;
namespace fs = std::filesystem;

namespace {

const std::string kAdmin = "admin-secret";

struct Harness {
  std::shared_ptr<Timestamp> clock = std::make_shared<Timestamp>(1'700'000'000'000);
  std::unique_ptr<Platform> platform;

  explicit Harness(PlatformConfig cfg = {}, std::shared_ptr<CompletionProvider> provider = nullptr,
                   std::unique_ptr<DocumentStore> store = nullptr) {
    cfg.pack_dir = SCAMSIM_PACK_DIR;
    if (cfg.admin_token.empty()) cfg.admin_token = kAdmin;
    if (!cfg.seed) cfg.seed = 7;
    if (!cfg.clock) cfg.clock = [c = clock] { return *c; };
    platform = std::make_unique<Platform>(cfg, std::move(provider), std::move(store));
  }

  Response call(const std::string& method, const std::string& path, const Json& body = Json::object(),
                const std::string& bearer = {}, std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = method;
    r.path = path;
    r.body = body;
    r.bearer = bearer;
    r.query = std::move(query);
    return platform->handle(r);
  }

  // Creates a session as admin with a forced condition; returns {id, token}.
  std::pair<std::string, std::string> create(const std::string& participant, std::optional<Condition> c) {
    Json body{{"participant_id", participant}};
    if (c) body["condition"] = to_string(*c);
    const auto r = call("POST", "/api/v1/sessions", body, kAdmin);
    REQUIRE(r.status == 201);
    return {r.body.at("session_id").get<std::string>(), r.body.at("token").get<std::string>()};
  }

  Json step(const std::string& id, const std::string& token, std::map<std::string, std::string> q = {}) {
    const auto r = call("GET", "/api/v1/sessions/" + id + "/step", Json::object(), token, std::move(q));
    REQUIRE(r.status == 200);
    return r.body;
  }

  Json responses(SurveyPhase stage) {
    std::mt19937_64 rng(3);
    return testutil::synthetic_responses(platform->pack().instruments, stage, rng);
  }

  // Moves the session through one step using the participant API.
  std::string advance_one(const std::string& id, const std::string& token, std::vector<Response>* log = nullptr) {
    const std::string base = "/api/v1/sessions/" + id;
    const Json view = step(id, token);
    const Json& st = view.at("step");
    const std::string type = st.at("type").get<std::string>();
    *clock += 1500;
    Response r;
    if (type == "survey_pre" || type == "survey_post") {
      const bool pre = type == "survey_pre";
      r = call("POST", base + "/survey",
               Json{{"stage", pre ? "pre" : "post"}, {"responses", responses(pre ? SurveyPhase::Pre : SurveyPhase::Post)}},
               token);
    } else if (type == "tutorial") {
      *clock += platform->pack().tutorial_min_dwell_ms();
      r = call("POST", base + "/tutorial", Json{{"responses", responses(SurveyPhase::Tutorial)}}, token);
    } else if (type == "reveal" || type == "feedback") {
      r = call("POST", base + "/reveal/ack", Json::object(), token);
    } else if (type == "quiz") {
      const std::string perm = st.at("item").at("permutation_token").get<std::string>();
      const auto order = permutation_from_token(perm);
      const QuizItem* item = find_quiz_item(platform->pack().quiz_bank, phase_from_index(st.at("phase").get<int>()),
                                            st.at("ordinal").get<int>());
      int pos = 0;
      for (int i = 0; i < 4; ++i) {
        if (order[static_cast<std::size_t>(i)] == item->correct_index) pos = i;
      }
      r = call("POST", base + "/quiz", Json{{"choice", pos}, {"permutation_token", perm}}, token);
    } else if (type == "advice") {
      r = call("POST", base + "/advice", Json{{"text", "Call his parents on the number you already have."}}, token);
    } else {
      return type;
    }
    CHECK(r.status < 400);
    if (log) log->push_back(r);
    return type;
  }

  void finish(const std::string& id, const std::string& token, std::vector<Response>* log = nullptr) {
    for (int i = 0; i < 200; ++i) {
      if (advance_one(id, token, log) == "done") return;
    }
    FAIL("session did not finish");
  }

  // Steps until the current step has type `type`.
  Json until(const std::string& id, const std::string& token, const std::string& type) {
    for (int i = 0; i < 200; ++i) {
      const Json v = step(id, token);
      if (v.at("step").at("type") == type) return v;
      advance_one(id, token);
    }
    FAIL("step type never reached");
    return {};
  }
};

std::string error_code(const Response& r) { return r.body.at("error").at("code").get<std::string>(); }

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("scamsim_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("health and routing") {
  Harness h;
  const auto r = h.call("GET", "/health");
  CHECK(r.status == 200);
  CHECK(r.body.at("pack") == "default");
  CHECK(r.body.at("provider") == "scripted");
  CHECK(h.call("GET", "/nope").status == 404);
  CHECK(h.call("DELETE", "/api/v1/sessions/x/step").status == 404);
}

TEST_CASE("balanced allocation gives one session per condition in each block of four") {
  PlatformConfig cfg;
  cfg.allocator = AllocatorMode::BalancedBlock;
  cfg.synchronous = true;
  Harness h(cfg);
  std::set<std::string> seen;
  for (int i = 0; i < 4; ++i) {
    const auto id = h.create("p" + std::to_string(i), std::nullopt).first;
    seen.insert(std::string(to_string(h.platform->load_session(id)->condition)));
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("session creation rules") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto r = h.call("POST", "/api/v1/sessions", Json{{"participant_id", "alice"}});
  CHECK(r.status == 201);
  CHECK_FALSE(r.body.contains("condition"));
  CHECK(r.body.at("view").at("step").at("type") == "survey_pre");

  const auto dup = h.call("POST", "/api/v1/sessions", Json{{"participant_id", "alice"}});
  CHECK(dup.status == 409);
  CHECK(error_code(dup) == "DuplicateParticipant");

  const auto forced = h.call("POST", "/api/v1/sessions", Json{{"participant_id", "bob"}, {"condition", "quiz"}});
  CHECK(forced.status == 401);
  CHECK(error_code(forced) == "Unauthorized");

  CHECK(h.call("POST", "/api/v1/sessions", Json{{"participant_id", "  "}}).status == 400);
  CHECK(h.call("POST", "/api/v1/sessions", Json{{"nope", 1}}).status == 400);

  PlatformConfig dup_ok;
  dup_ok.allow_duplicate_participants = true;
  dup_ok.synchronous = true;
  Harness h2(dup_ok);
  CHECK(h2.call("POST", "/api/v1/sessions", Json{{"participant_id", "a"}}).status == 201);
  CHECK(h2.call("POST", "/api/v1/sessions", Json{{"participant_id", "a"}}).status == 201);
}

TEST_CASE("participant tokens and admin routes") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p1", Condition::Advice);
  CHECK(h.call("GET", "/api/v1/sessions/" + id + "/step", Json::object(), "wrong").status == 401);
  CHECK(h.call("GET", "/api/v1/sessions/" + id + "/step", Json::object(), kAdmin).status == 200);
  CHECK(h.call("GET", "/api/v1/sessions/missing/step", Json::object(), token).status == 404);
  CHECK(h.call("GET", "/admin/v1/sessions", Json::object(), token).status == 401);
  const auto list = h.call("GET", "/admin/v1/sessions", Json::object(), kAdmin);
  CHECK(list.status == 200);
  CHECK(list.body.at("sessions").size() == 1);

  // The token is stored only as a digest.
  const auto admin = h.call("GET", "/admin/v1/sessions/" + id, Json::object(), kAdmin);
  CHECK(admin.status == 200);
  CHECK(admin.body.dump().find(token) == std::string::npos);

  // An empty admin token disables every admin route.
  PlatformConfig no_admin;
  no_admin.synchronous = true;
  no_admin.pack_dir = SCAMSIM_PACK_DIR;
  Platform p(no_admin);
  Request r;
  r.method = "GET";
  r.path = "/admin/v1/sessions";
  r.bearer = "";
  CHECK(p.handle(r).status == 401);
}

TEST_CASE("tutorial dwell") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p1", Condition::Control);
  h.advance_one(id, token);
  const Json view = h.step(id, token);
  REQUIRE(view.at("step").at("type") == "tutorial");
  CHECK(view.at("step").at("min_dwell_ms") == h.platform->pack().tutorial_min_dwell_ms());
  const std::string base = "/api/v1/sessions/" + id;
  const auto early = h.call("POST", base + "/tutorial", Json{{"responses", h.responses(SurveyPhase::Tutorial)}}, token);
  CHECK(early.status == 409);
  CHECK(error_code(early) == "DwellNotMet");
  CHECK(h.call("POST", base + "/tutorial/watched", Json{{"video_id", "nope"}}, token).status == 400);
  CHECK(h.call("POST", base + "/tutorial/watched", Json{{"video_id", h.platform->pack().tutorial_videos.at(0).id}}, token)
            .status == 200);
  *h.clock += h.platform->pack().tutorial_min_dwell_ms();
  CHECK(h.call("POST", base + "/tutorial", Json{{"responses", h.responses(SurveyPhase::Tutorial)}}, token).status == 200);
}

TEST_CASE("survey validation") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p1", Condition::Control);
  const std::string base = "/api/v1/sessions/" + id;
  CHECK(h.call("POST", base + "/survey", Json{{"stage", "pre"}, {"responses", Json::object()}}, token).status == 400);
  CHECK(h.call("POST", base + "/survey", Json{{"stage", "mid"}}, token).status == 400);
  const auto wrong = h.call("POST", base + "/survey", Json{{"stage", "post"}, {"responses", h.responses(SurveyPhase::Post)}}, token);
  CHECK(wrong.status == 409);
  CHECK(error_code(wrong) == "OutOfOrderEvent");
}

TEST_CASE("quiz gating and advice limits through the API") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p1", Condition::QuizAdvice);
  const std::string base = "/api/v1/sessions/" + id;
  const Json view = h.until(id, token, "quiz");
  const Json& item = view.at("step").at("item");
  CHECK_FALSE(item.contains("correct_index"));
  CHECK(item.at("options").size() == 4);

  const auto gated = h.call("POST", base + "/advice", Json{{"text", "Hang up."}}, token);
  CHECK(gated.status == 409);
  CHECK(error_code(gated) == "GateClosed");

  const std::string perm = item.at("permutation_token").get<std::string>();
  CHECK(h.call("POST", base + "/quiz", Json{{"choice", 0}, {"permutation_token", "perm:3210x"}}, token).status == 400);
  CHECK(h.call("POST", base + "/quiz", Json{{"choice", 4}, {"permutation_token", perm}}, token).status == 400);

  const auto order = permutation_from_token(perm);
  const QuizItem* qi = find_quiz_item(h.platform->pack().quiz_bank, Phase::TrustBuilding, 1);
  int correct = 0;
  for (int i = 0; i < 4; ++i) {
    if (order[static_cast<std::size_t>(i)] == qi->correct_index) correct = i;
  }
  const int wrong = (correct + 1) % 4;
  const auto miss = h.call("POST", base + "/quiz", Json{{"choice", wrong}, {"permutation_token", perm}}, token);
  CHECK(miss.status == 200);
  CHECK(miss.body.at("correct") == false);
  CHECK_FALSE(miss.body.contains("explanation"));
  CHECK(miss.body.at("view").at("step").at("item").at("tried") == Json::array({wrong}));
  CHECK(h.call("POST", base + "/quiz", Json{{"choice", wrong}, {"permutation_token", perm}}, token).status == 400);
  const auto hit = h.call("POST", base + "/quiz", Json{{"choice", correct}, {"permutation_token", perm}}, token);
  CHECK(hit.body.at("correct") == true);
  CHECK(hit.body.at("attempts") == 2);
  CHECK(hit.body.contains("explanation"));
  CHECK(hit.body.at("view").at("step").at("type") == "advice");
  CHECK(hit.body.at("view").at("step").at("gate_open") == true);

  const auto too_long = h.call("POST", base + "/advice", Json{{"text", std::string(3000, 'a')}}, token);
  CHECK(too_long.status == 400);
  CHECK(error_code(too_long) == "TextTooLong");
  const auto empty = h.call("POST", base + "/advice", Json{{"text", "   "}}, token);
  CHECK(error_code(empty) == "TextEmpty");
  // The limit counts code points, not bytes.
  std::string accents;
  for (int i = 0; i < 2000; ++i) accents += "\xc3\xa9";
  const auto ok = h.call("POST", base + "/advice", Json{{"text", accents}}, token);
  CHECK(ok.status == 200);
  CHECK(ok.body.at("target_reply_pending") == false);
  CHECK(ok.body.at("view").at("step").at("type") == "reveal");
  CHECK(ok.body.at("view").at("step").at("pending") == false);
}

TEST_CASE("control sessions take no advice") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p1", Condition::Control);
  h.until(id, token, "reveal");
  const auto r = h.call("POST", "/api/v1/sessions/" + id + "/advice", Json{{"text", "hello"}}, token);
  CHECK(r.status == 409);
}

TEST_CASE("participant responses never leak answers, prompts or credentials") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  cfg.remote.api_key = "sk-never-show-this";
  for (Condition c : kAllConditions) {
    Harness h(cfg);
    const auto [id, token] = h.create("p", c);
    std::vector<Response> log;
    h.finish(id, token, &log);
    std::vector<std::string> secrets{"correct_index", "sk-never-show-this", "token_sha256", kAdmin};
    for (const auto& t : h.platform->pack().templates) {
      if (!t.persona_block.empty()) secrets.push_back(t.persona_block.substr(0, 60));
    }
    for (const auto& r : log) {
      const std::string body = r.body.dump();
      for (const auto& s : secrets) CHECK_MESSAGE(body.find(s) == std::string::npos, s);
    }
    const auto done = h.step(id, token);
    CHECK(done.at("status") == "completed");
    CHECK(done.at("progress").at("percent") == 1.0);
  }
}

TEST_CASE("completed sessions are scored and exported") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  for (Condition c : kAllConditions) {
    const auto [id, token] = h.create(std::string("p_") + std::string(to_string(c)), c);
    h.finish(id, token);
    const auto admin = h.call("GET", "/admin/v1/sessions/" + id, Json::object(), kAdmin);
    CHECK(admin.body.contains("scores"));
  }
  h.create("unfinished", Condition::Advice);

  const auto csv = h.call("GET", "/admin/v1/export/table", Json::object(), kAdmin);
  REQUIRE(csv.status == 200);
  REQUIRE(csv.raw.has_value());
  CHECK(csv.content_type.find("text/csv") != std::string::npos);
  const std::string first_line = csv.raw->substr(0, csv.raw->find('\n'));
  CHECK(first_line == join(export_header(), ","));
  CHECK(std::count(csv.raw->begin(), csv.raw->end(), '\n') == 5);

  const auto js = h.call("GET", "/admin/v1/export/table", Json::object(), kAdmin, {{"format", "json"}});
  CHECK(js.status == 200);
  CHECK(h.call("GET", "/admin/v1/export/table", Json::object(), kAdmin, {{"format", "xml"}}).status == 400);
  const auto tr = h.call("GET", "/admin/v1/export/transcripts", Json::object(), kAdmin);
  CHECK(tr.status == 200);
  CHECK(h.call("GET", "/admin/v1/export/table", Json::object(), "x").status == 401);
}

TEST_CASE("invites") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  cfg.require_invites = true;
  Harness h(cfg);
  const auto inv = h.call("POST", "/admin/v1/invites", Json{{"count", 2}}, kAdmin);
  REQUIRE(inv.status == 201);
  const auto codes = inv.body.at("invites");
  REQUIRE(codes.size() == 2);
  const auto none = h.call("POST", "/api/v1/sessions", Json{{"participant_id", "a"}});
  CHECK(error_code(none) == "InvalidInvite");
  CHECK(h.call("POST", "/api/v1/sessions", Json{{"participant_id", "a"}, {"invite", "bogus"}}).status == 403);
  CHECK(h.call("POST", "/api/v1/sessions", Json{{"participant_id", "a"}, {"invite", codes[0]}}).status == 201);
  const auto reused = h.call("POST", "/api/v1/sessions", Json{{"participant_id", "b"}, {"invite", codes[0]}});
  CHECK(error_code(reused) == "InvalidInvite");
  CHECK(h.call("POST", "/api/v1/sessions", Json{{"participant_id", "b"}, {"invite", codes[1]}}).status == 201);
}

TEST_CASE("internal turn endpoints") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto [id, token] = h.create("p", Condition::Advice);
  h.until(id, token, "reveal");
  CHECK(h.call("POST", "/internal/v1/sessions/" + id + "/scammer_turn", Json::object(), token).status == 401);
  const auto wrong = h.call("POST", "/internal/v1/sessions/" + id + "/target_turn", Json::object(), kAdmin);
  CHECK(error_code(wrong) == "PhaseMismatch");
  const auto ok = h.call("POST", "/internal/v1/sessions/" + id + "/scammer_turn", Json::object(), kAdmin);
  CHECK(ok.status == 200);
  CHECK(ok.body.at("content").at("speaker") == "scammer");
  CHECK(h.call("POST", "/internal/v1/sessions/" + id + "/bogus_turn", Json::object(), kAdmin).status == 404);
}

TEST_CASE("labels and reliability endpoints") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  cfg.codebook_path = std::string(SCAMSIM_DATA_DIR) + "/codebook.json";
  Harness h(cfg);
  const auto cb = stats::load_codebook(cfg.codebook_path);
  const std::string a = cb.codes.at(0).id, b = cb.codes.at(1).id;
  Json labels{{"labels", Json::array({Json{{"unit_id", "u1"}, {"coder_id", "c1"}, {"labels", {a}}},
                                      Json{{"unit_id", "u1"}, {"coder_id", "c2"}, {"labels", {a}}},
                                      Json{{"unit_id", "u2"}, {"coder_id", "c1"}, {"labels", {b}}},
                                      Json{{"unit_id", "u2"}, {"coder_id", "c2"}, {"labels", {b}}}})}};
  CHECK(h.call("POST", "/admin/v1/labels", labels, "x").status == 401);
  const auto put = h.call("POST", "/admin/v1/labels", labels, kAdmin);
  CHECK(put.status == 200);
  CHECK(put.body.at("stored") == 4);
  const auto got = h.call("GET", "/admin/v1/labels", Json::object(), kAdmin);
  CHECK_MESSAGE(got.body.at("labels").size() == 4, got.body.dump());
  const auto irr = h.call("GET", "/admin/v1/labels/irr", Json::object(), kAdmin);
  CHECK_MESSAGE(irr.status == 200, irr.body.dump());
  CHECK(irr.body.at("alpha").at("alpha") == 1.0);
  CHECK(irr.body.contains("frequencies"));

  Json bad{{"labels", Json::array({Json{{"unit_id", "u3"}, {"coder_id", "c1"}, {"labels", {"unknown-code"}}}})}};
  CHECK(h.call("POST", "/admin/v1/labels", bad, kAdmin).status == 400);
}

TEST_CASE("pack validation endpoint") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  Harness h(cfg);
  const auto r = h.call("POST", "/admin/v1/pack/validate", Json::object(), kAdmin);
  CHECK(r.status == 200);
  CHECK(r.body.at("pass") == true);
  const auto missing = h.call("POST", "/admin/v1/pack/validate", Json{{"path", "/nonexistent/pack"}}, kAdmin);
  CHECK(missing.body.at("pass") == false);
}

TEST_CASE("an invalid pack refuses to start") {
  PlatformConfig cfg;
  cfg.pack_dir = "/nonexistent/pack";
  try {
    Platform p(cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PackInvalid);
  }
  CHECK(http_status_for(ErrorCode::PackInvalid) == 422);
}

TEST_CASE("abandoned sessions") {
  PlatformConfig cfg;
  cfg.synchronous = true;
  cfg.abandon_timeout_ms = 10'000;
  Harness h(cfg);
  const auto [id, token] = h.create("p", Condition::Control);
  *h.clock += 5'000;
  CHECK(h.platform->sweep_abandoned() == 0);
  *h.clock += 10'000;
  CHECK(h.call("POST", "/admin/v1/sweep", Json::object(), kAdmin).body.at("abandoned") == 1);
  CHECK(h.platform->load_session(id)->status == SessionStatus::Abandoned);
  const auto r = h.call("POST", "/api/v1/sessions/" + id + "/survey",
                        Json{{"stage", "pre"}, {"responses", h.responses(SurveyPhase::Pre)}}, token);
  CHECK(error_code(r) == "SessionNotActive");
}

TEST_CASE("asynchronous generation with long polling") {
  PlatformConfig cfg;
  cfg.workers = 2;
  Harness h(cfg);
  const auto [id, token] = h.create("p", Condition::QuizAdvice);
  const std::string base = "/api/v1/sessions/" + id;
  for (int i = 0; i < 200; ++i) {
    Json v = h.step(id, token, {{"wait_ms", "5000"}});
    const std::string type = v.at("step").at("type").get<std::string>();
    if (type == "done") break;
    if (type == "reveal" || type == "feedback") CHECK(v.at("step").at("pending") == false);
    h.advance_one(id, token);
  }
  h.platform->drain();
  const auto s = h.platform->load_session(id);
  CHECK(s->status == SessionStatus::Completed);
  CHECK(s->transcript.size() == 15);
  CHECK(s->advice_log.size() == 6);
  CHECK(h.call("GET", base + "/step", Json::object(), token, {{"wait_ms", "abc"}}).status == 400);
}

TEST_CASE("concurrent sessions") {
  PlatformConfig cfg;
  cfg.workers = 4;
  // Every clock read moves time forward, so tutorial dwell is always met.
  auto ticks = std::make_shared<std::atomic<Timestamp>>(1'700'000'000'000);
  cfg.clock = [ticks] { return ticks->fetch_add(600'000); };
  Harness h(cfg);
  std::vector<std::pair<std::string, std::string>> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(h.create("p" + std::to_string(i), kAllConditions[static_cast<std::size_t>(i % 4)]));
  std::vector<std::thread> threads;
  std::atomic<int> done{0};
  for (const auto& [id, token] : ids) {
    threads.emplace_back([&, id = id, token = token] {
      for (int i = 0; i < 300; ++i) {
        Request r;
        r.method = "GET";
        r.path = "/api/v1/sessions/" + id + "/step";
        r.bearer = token;
        r.query = {{"wait_ms", "5000"}};
        const auto v = h.platform->handle(r);
        if (v.body.at("step").at("type") == "done") {
          ++done;
          return;
        }
        const std::string type = v.body.at("step").at("type").get<std::string>();
        Request a;
        a.method = "POST";
        a.bearer = token;
        const std::string base = "/api/v1/sessions/" + id;
        if (type == "survey_pre" || type == "survey_post") {
          std::mt19937_64 rng(1);
          const bool pre = type == "survey_pre";
          a.path = base + "/survey";
          a.body = Json{{"stage", pre ? "pre" : "post"},
                        {"responses", testutil::synthetic_responses(h.platform->pack().instruments,
                                                                    pre ? SurveyPhase::Pre : SurveyPhase::Post, rng)}};
        } else if (type == "tutorial") {
          std::mt19937_64 rng(1);
          a.path = base + "/tutorial";
          a.body = Json{{"responses", testutil::synthetic_responses(h.platform->pack().instruments, SurveyPhase::Tutorial, rng)}};
        } else if (type == "reveal" || type == "feedback") {
          a.path = base + "/reveal/ack";
        } else if (type == "quiz") {
          const auto& st = v.body.at("step");
          const std::string perm = st.at("item").at("permutation_token").get<std::string>();
          const auto order = permutation_from_token(perm);
          const QuizItem* qi = find_quiz_item(h.platform->pack().quiz_bank, phase_from_index(st.at("phase").get<int>()),
                                              st.at("ordinal").get<int>());
          int pos = 0;
          for (int k = 0; k < 4; ++k) {
            if (order[static_cast<std::size_t>(k)] == qi->correct_index) pos = k;
          }
          a.path = base + "/quiz";
          a.body = Json{{"choice", pos}, {"permutation_token", perm}};
        } else {
          a.path = base + "/advice";
          a.body = Json{{"text", "Ask a question only he would know."}};
        }
        h.platform->handle(a);
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(done == 8);
  for (const auto& [id, token] : ids) {
    const auto s = h.platform->load_session(id);
    CHECK(s->transcript.size() == 15);
    CHECK(s->feedback_log.size() == 3);
  }
}

TEST_CASE("pending generation is re-issued after a restart") {
  const auto dir = temp_dir("restart");
  std::string id, token;
  {
    PlatformConfig cfg;
    cfg.store = dir.string();
    cfg.synchronous = true;
    auto failing = std::make_shared<CallbackProvider>(
        [](const ContextWindow&, const GenerationParams&) -> std::string { fail(ErrorCode::ProviderError, "offline"); });
    Harness h(cfg, failing);
    std::tie(id, token) = h.create("p", Condition::Advice);
    const Json v = h.until(id, token, "reveal");
    CHECK(v.at("step").at("pending") == true);
    CHECK(v.at("step").contains("error"));
    CHECK_FALSE(h.platform->load_session(id)->staged_message.has_value());
  }
  PlatformConfig cfg;
  cfg.store = dir.string();
  cfg.workers = 1;
  Harness h(cfg);
  h.platform->drain();
  const auto s = h.platform->load_session(id);
  REQUIRE(s.has_value());
  CHECK(s->staged_message.has_value());
  // The participant token survives the restart.
  CHECK(h.step(id, token).at("step").at("pending") == false);
  // Duplicate detection also survives.
  CHECK(h.call("POST", "/api/v1/sessions", Json{{"participant_id", "p"}}).status == 409);
  fs::remove_all(dir);
}

TEST_CASE("configuration from JSON and the environment") {
  const auto cfg = config_from_json(Json{{"store", "memory"},
                                         {"allocator", "balanced_block"},
                                         {"cadence", "after_each_scammer_message"},
                                         {"seed", 9},
                                         {"advice_max_chars", 50},
                                         {"remote", Json{{"url", "http://x"}, {"timeout_ms", 1000}}}});
  CHECK(cfg.allocator == AllocatorMode::BalancedBlock);
  CHECK(cfg.cadence == QuizCadence::AfterEachScammerMessage);
  CHECK(cfg.seed == 9u);
  CHECK(cfg.advice_max_chars == 50);
  CHECK(cfg.remote.url == "http://x");
  CHECK(cfg.remote.timeout == std::chrono::milliseconds(1000));
  CHECK_THROWS_AS(config_from_json(Json{{"allocator", "nope"}}), Error);
}
