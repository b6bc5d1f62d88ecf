#include "scamsim/service/platform.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <sstream>

#include "scamsim/service/export.hpp"
#include "scamsim/text.hpp"

namespace scamsim::service {

namespace {

std::string hex(const unsigned char* data, std::size_t n) {
  std::ostringstream out;
  for (std::size_t i = 0; i < n; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return out.str();
}

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) {
    fail(ErrorCode::IoError, "random source unavailable");
  }
  return hex(buf.data(), buf.size());
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::IoError, "sha256 failed");
  }
  return hex(digest, len);
}

bool constant_time_equal(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

std::size_t code_points(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

Response error_response(int status, std::string_view code, const std::string& message) {
  Response r;
  r.status = status;
  r.body = Json{{"error", Json{{"code", code}, {"status", status}, {"message", message}}}};
  return r;
}

Response ok(Json body) {
  Response r;
  r.body = std::move(body);
  return r;
}

const Json& body_object(const Request& req) {
  if (!req.body.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return req.body;
}

std::string required_string(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    fail(ErrorCode::InvalidArgument, std::string("'") + key + "' must be a string");
  }
  return it->get<std::string>();
}

bool query_flag(const Request& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return false;
  const std::string v = to_lower(it->second);
  return v == "1" || v == "true" || v == "yes";
}

std::vector<std::string> path_segments(const std::string& path) {
  std::vector<std::string> out;
  for (auto& part : split(path, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

Json step_header(const Step& step) {
  Json j{{"type", to_string(step.type)}};
  if (step.has_phase()) {
    j["phase"] = phase_index(step.phase);
    j["phase_name"] = display_name(step.phase);
  }
  if (step.type == StepType::RevealMessage) {
    j["slot"] = to_string(step.slot);
    j["speaker"] = to_string(step.speaker);
  }
  if (step.type == StepType::Quiz || step.type == StepType::AdviceInput) j["ordinal"] = step.ordinal;
  return j;
}

}  // namespace

PlatformConfig config_from_env(PlatformConfig base) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("SCAMSIM_PROVIDER_URL")) {
    base.remote.url = *v;
    base.provider = "remote";
  }
  if (auto v = env("SCAMSIM_PROVIDER_KEY")) base.remote.api_key = *v;
  if (auto v = env("SCAMSIM_PROVIDER_MODEL")) base.remote.model = *v;
  if (auto v = env("SCAMSIM_STORE")) base.store = *v;
  if (auto v = env("SCAMSIM_ADMIN_TOKEN")) base.admin_token = *v;
  if (auto v = env("SCAMSIM_PACK")) base.pack_dir = *v;
  if (auto v = env("SCAMSIM_ALLOCATOR")) base.allocator = allocator_mode_from_string(*v);
  if (auto v = env("SCAMSIM_QUIZ_CADENCE")) base.cadence = cadence_from_string(*v);
  return base;
}

PlatformConfig config_from_json(const Json& j, PlatformConfig base) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  try {
    if (j.contains("pack_dir")) base.pack_dir = j.at("pack_dir").get<std::string>();
    if (j.contains("store")) base.store = j.at("store").get<std::string>();
    if (j.contains("admin_token")) base.admin_token = j.at("admin_token").get<std::string>();
    if (j.contains("allocator")) base.allocator = allocator_mode_from_string(j.at("allocator").get<std::string>());
    if (j.contains("cadence")) base.cadence = cadence_from_string(j.at("cadence").get<std::string>());
    if (j.contains("seed") && !j.at("seed").is_null()) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("provider")) base.provider = j.at("provider").get<std::string>();
    if (j.contains("remote")) {
      const Json& r = j.at("remote");
      base.remote.url = r.value("url", base.remote.url);
      base.remote.api_key = r.value("api_key", base.remote.api_key);
      base.remote.model = r.value("model", base.remote.model);
      if (r.contains("timeout_ms")) base.remote.timeout = std::chrono::milliseconds(r.at("timeout_ms").get<std::int64_t>());
    }
    base.allow_duplicate_participants = j.value("allow_duplicate_participants", base.allow_duplicate_participants);
    base.require_invites = j.value("require_invites", base.require_invites);
    base.workers = j.value("workers", base.workers);
    base.synchronous = j.value("synchronous", base.synchronous);
    base.advice_max_chars = j.value("advice_max_chars", base.advice_max_chars);
    base.abandon_timeout_ms = j.value("abandon_timeout_ms", base.abandon_timeout_ms);
    base.long_poll_ms = j.value("long_poll_ms", base.long_poll_ms);
    base.orchestrator.feedback_whole_session =
        j.value("feedback_whole_session", base.orchestrator.feedback_whole_session);
    base.orchestrator.refusal_fallback = j.value("refusal_fallback", base.orchestrator.refusal_fallback);
    if (j.contains("refusal_retries")) base.orchestrator.refusal_retries = j.at("refusal_retries").get<int>();
    if (j.contains("codebook_path")) base.codebook_path = j.at("codebook_path").get<std::string>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return base;
}

std::vector<Session> read_sessions(DocumentStore& store) {
  std::vector<Session> out;
  for (const auto& key : store.keys(Collection::Sessions)) {
    auto rec = store.get(Collection::Sessions, key);
    if (!rec) continue;
    try {
      out.push_back(session_from_json(Json::parse(rec->document).at("session")));
    } catch (const Json::exception& e) {
      fail(ErrorCode::ParseError, "stored session " + key + ": " + e.what());
    }
  }
  return out;
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::MissingItem:
    case ErrorCode::OutOfScale:
    case ErrorCode::TextEmpty:
    case ErrorCode::TextTooLong:
    case ErrorCode::OptionAlreadyTried:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::InvalidInvite:
      return 403;
    case ErrorCode::SessionNotFound:
      return 404;
    case ErrorCode::OutOfOrderEvent:
    case ErrorCode::SessionNotActive:
    case ErrorCode::DuplicateAdvice:
    case ErrorCode::NonMonotoneTimestamp:
    case ErrorCode::SessionIncomplete:
    case ErrorCode::AlreadySolved:
    case ErrorCode::PhaseMismatch:
    case ErrorCode::DuplicateParticipant:
    case ErrorCode::GateClosed:
    case ErrorCode::VersionConflict:
    case ErrorCode::DwellNotMet:
      return 409;
    case ErrorCode::ProviderError:
    case ErrorCode::EmptyCompletion:
    case ErrorCode::RefusalDetected:
    case ErrorCode::UnparseableVerdict:
      return 502;
    case ErrorCode::PackInvalid:
    case ErrorCode::NoOverlap:
      return 422;
    default:
      return 500;
  }
}

Platform::Platform(PlatformConfig config, std::shared_ptr<CompletionProvider> provider,
                   std::unique_ptr<DocumentStore> store)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      store_(std::move(store)),
      allocator_(config_.allocator, config_.seed),
      id_rng_(config_.seed.value_or(0) ^ 0x5eedf00dULL) {
  try {
    pack_ = load_pack(config_.pack_dir);
  } catch (const Error& e) {
    fail(ErrorCode::PackInvalid, "pack '" + config_.pack_dir.string() + "' cannot be loaded: " + e.what());
  }
  pack_report_ = validate_pack(pack_, config_.cadence);
  if (!pack_report_.pass) {
    std::string detail = pack_report_.findings.empty() ? "" : ": " + pack_report_.findings.front();
    fail(ErrorCode::PackInvalid, "pack '" + config_.pack_dir.string() + "' failed validation" + detail);
  }
  if (!provider_) {
    if (config_.provider == "scripted") {
      provider_ = std::make_shared<ScriptedProvider>(pack_.scripted_fixtures);
    } else if (config_.provider == "remote") {
      provider_ = std::make_shared<RemoteProvider>(config_.remote);
    } else {
      fail(ErrorCode::InvalidArgument, "unknown provider '" + config_.provider + "'");
    }
  }
  if (!store_) store_ = open_store(config_.store);
  if (!config_.codebook_path.empty()) {
    codebook_ = stats::load_codebook(config_.codebook_path);
    have_codebook_ = true;
  }

  std::vector<std::string> resume;
  for (const auto& key : store_->keys(Collection::Sessions)) {
    auto stored = load(key);
    if (!stored) continue;
    participants_.insert(stored->session.participant_id);
    if (needs_generation(stored->session)) resume.push_back(key);
  }

  if (!config_.synchronous) {
    const std::size_t n = std::max<std::size_t>(1, config_.workers);
    for (std::size_t i = 0; i < n; ++i) {
      workers_.emplace_back([this] {
        std::unique_lock lock(jobs_mu_);
        for (;;) {
          jobs_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
          if (stopping_) return;
          std::string id = queue_.front();
          queue_.pop_front();
          ++running_;
          lock.unlock();
          run_job(id);
          lock.lock();
          --running_;
          if (rerun_.erase(id)) {
            queue_.push_back(id);
            jobs_cv_.notify_one();
          } else {
            pending_.erase(id);
          }
          progress_cv_.notify_all();
        }
      });
    }
  }
  for (const auto& id : resume) schedule(id);
}

Platform::~Platform() {
  {
    std::lock_guard lock(jobs_mu_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  progress_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

Timestamp Platform::now() const {
  if (config_.clock) return config_.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Timestamp Platform::now_for(const Session& s) const { return std::max(now(), last_activity(s)); }

std::optional<Platform::Stored> Platform::load(const std::string& id) {
  auto rec = store_->get(Collection::Sessions, id);
  if (!rec) return std::nullopt;
  Json doc;
  try {
    doc = Json::parse(rec->document);
  } catch (const std::exception& ex) {
    fail(ErrorCode::ParseError, "stored session " + id + " is not valid JSON: " + ex.what());
  }
  Stored out;
  out.session = session_from_json(doc.at("session"));
  out.token_hash = doc.at("auth").at("token_sha256").get<std::string>();
  out.version = rec->version;
  return out;
}

void Platform::save(Stored& stored) {
  Json doc{{"auth", Json{{"token_sha256", stored.token_hash}}}, {"session", to_json(stored.session)}};
  stored.version = store_->put(Collection::Sessions, stored.session.id, doc.dump(), stored.version);
  Json events = Json::array();
  for (const auto& e : stored.session.events) {
    events.push_back(Json{{"kind", e.kind}, {"payload", e.payload}, {"at", e.at}});
  }
  store_->put(Collection::Events, stored.session.id, events.dump(), std::nullopt);
}

std::shared_ptr<std::mutex> Platform::session_lock(const std::string& id) {
  std::lock_guard lock(state_mu_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::optional<Session> Platform::load_session(const std::string& id) {
  auto s = load(id);
  if (!s) return std::nullopt;
  return s->session;
}

std::vector<Session> Platform::all_sessions() {
  std::vector<Session> out;
  for (const auto& key : store_->keys(Collection::Sessions)) {
    if (auto s = load(key)) out.push_back(std::move(s->session));
  }
  return out;
}

void Platform::require_admin(const Request& req) const {
  if (config_.admin_token.empty() || !constant_time_equal(req.bearer, config_.admin_token)) {
    fail(ErrorCode::Unauthorized, "admin token required");
  }
}

Platform::Stored Platform::authorize_participant(const std::string& id, const Request& req) {
  auto stored = load(id);
  if (!stored) fail(ErrorCode::SessionNotFound, "no session '" + id + "'");
  const bool admin = !config_.admin_token.empty() && constant_time_equal(req.bearer, config_.admin_token);
  if (!admin && !constant_time_equal(sha256_hex(req.bearer), stored->token_hash)) {
    fail(ErrorCode::Unauthorized, "session token does not match");
  }
  return *stored;
}

std::string Platform::next_id() {
  if (!config_.seed) return random_hex(12);
  std::lock_guard lock(state_mu_);
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << id_rng_() << std::setw(8) << (id_rng_() & 0xffffffffULL);
  return out.str();
}

std::uint64_t Platform::next_seed() {
  if (!config_.seed) {
    std::uint64_t v = 0;
    if (RAND_bytes(reinterpret_cast<unsigned char*>(&v), sizeof v) != 1) {
      fail(ErrorCode::IoError, "random source unavailable");
    }
    return v;
  }
  std::lock_guard lock(state_mu_);
  return id_rng_();
}

bool Platform::needs_generation(const Session& s) const {
  if (s.status != SessionStatus::Active) return false;
  const Step& step = s.current_step();
  if (step.type == StepType::RevealMessage) return !s.staged_message.has_value();
  if (step.type == StepType::FeedbackSummary) return !s.staged_feedback.has_value();
  return false;
}

void Platform::stage_static(Session& s) {
  if (is_dynamic(s.condition) || !needs_generation(s)) return;
  const Step& step = s.current_step();
  const Timestamp at = now_for(s);
  if (step.type == StepType::RevealMessage) {
    s.staged_message = static_message(pack_, s.condition, step.phase, step.slot, at);
  } else {
    s.staged_feedback = generate_feedback(s, step.phase, *provider_, pack_, config_.orchestrator).record;
  }
}

// Every mutation ends here: static content is staged inline, a completed
// session gets its score sheet, and the document is written.
void Platform::finish_mutation(Stored& stored) {
  Session& s = stored.session;
  stage_static(s);
  if (s.status == SessionStatus::Completed &&
      !store_->get(Collection::Responses, s.id).has_value()) {
    const ScoreSheet sheet = build_score_sheet(s, pack_.instruments);
    store_->put(Collection::Responses, s.id, to_json(sheet).dump(), std::nullopt);
  }
  save(stored);
}

void Platform::schedule(const std::string& id) {
  if (config_.synchronous) {
    run_job(id);
    return;
  }
  std::lock_guard lock(jobs_mu_);
  if (stopping_) return;
  if (pending_.count(id)) {
    // A running job may have loaded the session before this transition.
    rerun_.insert(id);
    return;
  }
  pending_.insert(id);
  queue_.push_back(id);
  jobs_cv_.notify_one();
}

void Platform::run_job(const std::string& id) {
  auto mu = session_lock(id);
  Session snapshot;
  {
    std::lock_guard lock(*mu);
    auto stored = load(id);
    if (!stored || !needs_generation(stored->session)) return;
    snapshot = stored->session;
  }

  const Step step = snapshot.current_step();
  const std::size_t cursor = snapshot.cursor;
  std::optional<Message> message;
  std::optional<FeedbackRecord> feedback;
  std::vector<Incident> incidents;
  std::optional<Error> failure;
  try {
    if (step.type == StepType::RevealMessage) {
      auto turn = produce_reveal(snapshot, *provider_, pack_, now_for(snapshot), config_.orchestrator);
      message = std::move(turn.message);
      incidents = std::move(turn.incidents);
    } else {
      auto fb = generate_feedback(snapshot, step.phase, *provider_, pack_, config_.orchestrator);
      feedback = std::move(fb.record);
      incidents = std::move(fb.incidents);
    }
  } catch (const Error& e) {
    failure = e;
  } catch (const std::exception& e) {
    failure = Error(ErrorCode::ProviderError, e.what());
  }

  std::lock_guard lock(*mu);
  auto stored = load(id);
  // The session moved on (or was staged by another caller) while generating: discard.
  if (!stored || stored->session.cursor != cursor || !needs_generation(stored->session)) return;
  Session& s = stored->session;
  Json incident_json = Json::array();
  for (const auto& i : incidents) incident_json.push_back(to_json(i));
  if (failure) {
    record_event(s, "generation_failed",
                 Json{{"step", to_json(step)},
                      {"code", error_code_name(failure->code())},
                      {"message", failure->what()},
                      {"incidents", incident_json}},
                 now_for(s));
    save(*stored);
    std::lock_guard jl(jobs_mu_);
    last_errors_[id] = std::string(error_code_name(failure->code())) + ": " + failure->what();
    return;
  }
  if (message) {
    message->timestamp = std::max(message->timestamp, last_activity(s));
    s.staged_message = *message;
  }
  if (feedback) s.staged_feedback = *feedback;
  record_event(s, "generated", Json{{"step", to_json(step)}, {"incidents", incident_json}}, now_for(s));
  save(*stored);
  std::lock_guard jl(jobs_mu_);
  last_errors_.erase(id);
}

void Platform::drain() {
  if (config_.synchronous) return;
  std::unique_lock lock(jobs_mu_);
  progress_cv_.wait(lock, [this] { return stopping_ || (queue_.empty() && running_ == 0); });
}

std::size_t Platform::sweep_abandoned() {
  std::size_t changed = 0;
  for (const auto& key : store_->keys(Collection::Sessions)) {
    auto mu = session_lock(key);
    std::lock_guard lock(*mu);
    auto stored = load(key);
    if (!stored) continue;
    if (mark_abandoned_if_idle(stored->session, now(), config_.abandon_timeout_ms)) {
      save(*stored);
      ++changed;
    }
  }
  return changed;
}

Json Platform::step_view(const Session& s, std::optional<std::string> generation_error) const {
  const auto progress = session_progress(s);
  Json view{{"session_id", s.id},
            {"status", to_string(s.status)},
            {"progress", Json{{"phase", phase_index(progress.phase)},
                              {"step_index", progress.step_index},
                              {"steps_total", progress.steps_total},
                              {"percent", progress.percent}}}};

  const Step& step = s.current_step();
  Json j = step_header(step);
  switch (step.type) {
    case StepType::SurveyPre:
    case StepType::SurveyPost: {
      const SurveyPhase stage = step.type == StepType::SurveyPre ? SurveyPhase::Pre : SurveyPhase::Post;
      Json instruments = Json::array();
      for (const auto& def : pack_.instruments) {
        InstrumentDef subset{def.key, def.title, {}};
        for (const auto& item : def.items) {
          if (stage_of(def, item) == stage) subset.items.push_back(item);
        }
        if (!subset.items.empty()) instruments.push_back(to_json(subset, false));
      }
      j["instruments"] = instruments;
      break;
    }
    case StepType::Tutorial: {
      Json videos = Json::array();
      for (const auto& v : pack_.tutorial_videos) {
        videos.push_back(Json{{"id", v.id}, {"title", v.title}, {"url", v.url}, {"duration_ms", v.duration_ms}});
      }
      const std::int64_t min_dwell = pack_.tutorial_min_dwell_ms();
      j["videos"] = videos;
      j["min_dwell_ms"] = min_dwell;
      j["dwell_remaining_ms"] = std::max<std::int64_t>(0, min_dwell - (now() - s.step_entered_at));
      Json checks = Json::array();
      for (const auto& def : pack_.instruments) {
        InstrumentDef subset{def.key, def.title, {}};
        for (const auto& item : def.items) {
          if (stage_of(def, item) == SurveyPhase::Tutorial) subset.items.push_back(item);
        }
        if (!subset.items.empty()) checks.push_back(to_json(subset, false));
      }
      j["instruments"] = checks;
      break;
    }
    case StepType::RevealMessage:
      j["pending"] = !s.staged_message.has_value();
      if (s.staged_message) {
        j["message"] = Json{{"speaker", pack_.label_for(s.staged_message->speaker)},
                            {"role", to_string(s.staged_message->speaker)},
                            {"text", s.staged_message->text}};
      }
      if (generation_error && !s.staged_message) j["error"] = *generation_error;
      break;
    case StepType::Quiz: {
      const auto item = present_item(s, step, pack_.quiz_bank);
      j["item"] = Json{{"item_id", item.item_id},
                       {"stem", item.stem},
                       {"options", item.options},
                       {"permutation_token", item.permutation_token},
                       {"tried", item.tried_displayed}};
      break;
    }
    case StepType::AdviceInput:
      j["guidance"] = pack_.advice_guidance;
      j["gate_open"] = is_gate_open(s, step);
      j["max_chars"] = config_.advice_max_chars;
      break;
    case StepType::FeedbackSummary:
      j["pending"] = !s.staged_feedback.has_value();
      if (s.staged_feedback) {
        j["narrative"] = s.staged_feedback->narrative;
        j["next_phase_preview"] = s.staged_feedback->next_phase_preview;
        if (s.staged_feedback->generated) j["verdict"] = to_string(s.staged_feedback->verdict);
      }
      if (generation_error && !s.staged_feedback) j["error"] = *generation_error;
      break;
    case StepType::Done:
      break;
  }
  view["step"] = j;

  Json transcript = Json::array();
  for (const auto& m : s.transcript) {
    transcript.push_back(Json{{"speaker", pack_.label_for(m.speaker)},
                              {"role", to_string(m.speaker)},
                              {"phase", phase_index(m.phase)},
                              {"slot", to_string(m.slot)},
                              {"text", m.text}});
  }
  view["transcript"] = transcript;
  Json advice = Json::array();
  for (const auto& a : s.advice_log) {
    advice.push_back(Json{{"phase", phase_index(a.phase)}, {"ordinal", a.ordinal}, {"text", a.text}});
  }
  view["advice_log"] = advice;
  Json feedback = Json::array();
  for (const auto& f : s.feedback_log) {
    Json fj{{"phase", phase_index(f.phase)}, {"narrative", f.narrative}, {"next_phase_preview", f.next_phase_preview}};
    if (f.generated) fj["verdict"] = to_string(f.verdict);
    feedback.push_back(std::move(fj));
  }
  view["feedback_log"] = feedback;
  return view;
}

Json Platform::generated_content(const Session& s) const {
  const Step& step = s.current_step();
  if (step.type == StepType::RevealMessage && s.staged_message) return to_json(*s.staged_message);
  if (step.type == StepType::FeedbackSummary && s.staged_feedback) return to_json(*s.staged_feedback);
  return Json(nullptr);
}

Response Platform::handle(const Request& request) {
  try {
    const auto seg = path_segments(request.path);
    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    auto not_found = [&] { return error_response(404, "NotFound", "no route for " + request.method + " " + request.path); };

    if (seg.size() == 1 && seg[0] == "health" && get) {
      return ok(Json{{"status", "ok"}, {"pack", pack_.name}, {"version", pack_.version}, {"provider", provider_->name()}});
    }
    if (seg.size() >= 3 && seg[0] == "api" && seg[1] == "v1" && seg[2] == "sessions") {
      if (seg.size() == 3 && post) return create_session(request);
      if (seg.size() < 5) return not_found();
      const std::string& id = seg[3];
      const std::string tail = join(std::vector<std::string>(seg.begin() + 4, seg.end()), "/");
      if (get && tail == "step") return get_step(id, request);
      if (!post) return not_found();
      if (tail == "survey") return submit_survey(id, request);
      if (tail == "tutorial") return complete_tutorial(id, request);
      if (tail == "tutorial/watched") return tutorial_watched(id, request);
      if (tail == "reveal/ack") return acknowledge(id, request);
      if (tail == "quiz") return submit_quiz(id, request);
      if (tail == "advice") return submit_advice(id, request);
      return not_found();
    }
    if (seg.size() == 5 && seg[0] == "internal" && seg[1] == "v1" && seg[2] == "sessions" && post) {
      return internal_turn(seg[3], seg[4], request);
    }
    if (seg.size() >= 3 && seg[0] == "admin" && seg[1] == "v1") {
      const std::string tail = join(std::vector<std::string>(seg.begin() + 2, seg.end()), "/");
      if (get && seg.size() == 4 && seg[2] == "sessions") return admin_session(seg[3], request);
      if (get && tail == "sessions") {
        require_admin(request);
        Json list = Json::array();
        for (const auto& s : all_sessions()) {
          list.push_back(Json{{"session_id", s.id},
                              {"participant_id", s.participant_id},
                              {"condition", to_string(s.condition)},
                              {"status", to_string(s.status)},
                              {"cursor", s.cursor}});
        }
        return ok(Json{{"sessions", list}});
      }
      if (get && tail == "export/table") return export_table_endpoint(request);
      if (get && tail == "export/transcripts") return export_transcripts_endpoint(request);
      if (post && tail == "pack/validate") return pack_validate_endpoint(request);
      if (post && tail == "invites") return create_invites(request);
      if (post && tail == "sweep") {
        require_admin(request);
        return ok(Json{{"abandoned", sweep_abandoned()}});
      }
      if (post && tail == "labels") return put_labels(request);
      if (get && tail == "labels") return get_labels(request);
      if (get && tail == "labels/irr") return labels_irr(request);
    }
    return not_found();
  } catch (const Error& e) {
    return error_response(http_status_for(e.code()), error_code_name(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, error_code_name(ErrorCode::InvalidArgument), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

Response Platform::create_session(const Request& req) {
  const Json& body = body_object(req);
  const std::string participant = trim(required_string(body, "participant_id"));
  if (participant.empty()) fail(ErrorCode::InvalidArgument, "participant_id is empty");

  const bool admin = !config_.admin_token.empty() && constant_time_equal(req.bearer, config_.admin_token);
  std::optional<Condition> forced;
  if (body.contains("condition") && !body.at("condition").is_null()) {
    if (!admin) fail(ErrorCode::Unauthorized, "only an admin may choose the condition");
    forced = condition_from_string(body.at("condition").get<std::string>());
  }

  if (config_.require_invites && !admin) {
    if (!body.contains("invite") || !body.at("invite").is_string()) {
      fail(ErrorCode::InvalidInvite, "an invite code is required");
    }
    const std::string code = body.at("invite").get<std::string>();
    std::optional<StoredRecord> rec;
    try {
      rec = store_->get(Collection::Invites, code);
    } catch (const Error&) {
      fail(ErrorCode::InvalidInvite, "invite code is not valid");
    }
    if (!rec) fail(ErrorCode::InvalidInvite, "invite code is not valid");
    Json doc = Json::parse(rec->document);
    if (doc.value("used", false)) fail(ErrorCode::InvalidInvite, "invite code was already used");
    doc["used"] = true;
    doc["participant_id"] = participant;
    try {
      store_->put(Collection::Invites, code, doc.dump(), rec->version);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::VersionConflict) fail(ErrorCode::InvalidInvite, "invite code was already used");
      throw;
    }
  }

  Condition condition;
  {
    std::lock_guard lock(state_mu_);
    if (!config_.allow_duplicate_participants && participants_.count(participant)) {
      fail(ErrorCode::DuplicateParticipant, "participant '" + participant + "' already has a session");
    }
    participants_.insert(participant);
    condition = forced ? *forced : allocator_.assign();
  }

  const std::string token = random_hex(24);
  Stored stored;
  stored.token_hash = sha256_hex(token);
  stored.session = make_session(next_id(), participant, condition, config_.cadence, next_seed(), now());
  auto mu = session_lock(stored.session.id);
  {
    std::lock_guard lock(*mu);
    finish_mutation(stored);
  }
  Json out{{"session_id", stored.session.id}, {"token", token}};
  if (admin) out["condition"] = to_string(condition);
  out["view"] = step_view(stored.session);
  Response r = ok(out);
  r.status = 201;
  return r;
}

Response Platform::get_step(const std::string& id, const Request& req) {
  std::int64_t wait_ms = 0;
  if (auto it = req.query.find("wait_ms"); it != req.query.end()) {
    try {
      wait_ms = std::stoll(it->second);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "wait_ms must be an integer");
    }
  }
  Stored stored = authorize_participant(id, req);
  if (needs_generation(stored.session)) {
    schedule(id);
    wait_ms = std::clamp<std::int64_t>(wait_ms, 0, config_.long_poll_ms);
    if (wait_ms > 0 && !config_.synchronous) {
      std::unique_lock lock(jobs_mu_);
      progress_cv_.wait_for(lock, std::chrono::milliseconds(wait_ms),
                            [&] { return stopping_ || !pending_.count(id); });
    }
    stored = *load(id);
  }
  std::optional<std::string> err;
  {
    std::lock_guard lock(jobs_mu_);
    if (auto it = last_errors_.find(id); it != last_errors_.end()) err = it->second;
  }
  return ok(step_view(stored.session, err));
}

Response Platform::submit_survey(const std::string& id, const Request& req) {
  const Json& body = body_object(req);
  const std::string stage_name = required_string(body, "stage");
  SurveyStage stage;
  SurveyPhase phase;
  if (stage_name == "pre") {
    stage = SurveyStage::Pre;
    phase = SurveyPhase::Pre;
  } else if (stage_name == "post") {
    stage = SurveyStage::Post;
    phase = SurveyPhase::Post;
  } else {
    fail(ErrorCode::InvalidArgument, "stage must be 'pre' or 'post'");
  }
  const Json responses = body.value("responses", Json::object());
  auto mu = session_lock(id);
  std::lock_guard lock(*mu);
  Stored stored = authorize_participant(id, req);
  validate_stage_responses(pack_.instruments, phase, responses);
  stored.session = advance(stored.session, event::SurveySubmitted{stage, responses}, now_for(stored.session));
  finish_mutation(stored);
  return ok(step_view(stored.session));
}

Response Platform::complete_tutorial(const std::string& id, const Request& req) {
  const Json& body = body_object(req);
  const Json responses = body.value("responses", Json::object());
  auto mu = session_lock(id);
  std::lock_guard lock(*mu);
  Stored stored = authorize_participant(id, req);
  Session& s = stored.session;
  if (s.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
  if (s.current_step().type != StepType::Tutorial) {
    fail(ErrorCode::OutOfOrderEvent, "tutorial is not the current step");
  }
  const Timestamp at = now_for(s);
  const std::int64_t dwell = at - s.step_entered_at;
  if (dwell < pack_.tutorial_min_dwell_ms()) {
    fail(ErrorCode::DwellNotMet, "tutorial needs " + std::to_string(pack_.tutorial_min_dwell_ms() - dwell) +
                                     " ms more");
  }
  validate_stage_responses(pack_.instruments, SurveyPhase::Tutorial, responses);
  s = advance(s, event::TutorialCompleted{responses}, at);
  finish_mutation(stored);
  return ok(step_view(s));
}

Response Platform::tutorial_watched(const std::string& id, const Request& req) {
  const Json& body = body_object(req);
  const std::string video = required_string(body, "video_id");
  auto mu = session_lock(id);
  std::lock_guard lock(*mu);
  Stored stored = authorize_participant(id, req);
  Session& s = stored.session;
  if (s.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
  if (s.current_step().type != StepType::Tutorial) {
    fail(ErrorCode::OutOfOrderEvent, "tutorial is not the current step");
  }
  const bool known = std::any_of(pack_.tutorial_videos.begin(), pack_.tutorial_videos.end(),
                                 [&](const TutorialVideo& v) { return v.id == video; });
  if (!known) fail(ErrorCode::InvalidArgument, "unknown video '" + video + "'");
  record_event(s, "tutorial_watched", Json{{"video_id", video}}, now_for(s));
  save(stored);
  return ok(step_view(s));
}

Response Platform::acknowledge(const std::string& id, const Request& req) {
  bool schedule_next = false;
  Json view;
  {
    auto mu = session_lock(id);
    std::lock_guard lock(*mu);
    Stored stored = authorize_participant(id, req);
    Session& s = stored.session;
    if (s.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
    const Step& step = s.current_step();
    const Timestamp at = now_for(s);
    if (step.type == StepType::RevealMessage) {
      if (!s.staged_message) fail(ErrorCode::OutOfOrderEvent, "the message is not ready yet");
      s = advance(s, event::MessageRevealed{*s.staged_message}, at);
    } else if (step.type == StepType::FeedbackSummary) {
      if (!s.staged_feedback) fail(ErrorCode::OutOfOrderEvent, "the summary is not ready yet");
      s = advance(s, event::FeedbackDelivered{*s.staged_feedback}, at);
    } else {
      fail(ErrorCode::OutOfOrderEvent, "nothing to acknowledge at step " + describe(step));
    }
    finish_mutation(stored);
    schedule_next = needs_generation(s);
    view = step_view(s);
  }
  if (schedule_next) {
    schedule(id);
    if (config_.synchronous) view = step_view(*load_session(id));
  }
  return ok(view);
}

Response Platform::submit_quiz(const std::string& id, const Request& req) {
  const Json& body = body_object(req);
  if (!body.contains("choice") || !body.at("choice").is_number_integer()) {
    fail(ErrorCode::InvalidArgument, "'choice' must be an integer display position");
  }
  const int choice = body.at("choice").get<int>();
  const std::string token = required_string(body, "permutation_token");
  if (choice < 0 || choice > 3) fail(ErrorCode::IndexOutOfRange, "choice outside 0..3");

  bool schedule_next = false;
  Json out;
  {
    auto mu = session_lock(id);
    std::lock_guard lock(*mu);
    Stored stored = authorize_participant(id, req);
    Session& s = stored.session;
    if (s.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
    const Step step = s.current_step();
    if (step.type != StepType::Quiz) fail(ErrorCode::OutOfOrderEvent, "no quiz at step " + describe(step));
    const QuizItem* item = find_quiz_item(pack_.quiz_bank, step.phase, step.ordinal);
    if (!item) fail(ErrorCode::NoItemForStep, "no quiz item for " + describe(step));
    const OptionPermutation perm = option_permutation(s.seed, item->id);
    if (token != permutation_token(perm)) {
      fail(ErrorCode::InvalidArgument, "permutation token does not match the presented item");
    }
    const QuizOutcome outcome = submit_answer(s, *item, perm[static_cast<std::size_t>(choice)], now_for(s));
    finish_mutation(stored);
    schedule_next = needs_generation(s);
    out = Json{{"correct", outcome.correct}, {"attempts", outcome.attempts}};
    if (outcome.correct) out["explanation"] = outcome.explanation;
    out["view"] = step_view(s);
  }
  if (schedule_next) {
    schedule(id);
    if (config_.synchronous) out["view"] = step_view(*load_session(id));
  }
  return ok(out);
}

Response Platform::submit_advice(const std::string& id, const Request& req) {
  const Json& body = body_object(req);
  const std::string text = required_string(body, "text");
  if (trim(text).empty()) fail(ErrorCode::TextEmpty, "advice text is empty");
  if (code_points(text) > config_.advice_max_chars) {
    fail(ErrorCode::TextTooLong, "advice exceeds " + std::to_string(config_.advice_max_chars) + " characters");
  }

  bool schedule_next = false;
  Json out;
  {
    auto mu = session_lock(id);
    std::lock_guard lock(*mu);
    Stored stored = authorize_participant(id, req);
    Session& s = stored.session;
    if (s.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
    if (!has_advice(s.condition)) fail(ErrorCode::OutOfOrderEvent, "this session takes no advice");
    const Step& step = s.current_step();
    if (step.type == StepType::Quiz) fail(ErrorCode::GateClosed, "answer the quiz before giving advice");
    s = advance(s, event::AdviceSubmitted{text, std::nullopt, std::nullopt}, now_for(s));
    finish_mutation(stored);
    schedule_next = needs_generation(s);
    out = Json{{"target_reply_pending", schedule_next}, {"view", step_view(s)}};
  }
  if (schedule_next) {
    schedule(id);
    if (config_.synchronous) {
      const Session s = *load_session(id);
      out["target_reply_pending"] = needs_generation(s);
      out["view"] = step_view(s);
    }
  }
  return ok(out);
}

Response Platform::internal_turn(const std::string& id, const std::string& kind, const Request& req) {
  require_admin(req);
  auto current = load_session(id);
  if (!current) fail(ErrorCode::SessionNotFound, "no session '" + id + "'");
  const Step step = current->current_step();
  bool matches = false;
  if (kind == "scammer_turn") {
    matches = step.type == StepType::RevealMessage && step.speaker == Speaker::Scammer;
  } else if (kind == "target_turn") {
    matches = step.type == StepType::RevealMessage && step.speaker == Speaker::Target;
  } else if (kind == "feedback_turn") {
    matches = step.type == StepType::FeedbackSummary;
  } else {
    return error_response(404, "NotFound", "unknown turn kind '" + kind + "'");
  }
  if (!matches) fail(ErrorCode::PhaseMismatch, kind + " does not match step " + describe(step));
  if (needs_generation(*current)) run_job(id);
  const Session s = *load_session(id);
  if (needs_generation(s)) {
    std::string detail = "generation failed";
    std::lock_guard lock(jobs_mu_);
    if (auto it = last_errors_.find(id); it != last_errors_.end()) detail = it->second;
    fail(ErrorCode::ProviderError, detail);
  }
  return ok(Json{{"session_id", id}, {"step", to_json(step)}, {"content", generated_content(s)}});
}

Response Platform::admin_session(const std::string& id, const Request& req) {
  require_admin(req);
  auto s = load_session(id);
  if (!s) fail(ErrorCode::SessionNotFound, "no session '" + id + "'");
  Json out{{"session", to_json(*s)}};
  if (auto rec = store_->get(Collection::Responses, id)) out["scores"] = Json::parse(rec->document);
  return ok(out);
}

Response Platform::export_table_endpoint(const Request& req) {
  require_admin(req);
  const auto table = export_table(all_sessions(), pack_.instruments, query_flag(req, "include_excluded"));
  std::string format = "csv";
  if (auto it = req.query.find("format"); it != req.query.end()) format = to_lower(it->second);
  if (format == "json") return ok(Json{{"rows", stats::to_json(table)}});
  if (format != "csv") fail(ErrorCode::InvalidArgument, "format must be csv or json");
  Response r;
  r.raw = stats::to_csv(table);
  r.content_type = "text/csv";
  return r;
}

Response Platform::export_transcripts_endpoint(const Request& req) {
  require_admin(req);
  return ok(export_transcripts(all_sessions()));
}

Response Platform::pack_validate_endpoint(const Request& req) {
  require_admin(req);
  const Json& body = req.body.is_object() ? req.body : Json::object();
  QuizCadence cadence = config_.cadence;
  if (body.contains("cadence")) cadence = cadence_from_string(body.at("cadence").get<std::string>());
  if (body.contains("path")) return ok(to_json(pack_validate(body.at("path").get<std::string>(), cadence)));
  return ok(to_json(validate_pack(pack_, cadence)));
}

Response Platform::create_invites(const Request& req) {
  require_admin(req);
  const Json& body = body_object(req);
  const int count = body.value("count", 1);
  if (count < 1 || count > 10000) fail(ErrorCode::InvalidArgument, "count must be in 1..10000");
  Json codes = Json::array();
  for (int i = 0; i < count; ++i) {
    const std::string code = random_hex(8);
    store_->put(Collection::Invites, code, Json{{"used", false}, {"created_at", now()}}.dump(), 0);
    codes.push_back(code);
  }
  Response r = ok(Json{{"invites", codes}});
  r.status = 201;
  return r;
}

Response Platform::put_labels(const Request& req) {
  require_admin(req);
  const auto labels = stats::labels_from_json(body_object(req));
  if (labels.empty()) fail(ErrorCode::InvalidArgument, "no labels given");
  if (have_codebook_) stats::check_labels(labels, codebook_);
  std::map<std::string, std::vector<const stats::AdviceLabel*>> by_coder;
  for (const auto& l : labels) by_coder[l.coder_id].push_back(&l);
  std::lock_guard lock(state_mu_);
  std::size_t stored_count = 0;
  for (const auto& [coder, items] : by_coder) {
    Json doc{{"labels", Json::array()}};
    std::optional<std::uint64_t> version = 0;
    if (auto rec = store_->get(Collection::Labels, coder)) {
      doc = Json::parse(rec->document);
      version = rec->version;
    }
    for (const auto* l : items) {
      auto& arr = doc["labels"];
      for (auto it = arr.begin(); it != arr.end();) {
        it = it->at("unit_id") == l->unit_id ? arr.erase(it) : it + 1;
      }
      arr.push_back(Json{{"unit_id", l->unit_id}, {"coder_id", l->coder_id}, {"labels", l->labels}});
      ++stored_count;
    }
    store_->put(Collection::Labels, coder, doc.dump(), version);
  }
  return ok(Json{{"stored", stored_count}, {"coders", by_coder.size()}});
}

Response Platform::get_labels(const Request& req) {
  require_admin(req);
  Json all = Json::array();
  for (const auto& coder : store_->keys(Collection::Labels)) {
    auto rec = store_->get(Collection::Labels, coder);
    if (!rec) continue;
    const Json doc = Json::parse(rec->document);
    for (const auto& l : doc.at("labels")) all.push_back(l);
  }
  return ok(Json{{"labels", all}});
}

Response Platform::labels_irr(const Request& req) {
  require_admin(req);
  const Json all = get_labels(req).body;
  const auto labels = stats::labels_from_json(all);
  Json out{{"alpha", stats::to_json(stats::krippendorff_alpha(labels))}};
  if (have_codebook_) out["frequencies"] = stats::to_json(stats::label_frequencies(labels, codebook_));
  return ok(out);
}

}  // namespace scamsim::service
