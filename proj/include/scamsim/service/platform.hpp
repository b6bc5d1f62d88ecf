#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "scamsim/error.hpp"
#include "scamsim/orchestrator.hpp"
#include "scamsim/service/store.hpp"
#include "scamsim/stats/reliability.hpp"

namespace scamsim::service {

struct PlatformConfig {
  std::filesystem::path pack_dir = "packs/default";
  std::filesystem::path codebook_path;  // optional, enables label frequency reports
  std::string store = "memory";
  std::string admin_token;
  AllocatorMode allocator = AllocatorMode::Uniform;
  QuizCadence cadence = QuizCadence::BeforeEachAdvice;
  // Seeds the allocator, session ids and session seeds for reproducible runs.
  std::optional<std::uint64_t> seed;
  std::string provider = "scripted";  // "scripted" | "remote"
  RemoteProviderConfig remote;
  bool allow_duplicate_participants = false;
  bool require_invites = false;
  std::size_t workers = 8;
  // Generation runs inline on the calling thread instead of the worker pool.
  bool synchronous = false;
  std::size_t advice_max_chars = 2000;
  std::int64_t abandon_timeout_ms = 60LL * 60 * 1000;
  std::int64_t long_poll_ms = 25000;
  OrchestratorOptions orchestrator;
  std::function<Timestamp()> clock;  // defaults to the system clock
};

/// Overlays SCAMSIM_* environment variables onto `base`.
PlatformConfig config_from_env(PlatformConfig base = {});

/// Reads the JSON form used by the C API and CLI; absent keys keep `base`.
/// Keys: pack_dir, store, admin_token, allocator, cadence, seed, provider,
/// remote{url,api_key,model,timeout_ms}, allow_duplicate_participants,
/// require_invites, workers, synchronous, advice_max_chars,
/// abandon_timeout_ms, long_poll_ms, feedback_whole_session,
/// refusal_fallback, refusal_retries, codebook_path.
PlatformConfig config_from_json(const Json& j, PlatformConfig base = {});

struct Request {
  std::string method;  // "GET" | "POST"
  std::string path;
  std::map<std::string, std::string> query;
  Json body = Json::object();
  std::string bearer;
};

struct Response {
  int status = 200;
  Json body = Json::object();
  // When set, sent verbatim instead of `body` (CSV export).
  std::optional<std::string> raw;
  std::string content_type = "application/json";
};

int http_status_for(ErrorCode code);

/// Every session document in a store, without starting a platform.
std::vector<Session> read_sessions(DocumentStore& store);

/// Transport-independent service: every endpoint is reachable through handle(),
/// which the HTTP server and the C API both wrap.
class Platform {
 public:
  explicit Platform(PlatformConfig config, std::shared_ptr<CompletionProvider> provider = nullptr,
                    std::unique_ptr<DocumentStore> store = nullptr);
  ~Platform();

  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  /// Never throws; errors become {"error": {...}} bodies.
  Response handle(const Request& request);

  const PromptPack& pack() const { return pack_; }
  const PackReport& pack_report() const { return pack_report_; }
  const PlatformConfig& config() const { return config_; }

  std::optional<Session> load_session(const std::string& id);
  std::vector<Session> all_sessions();

  /// Marks idle sessions abandoned; returns how many changed.
  std::size_t sweep_abandoned();

  /// Blocks until no generation job is queued or running.
  void drain();

 private:
  struct Stored {
    Session session;
    std::string token_hash;
    std::uint64_t version = 0;
  };

  Timestamp now() const;
  Timestamp now_for(const Session& s) const;

  std::optional<Stored> load(const std::string& id);
  void save(Stored& stored);
  std::shared_ptr<std::mutex> session_lock(const std::string& id);

  Stored authorize_participant(const std::string& id, const Request& req);
  void require_admin(const Request& req) const;

  Json step_view(const Session& s, std::optional<std::string> generation_error = std::nullopt) const;
  bool needs_generation(const Session& s) const;
  void schedule(const std::string& id);
  void run_job(const std::string& id);
  void stage_static(Session& s);
  void finish_mutation(Stored& stored);
  Json generated_content(const Session& s) const;

  Response create_session(const Request& req);
  Response get_step(const std::string& id, const Request& req);
  Response submit_survey(const std::string& id, const Request& req);
  Response complete_tutorial(const std::string& id, const Request& req);
  Response tutorial_watched(const std::string& id, const Request& req);
  Response acknowledge(const std::string& id, const Request& req);
  Response submit_quiz(const std::string& id, const Request& req);
  Response submit_advice(const std::string& id, const Request& req);
  Response internal_turn(const std::string& id, const std::string& kind, const Request& req);
  Response admin_session(const std::string& id, const Request& req);
  Response export_table_endpoint(const Request& req);
  Response export_transcripts_endpoint(const Request& req);
  Response pack_validate_endpoint(const Request& req);
  Response create_invites(const Request& req);
  Response put_labels(const Request& req);
  Response get_labels(const Request& req);
  Response labels_irr(const Request& req);

  std::string next_id();
  std::uint64_t next_seed();

  PlatformConfig config_;
  PromptPack pack_;
  PackReport pack_report_;
  std::shared_ptr<CompletionProvider> provider_;
  std::unique_ptr<DocumentStore> store_;

  std::mutex state_mu_;  // allocator, id rng, participant index, lock table
  ConditionAllocator allocator_;
  std::mt19937_64 id_rng_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::set<std::string> participants_;
  stats::Codebook codebook_;
  bool have_codebook_ = false;

  std::mutex jobs_mu_;
  std::condition_variable jobs_cv_;      // workers wait for work
  std::condition_variable progress_cv_;  // long-polls and drain wait for completions
  std::deque<std::string> queue_;
  std::set<std::string> pending_;  // session ids queued or running
  std::set<std::string> rerun_;    // scheduled again while already pending
  std::map<std::string, std::string> last_errors_;
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace scamsim::service
