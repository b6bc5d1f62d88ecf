#include "scamsim/service/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "scamsim/error.hpp"
#include "scamsim/json.hpp"

namespace scamsim::service {

namespace fs = std::filesystem;

std::string_view to_string(Collection c) {
  switch (c) {
    case Collection::Sessions: return "sessions";
    case Collection::Events: return "events";
    case Collection::Responses: return "responses";
    case Collection::Labels: return "labels";
    case Collection::Invites: return "invites";
  }
  return "sessions";
}

namespace {

[[noreturn]] void conflict(Collection c, const std::string& key, std::uint64_t expected, std::uint64_t actual) {
  fail(ErrorCode::VersionConflict, std::string(to_string(c)) + "/" + key + ": expected version " +
                                       std::to_string(expected) + ", found " + std::to_string(actual));
}

}  // namespace

std::optional<StoredRecord> MemoryStore::get(Collection c, const std::string& key) {
  std::lock_guard lock(mu_);
  const auto it = records_.find({c, key});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t MemoryStore::put(Collection c, const std::string& key, const std::string& document,
                               std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(mu_);
  auto& slot = records_[{c, key}];
  const std::uint64_t current = slot.version;
  if (expected_version && *expected_version != current) conflict(c, key, *expected_version, current);
  slot = StoredRecord{c, key, document, current + 1};
  return slot.version;
}

std::vector<std::string> MemoryStore::keys(Collection c) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, rec] : records_) {
    if (k.first == c && rec.version > 0) out.push_back(k.second);
  }
  return out;
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  for (Collection c : {Collection::Sessions, Collection::Events, Collection::Responses, Collection::Labels,
                       Collection::Invites}) {
    std::error_code ec;
    fs::create_directories(root_ / std::string(to_string(c)), ec);
    if (ec) fail(ErrorCode::IoError, "cannot create store directory: " + ec.message());
  }
}

fs::path FileStore::path_for(Collection c, const std::string& key) const {
  for (char ch : key) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '-' || ch == '_' || ch == '.';
    if (!ok || key.empty() || key[0] == '.') fail(ErrorCode::InvalidArgument, "invalid store key '" + key + "'");
  }
  return root_ / std::string(to_string(c)) / (key + ".json");
}

namespace {

std::optional<StoredRecord> read_record(const fs::path& path, Collection c, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const Json j = Json::parse(ss.str());
    return StoredRecord{c, key, j.at("document").get<std::string>(), j.at("version").get<std::uint64_t>()};
  } catch (const Json::exception& ex) {
    fail(ErrorCode::IoError, "corrupt record " + path.string() + ": " + ex.what());
  }
}

}  // namespace

std::optional<StoredRecord> FileStore::get(Collection c, const std::string& key) {
  const auto path = path_for(c, key);
  std::lock_guard lock(mu_);
  return read_record(path, c, key);
}

std::uint64_t FileStore::put(Collection c, const std::string& key, const std::string& document,
                             std::optional<std::uint64_t> expected_version) {
  const auto path = path_for(c, key);
  std::lock_guard lock(mu_);
  const auto existing = read_record(path, c, key);
  const std::uint64_t current = existing ? existing->version : 0;
  if (expected_version && *expected_version != current) conflict(c, key, *expected_version, current);
  const std::uint64_t next = current + 1;
  const Json j{{"version", next}, {"document", document}};
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out << j.dump();
    out.flush();
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
  return next;
}

std::vector<std::string> FileStore::keys(Collection c) {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / std::string(to_string(c)))) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::unique_ptr<DocumentStore> open_store(const std::string& location) {
  if (location.empty() || location == "memory") return std::make_unique<MemoryStore>();
  const std::string path = location.rfind("file:", 0) == 0 ? location.substr(5) : location;
  return std::make_unique<FileStore>(path);
}

}  // namespace scamsim::service
