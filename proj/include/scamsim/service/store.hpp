#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace scamsim::service {

enum class Collection { Sessions, Events, Responses, Labels, Invites };
std::string_view to_string(Collection c);

struct StoredRecord {
  Collection collection = Collection::Sessions;
  std::string key;
  std::string document;
  std::uint64_t version = 0;
};

/// Document store with optimistic concurrency. `put` with an expected version
/// fails with VersionConflict unless the stored version matches (0 = absent).
class DocumentStore {
 public:
  virtual ~DocumentStore() = default;
  virtual std::optional<StoredRecord> get(Collection c, const std::string& key) = 0;
  virtual std::uint64_t put(Collection c, const std::string& key, const std::string& document,
                            std::optional<std::uint64_t> expected_version) = 0;
  virtual std::vector<std::string> keys(Collection c) = 0;
};

class MemoryStore final : public DocumentStore {
 public:
  std::optional<StoredRecord> get(Collection c, const std::string& key) override;
  std::uint64_t put(Collection c, const std::string& key, const std::string& document,
                    std::optional<std::uint64_t> expected_version) override;
  std::vector<std::string> keys(Collection c) override;

 private:
  std::mutex mu_;
  std::map<std::pair<Collection, std::string>, StoredRecord> records_;
};

/// One file per record under <root>/<collection>/, replaced atomically by rename.
class FileStore final : public DocumentStore {
 public:
  explicit FileStore(std::filesystem::path root);

  std::optional<StoredRecord> get(Collection c, const std::string& key) override;
  std::uint64_t put(Collection c, const std::string& key, const std::string& document,
                    std::optional<std::uint64_t> expected_version) override;
  std::vector<std::string> keys(Collection c) override;

 private:
  std::filesystem::path path_for(Collection c, const std::string& key) const;

  std::filesystem::path root_;
  std::mutex mu_;
};

/// "memory" or a directory path (optionally prefixed "file:").
std::unique_ptr<DocumentStore> open_store(const std::string& location);

}  // namespace scamsim::service
