#pragma once

#include <filesystem>
#include <string>

#include "scamsim/service/platform.hpp"

namespace scamsim::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Serves a built web client at "/" when set.
  std::filesystem::path static_dir;
};

/// Blocks serving HTTP until the process is stopped. Throws IoError when the
/// socket cannot be bound.
void serve(Platform& platform, const ServerOptions& options);

}  // namespace scamsim::service
