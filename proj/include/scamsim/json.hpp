#pragma once

#include <json.hpp>  // vendored nlohmann/json

namespace scamsim {

// Insertion-ordered so serialized documents keep a stable field order.
using Json = nlohmann::ordered_json;

}  // namespace scamsim
