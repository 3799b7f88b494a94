#pragma once

#include <string>
#include <string_view>

namespace dualtune {

// Hex-encoded SHA-256. Used for cache keys, prompt registration checks and
// run identifiers; everything content-addressed goes through here.
std::string sha256_hex(std::string_view data);

// First 16 hex chars of sha256_hex, for short human-facing identifiers.
std::string short_digest(std::string_view data);

}  // namespace dualtune
