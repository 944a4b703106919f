#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace speechmark {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

/// First eight digest bytes as a little-endian integer. Used to key
/// deterministic per-text random streams.
std::uint64_t sha256_seed64(std::string_view data);

}  // namespace speechmark
