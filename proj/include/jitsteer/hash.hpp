#pragma once

#include <string>
#include <string_view>

namespace jitsteer {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);

/// Throws Error(InvalidArgument) on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace jitsteer
