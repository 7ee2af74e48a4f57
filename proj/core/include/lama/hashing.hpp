#pragma once

#include <string>
#include <string_view>

namespace lama {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// ASCII case fold; non-ASCII bytes pass through unchanged.
std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace lama
