#include <optional>
#include <string_view>

#include "lama/llm_backend.hpp"

namespace lama {
namespace {

// End (exclusive) of the bracketed value starting at `open`, honoring JSON
// string literals; npos when unbalanced.
std::size_t matching_close(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '[':
      case '{': ++depth; break;
      case ']':
      case '}':
        if (--depth == 0) return i + 1;
        if (depth < 0) return std::string_view::npos;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> extract_json_array(std::string_view text) {
  for (std::size_t pos = text.find('['); pos != std::string_view::npos;
       pos = text.find('[', pos + 1)) {
    const std::size_t end = matching_close(text, pos);
    if (end == std::string_view::npos) continue;
    auto parsed = nlohmann::json::parse(text.substr(pos, end - pos), nullptr,
                                        /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_array()) return parsed;
  }
  return std::nullopt;
}

}  // namespace lama
