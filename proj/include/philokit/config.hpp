#pragma once

// Plain-text run configuration: one key=value per line, '#' starts a comment.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace philokit::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Keys and values are trimmed; a key may not be empty. Throws ParseError.
KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::string& path);

/// "key=value" lines in the given order.
std::string format_key_values(const KeyValues& kv);

/// Each entry as a long option "--key=value"; an empty value becomes "--key" followed by "".
std::vector<std::string> to_arguments(const KeyValues& kv);

/// Comma-separated list of unsigned integers ("10,20,30").
std::vector<std::size_t> parse_size_list(std::string_view text);

}  // namespace philokit::config
