#include "philokit/config.hpp"

#include <charconv>

#include "philokit/error.hpp"
#include "philokit/forge.hpp"
#include "philokit/io.hpp"

namespace philokit::config {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  for (const auto& raw : forge::split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (key.substr(0, 2) == "--") key.remove_prefix(2);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  try {
    return parse_key_values(io::read_text(path));
  } catch (const ParseError& e) {
    throw IoError(path, e.what());
  }
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::vector<std::string> to_arguments(const KeyValues& kv) {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv) {
    // "--key=" would make the parser take the next argument as the value.
    if (v.empty()) {
      out.push_back("--" + k);
      out.emplace_back();
    } else {
      out.push_back("--" + k + "=" + v);
    }
  }
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string_view item =
        trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size())
      throw Error("expected a comma-separated list of non-negative integers, got '" +
                  std::string(text) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace philokit::config
