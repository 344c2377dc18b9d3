#pragma once

#include <string>
#include <string_view>

namespace philokit::io {

/// Whole file as bytes. Throws IoError.
std::string read_text(const std::string& path);
/// Replaces the file. Throws IoError.
void write_text(const std::string& path, std::string_view content);

}  // namespace philokit::io
