#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace airtran {

/// Atomically replaces `path` with `contents` (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace airtran
