#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace langadapt {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over the target so
// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace langadapt
