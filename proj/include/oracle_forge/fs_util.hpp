#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace oracle_forge {

// Throws IoError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and rename(2), so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace oracle_forge
