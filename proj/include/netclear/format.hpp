#pragma once

#include <filesystem>
#include <string>

namespace netclear {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace netclear
