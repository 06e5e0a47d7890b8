#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace phgnn::io {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
/// Parses the whole token or throws; `context` names the source in the message.
double parse_double(std::string_view token, const std::string& context);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Replaces `target` with the fully-populated directory `staged` in one rename.
/// Without `force`, an existing target is an error and nothing is touched.
void commit_directory(const std::filesystem::path& staged, const std::filesystem::path& target, bool force);

/// A fresh empty directory next to `target` for staging outputs.
std::filesystem::path staging_directory(const std::filesystem::path& target);

}  // namespace phgnn::io
