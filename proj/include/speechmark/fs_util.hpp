#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace speechmark {

std::string read_file(const std::filesystem::path& path);

/// Write-to-temp then rename, so concurrent writers of the same cache entry
/// never expose a partial file. Creates parent directories.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace speechmark
