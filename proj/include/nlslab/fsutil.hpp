#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nlslab {

// Whole-file write via temp-then-rename in the target directory; readers
// never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace nlslab
