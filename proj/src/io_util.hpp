#pragma once

#include <filesystem>
#include <string>

namespace fdtr::detail {

/// Shortest decimal text that reads back to the same double ("nan" for NaN).
std::string num(double v);

/// Throws Error{Io}.
void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

}  // namespace fdtr::detail
