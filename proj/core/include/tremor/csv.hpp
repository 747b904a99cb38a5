#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tremor::csv {

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Parses one finite decimal cell; kParse errors name the 1-based row and column.
double parse_double(std::string_view cell, std::size_t row, std::size_t column);

/// Shortest decimal text that round-trips to the same double.
std::string format(double value);

/// Line-oriented reader that strips a trailing '\r' and skips blank lines.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  bool next(std::string& line);
  std::size_t line_number() const noexcept { return line_number_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

/// Opens a file for writing, creating parent directories; kIo on failure.
std::ofstream open_for_write(const std::filesystem::path& path);

}  // namespace tremor::csv
