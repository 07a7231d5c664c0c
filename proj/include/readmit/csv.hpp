#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace readmit::csv {

// RFC-4180 reader. Quoted fields may contain separators, doubled quotes and
// line breaks. Accepts LF and CRLF row terminators.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  // Reads the next record; false at end of input. Parse errors carry
  // file, line and column (1-based field position within the record).
  bool next(std::vector<std::string>& fields);

  // Line number (1-based) where the last returned record started.
  std::size_t line() const { return record_line_; }
  const std::filesystem::path& path() const { return path_; }

  [[noreturn]] void error(std::size_t column, const std::string& what) const;

 private:
  int get();
  int peek();

  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

// Maps a header row onto a fixed column list. Unknown or missing columns are
// parse errors naming the column.
class HeaderMap {
 public:
  HeaderMap(Reader& reader, std::initializer_list<std::string_view> expected);

  // Index into a record of the i-th expected column.
  std::size_t operator[](std::size_t i) const { return index_[i]; }
  std::size_t width() const { return index_.size(); }

 private:
  std::vector<std::size_t> index_;
};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void comment(std::string_view text);
  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields);
  // Flushes and closes; later rows are errors.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string quote(std::string_view field);

// Strict numeric conversions used by table readers.
long long to_int(const Reader& r, std::size_t column, const std::string& s);
double to_real(const Reader& r, std::size_t column, const std::string& s);

}  // namespace readmit::csv
