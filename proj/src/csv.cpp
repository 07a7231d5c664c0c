#include "readmit/csv.hpp"

#include <charconv>

#include "readmit/error.hpp"

namespace readmit::csv {

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorKind::Parse, path.string() + ": cannot open file");
}

int Reader::get() {
  int c = in_.get();
  if (c == '\n') ++line_;
  return c;
}

int Reader::peek() { return in_.peek(); }

void Reader::error(std::size_t column, const std::string& what) const {
  fail(ErrorKind::Parse, path_.string() + ":" + std::to_string(record_line_) + ":" +
                             std::to_string(column) + ": " + what);
}

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  // Lines starting with '#' outside a record are comments.
  while (peek() == '#') {
    int c;
    do {
      c = get();
    } while (c != '\n' && c != EOF);
  }
  if (peek() == EOF) return false;
  record_line_ = line_;

  std::string field;
  bool quoted = false;
  bool after_quote = false;
  std::size_t field_no = 1;
  for (;;) {
    int c = get();
    if (quoted) {
      if (c == EOF) {
        fail(ErrorKind::Parse, path_.string() + ":" + std::to_string(record_line_) + ":" +
                                   std::to_string(field_no) + ": unterminated quoted field");
      }
      if (c == '"') {
        if (peek() == '"') {
          get();
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
      ++field_no;
      continue;
    }
    if (c == '\r' && peek() == '\n') continue;
    if (c == '\n' || c == EOF) {
      fields.push_back(std::move(field));
      return true;
    }
    if (after_quote) error(field_no, "unexpected character after closing quote");
    if (c == '"') {
      if (!field.empty()) error(field_no, "quote inside unquoted field");
      quoted = true;
      continue;
    }
    field.push_back(static_cast<char>(c));
  }
}

HeaderMap::HeaderMap(Reader& reader, std::initializer_list<std::string_view> expected) {
  std::vector<std::string> header;
  if (!reader.next(header)) {
    fail(ErrorKind::Parse, reader.path().string() + ":1:1: missing header row");
  }
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  index_.assign(expected.size(), kUnset);
  for (std::size_t h = 0; h < header.size(); ++h) {
    const std::size_t column = h + 1;
    std::size_t pos = 0;
    for (auto name : expected) {
      if (name == header[h]) break;
      ++pos;
    }
    if (pos == expected.size()) reader.error(column, "unknown column '" + header[h] + "'");
    if (index_[pos] != kUnset) reader.error(column, "duplicate column '" + header[h] + "'");
    index_[pos] = h;
  }
  std::size_t i = 0;
  for (auto name : expected) {
    if (index_[i++] == kUnset) reader.error(1, "missing column '" + std::string(name) + "'");
  }
}

Writer::Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
}

void Writer::comment(std::string_view text) { out_ << "# " << text << '\n'; }

void Writer::row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << quote(fields[i]);
  }
  out_ << '\n';
  if (!out_) fail(ErrorKind::Io, path_.string() + ": write failed");
}

void Writer::row(std::initializer_list<std::string> fields) {
  row(std::span<const std::string>(fields.begin(), fields.size()));
}

void Writer::close() {
  out_.close();
  if (!out_) fail(ErrorKind::Io, path_.string() + ": write failed");
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

long long to_int(const Reader& r, std::size_t column, const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    r.error(column, "expected integer, got '" + s + "'");
  }
  return v;
}

double to_real(const Reader& r, std::size_t column, const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    r.error(column, "expected number, got '" + s + "'");
  }
  return v;
}

}  // namespace readmit::csv
