#include "readmit/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "readmit/error.hpp"

namespace readmit::matrix_io {

namespace {
constexpr char kMagic[6] = {'C', 'G', 'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 6 + 8 + 8;
}  // namespace

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::vector<unsigned char> bytes(kMagic, kMagic + 6);
  bytes.reserve(kHeaderBytes + 4 * m.size());
  put_u64(bytes, m.rows);
  put_u64(bytes, m.cols);
  for (double v : m.data) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  write_file(path, bytes);
}

Matrix read_matrix(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    fail(ErrorKind::Corruption, path.string() + ": not a CGEMB1 matrix file");
  }
  const std::uint64_t rows = get_u64(bytes.data() + 6);
  const std::uint64_t cols = get_u64(bytes.data() + 14);
  if (cols != 0 && rows > (bytes.size() - kHeaderBytes) / 4 / cols) {
    fail(ErrorKind::Corruption, path.string() + ": truncated matrix data");
  }
  if (bytes.size() != kHeaderBytes + 4 * rows * cols) {
    fail(ErrorKind::Corruption, path.string() + ": size does not match header");
  }
  Matrix m(rows, cols);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < m.size(); ++i, p += 4) {
    std::uint32_t bits = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    m.data[i] = std::bit_cast<float>(bits);
  }
  return m;
}

void write_ids(const std::filesystem::path& path, const std::vector<std::int64_t>& ids) {
  std::ofstream out(path, std::ios::binary);
  for (auto id : ids) out << id << '\n';
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

std::vector<std::int64_t> read_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  std::vector<std::int64_t> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(line, &used));
      if (used != line.size()) throw std::invalid_argument(line);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ":1: bad id '" + line + "'");
    }
  }
  return ids;
}

}  // namespace readmit::matrix_io
