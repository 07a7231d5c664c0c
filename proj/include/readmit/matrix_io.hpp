#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "readmit/matrix.hpp"

// Binary matrix file: magic "CGEMB1", u64 rows, u64 cols, then rows*cols
// little-endian IEEE-754 float32 values in row-major order.
namespace readmit::matrix_io {

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// Row id list stored next to a matrix file: one decimal id per line.
void write_ids(const std::filesystem::path& path, const std::vector<std::int64_t>& ids);
std::vector<std::int64_t> read_ids(const std::filesystem::path& path);

// Little-endian primitives shared with the graph format.
void put_u64(std::vector<unsigned char>& out, std::uint64_t v);
std::uint64_t get_u64(const unsigned char* p);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace readmit::matrix_io
