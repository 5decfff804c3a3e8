#pragma once

// Little-endian binary artifacts.
//
//   matrix file:  "PVDM" | u32 rows | u32 cols | rows*cols f32, row-major
//   ranker file:  "RNKR" | u32 m | u32 d_q | u32 d_r | u8 activation |
//                 W (m * d_q * d_r f32) | b (m f32) | s (m f32) | c (f32)
//
// Readers throw LoadError naming the file on bad magic, short reads or
// trailing bytes.

#include <cstdint>
#include <filesystem>
#include <string>

#include "stc/matrix.hpp"
#include "stc/ranker.hpp"

namespace stc {

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

void write_ranker(const std::filesystem::path& path, const RankerParams& params);
RankerParams read_ranker(const std::filesystem::path& path);

/// FNV-1a 64 of the file contents, as 16 lowercase hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace stc
