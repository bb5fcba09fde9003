#pragma once

#include <string>
#include <vector>

#include "lss/tensor.hpp"

namespace lss {

// Tensor container: magic "LST1", u32 rank, rank x u32 dims, then the
// payload as little-endian float64 in row-major order.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// 8-bit binary PGM (P5). Returns the min/max used for the affine mapping so
// reports can record how gray levels relate to field values.
struct PgmMapping {
    double lo = 0.0;
    double hi = 0.0;
};
PgmMapping save_pgm(const std::string& path, const Tensor& image);  // [1,h,w] or [h,w]

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lss
