#pragma once

#include <cstdint>
#include <string>

#include "slr/tensor.hpp"

namespace slr {

// Binary PPM (P6) for RGB images with values in [0,1], 8 bits per channel,
// and binary PGM (P5) for class-id masks.

void write_ppm(const std::string& path, const Field<double>& rgb);
Field<double> read_ppm(const std::string& path);

void write_pgm(const std::string& path, const Grid<uint8_t>& ids);
Grid<uint8_t> read_pgm(const std::string& path);

}  // namespace slr
