#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slr/tensor.hpp"

namespace slr {

// SLRT tensor file:
//   magic "SLRT" | u16 version=1 | u8 dtype (1=f32, 2=f64, 3=u8) | u8 ndim |
//   ndim x u32 dims | row-major payload. All integers little-endian.
// Readers reject payloads whose length does not match product(dims) * size.
//
// SLRT archive (checkpoints):
//   magic "SLRA" | u16 version=1 | u32 index_len | index JSON | payload blob.
// The index is a JSON array of {name, dtype, dims, offset}; offsets are
// relative to the start of the payload blob.

enum class Dtype : uint8_t { F32 = 1, F64 = 2, U8 = 3 };

size_t dtype_size(Dtype d);

struct SlrtTensor {
    std::string name;  // only meaningful inside archives
    Dtype dtype = Dtype::F32;
    std::vector<uint32_t> dims;

    // Exactly one of these is populated, matching dtype.
    std::vector<float> f32;
    std::vector<double> f64;
    std::vector<uint8_t> u8;

    size_t element_count() const;
};

void write_slrt(const std::string& path, const SlrtTensor& t);
SlrtTensor read_slrt(const std::string& path);

void write_slrt_archive(const std::string& path, const std::vector<SlrtTensor>& tensors);
std::vector<SlrtTensor> read_slrt_archive(const std::string& path);

// Field/Grid conversions used throughout the pipeline. Field tensors are
// stored [H, W, C]; grids [H, W].
SlrtTensor to_f32_tensor(const Field<double>& f);
SlrtTensor to_f32_tensor(const Grid<double>& g);
Field<double> field_from_tensor(const SlrtTensor& t);
Grid<double> grid_from_tensor(const SlrtTensor& t);

}  // namespace slr
