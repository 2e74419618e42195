// Copyright 2026 The bevmotion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BEVMOTION__GRID_IO_HPP_
#define BEVMOTION__GRID_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "bevmotion/raster.hpp"

namespace bevmotion
{

// BVG1 layout (all little-endian):
//   [0, 8)    magic "BVG1\0\0\0\0"
//   [8, 16)   u64 format version (1)
//   [16, 72)  f64 length_m, width_m, height_m, dl, dw, dv; i64 num_sweeps
//   [72, ...) u64 occupancy words, ceil(rows * cols * channels / 64) of them
inline constexpr std::uint64_t kBvgVersion = 1;
inline constexpr std::size_t kBvgHeaderBytes = 16;
inline constexpr std::size_t kBvgConfigBytes = 56;

/// Exact file size of a BVG1 file for `config`.
std::size_t bvg_byte_size(const GridConfig & config);

void write_bvg(std::ostream & out, const BevGrid & grid);
void write_bvg(const std::filesystem::path & path, const BevGrid & grid);
/// Throws InputError on bad magic, version, truncated payload or trailing bytes.
BevGrid read_bvg(std::istream & in);
BevGrid read_bvg(const std::filesystem::path & path);

// Little-endian helpers shared by the binary formats.
void put_u32(std::vector<std::uint8_t> & buf, std::uint32_t v);
void put_u64(std::vector<std::uint8_t> & buf, std::uint64_t v);
void put_f64(std::vector<std::uint8_t> & buf, double v);
void put_f32(std::vector<std::uint8_t> & buf, float v);
std::uint32_t get_u32(std::span<const std::uint8_t> buf, std::size_t offset);
std::uint64_t get_u64(std::span<const std::uint8_t> buf, std::size_t offset);
double get_f64(std::span<const std::uint8_t> buf, std::size_t offset);
float get_f32(std::span<const std::uint8_t> buf, std::size_t offset);

}  // namespace bevmotion

#endif  // BEVMOTION__GRID_IO_HPP_
