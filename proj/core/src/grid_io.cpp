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

#include "bevmotion/grid_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

constexpr std::array<char, 8> kMagic = {'B', 'V', 'G', '1', '\0', '\0', '\0', '\0'};

void read_exact(std::istream & in, std::uint8_t * dst, std::size_t n, const char * what)
{
  in.read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw InputError(std::string("BVG1: truncated ") + what);
  }
}

}  // namespace

void put_u32(std::vector<std::uint8_t> & buf, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_u64(std::vector<std::uint8_t> & buf, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_f64(std::vector<std::uint8_t> & buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

void put_f32(std::vector<std::uint8_t> & buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> buf, std::size_t offset)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(buf[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> buf, std::size_t offset)
{
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(buf[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

double get_f64(std::span<const std::uint8_t> buf, std::size_t offset)
{
  return std::bit_cast<double>(get_u64(buf, offset));
}

float get_f32(std::span<const std::uint8_t> buf, std::size_t offset)
{
  return std::bit_cast<float>(get_u32(buf, offset));
}

std::size_t bvg_byte_size(const GridConfig & config)
{
  const GridShape s = grid_shape(config);
  return kBvgHeaderBytes + kBvgConfigBytes + 8 * ((s.cell_count() + 63) / 64);
}

void write_bvg(std::ostream & out, const BevGrid & grid)
{
  const GridConfig & c = grid.config();
  std::vector<std::uint8_t> head;
  head.reserve(kBvgHeaderBytes + kBvgConfigBytes);
  head.insert(head.end(), kMagic.begin(), kMagic.end());
  put_u64(head, kBvgVersion);
  for (const double v : {c.length_m, c.width_m, c.height_m, c.dl, c.dw, c.dv}) {
    put_f64(head, v);
  }
  put_u64(head, static_cast<std::uint64_t>(c.num_sweeps));
  out.write(reinterpret_cast<const char *>(head.data()), static_cast<std::streamsize>(head.size()));

  // Stream the payload in blocks to avoid doubling peak memory for large grids.
  const auto words = grid.words();
  std::vector<std::uint8_t> block;
  constexpr std::size_t kBlockWords = 8192;
  for (std::size_t i = 0; i < words.size(); i += kBlockWords) {
    block.clear();
    const std::size_t end = std::min(words.size(), i + kBlockWords);
    for (std::size_t k = i; k < end; ++k) {
      put_u64(block, words[k]);
    }
    out.write(reinterpret_cast<const char *>(block.data()), static_cast<std::streamsize>(block.size()));
  }
  if (!out) {
    throw RuntimeFailure("BVG1: write failed");
  }
}

void write_bvg(const std::filesystem::path & path, const BevGrid & grid)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot open '" + path.string() + "' for writing");
  }
  write_bvg(out, grid);
}

BevGrid read_bvg(std::istream & in)
{
  std::array<std::uint8_t, kBvgHeaderBytes + kBvgConfigBytes> head{};
  read_exact(in, head.data(), head.size(), "header");
  if (std::memcmp(head.data(), kMagic.data(), kMagic.size()) != 0) {
    throw InputError("BVG1: bad magic");
  }
  const std::span<const std::uint8_t> h(head);
  if (get_u64(h, 8) != kBvgVersion) {
    throw InputError("BVG1: unsupported version " + std::to_string(get_u64(h, 8)));
  }
  GridConfig c;
  c.length_m = get_f64(h, 16);
  c.width_m = get_f64(h, 24);
  c.height_m = get_f64(h, 32);
  c.dl = get_f64(h, 40);
  c.dw = get_f64(h, 48);
  c.dv = get_f64(h, 56);
  c.num_sweeps = static_cast<std::int64_t>(get_u64(h, 64));
  BevGrid grid(c);
  auto words = grid.mutable_words();
  std::vector<std::uint8_t> block;
  constexpr std::size_t kBlockWords = 8192;
  for (std::size_t i = 0; i < words.size(); i += kBlockWords) {
    const std::size_t end = std::min(words.size(), i + kBlockWords);
    block.resize(8 * (end - i));
    read_exact(in, block.data(), block.size(), "occupancy payload");
    for (std::size_t k = i; k < end; ++k) {
      words[k] = get_u64(block, 8 * (k - i));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError("BVG1: trailing bytes after payload");
  }
  return grid;
}

BevGrid read_bvg(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open '" + path.string() + "'");
  }
  return read_bvg(in);
}

}  // namespace bevmotion
