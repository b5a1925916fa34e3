#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "drl/depth_map.hpp"

namespace drl {

// Single-channel PFM: "Pf", then "<width> <height>", then "<scale>" where a
// negative scale marks little-endian payload, followed by width*height
// 32-bit floats in row-major, bottom-to-top scanline order. Invalid pixels
// are stored as NaN.

namespace detail {

inline float byteswap_f32(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
  std::memcpy(&v, &u, 4);
  return v;
}

constexpr bool host_little_endian() {
  return std::endian::native == std::endian::little;
}

}  // namespace detail

inline void write_raster(const DepthMap& map, const std::string& path) {
  if (map.width <= 0 || map.height <= 0 || map.size() != map.valid.size()) {
    throw std::invalid_argument("write_raster: malformed depth map");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_raster: cannot open " + path);

  out << "Pf\n" << map.width << " " << map.height << "\n";
  out << (detail::host_little_endian() ? "-1.0" : "1.0") << "\n";

  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::vector<float> row(static_cast<std::size_t>(map.width));
  for (int y = map.height - 1; y >= 0; --y) {
    for (int x = 0; x < map.width; ++x) {
      std::size_t i = map.index(x, y);
      row[static_cast<std::size_t>(x)] = map.valid[i] ? map.values[i] : nan;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write_raster: short write to " + path);
}

inline DepthMap read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_raster: cannot open " + path);

  std::string magic;
  long long w = 0, h = 0;
  double scale = 0.0;
  if (!(in >> magic)) throw std::runtime_error("read_raster: malformed header in " + path);
  if (magic != "Pf") {
    throw std::runtime_error("read_raster: expected single-channel 'Pf' magic in " + path);
  }
  if (!(in >> w >> h >> scale)) {
    throw std::runtime_error("read_raster: malformed header in " + path);
  }
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20) || w * h > (1ll << 28)) {
    throw std::runtime_error("read_raster: bad dimensions in " + path);
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw std::runtime_error("read_raster: bad scale in " + path);
  }
  // Exactly one whitespace byte terminates the header.
  in.get();
  if (!in) throw std::runtime_error("read_raster: malformed header in " + path);

  const bool file_little = scale < 0.0;
  const bool swap = file_little != detail::host_little_endian();

  DepthMap map(static_cast<int>(w), static_cast<int>(h));
  std::vector<float> row(static_cast<std::size_t>(w));
  for (long long y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(float))) {
      throw std::runtime_error("read_raster: truncated payload in " + path);
    }
    for (long long x = 0; x < w; ++x) {
      float v = row[static_cast<std::size_t>(x)];
      if (swap) v = detail::byteswap_f32(v);
      std::size_t i = map.index(static_cast<int>(x), static_cast<int>(y));
      map.values[i] = v;
      map.valid[i] = static_cast<std::uint8_t>(std::isfinite(v) && v > 0.0f);
    }
  }
  return map;
}

}  // namespace drl
