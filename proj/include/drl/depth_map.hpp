#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace drl {

// Row-major raster of metric depth in meters plus a per-pixel validity mask.
// Valid pixels hold a finite value strictly greater than zero; invalid
// pixels are ignored by every metric and every fusion rule.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;

  DepthMap(int w, int h)
      : width(w),
        height(h),
        values(static_cast<std::size_t>(w) * h, 0.0f),
        valid(static_cast<std::size_t>(w) * h, 0) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("DepthMap: degenerate dimensions");
  }

  static DepthMap constant(int w, int h, float v) {
    DepthMap m(w, h);
    std::fill(m.values.begin(), m.values.end(), v);
    bool ok = std::isfinite(v) && v > 0.0f;
    std::fill(m.valid.begin(), m.valid.end(), static_cast<std::uint8_t>(ok ? 1 : 0));
    return m;
  }

  std::size_t size() const { return values.size(); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }

  float at(int x, int y) const { return values[index(x, y)]; }
  float& at(int x, int y) { return values[index(x, y)]; }

  bool is_valid(std::size_t i) const {
    return valid[i] != 0 && std::isfinite(values[i]) && values[i] > 0.0f;
  }

  bool same_shape(const DepthMap& o) const {
    return width == o.width && height == o.height;
  }
};

// Pixelwise AND of validity; any non-finite or non-positive value counts as
// invalid regardless of the stored mask bit.
inline std::vector<std::uint8_t> joint_valid_mask(const DepthMap& a, const DepthMap& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("joint_valid_mask: dimension mismatch");
  std::vector<std::uint8_t> mask(a.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = static_cast<std::uint8_t>(a.is_valid(i) && b.is_valid(i));
  }
  return mask;
}

}  // namespace drl
