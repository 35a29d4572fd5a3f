#include "scorelab/ppm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "scorelab/errors.hpp"

namespace scorelab::cli {

namespace {

struct Color {
  unsigned char r, g, b;
};

constexpr Color kPalette[] = {
    {214, 39, 40},  {31, 119, 180}, {44, 160, 44},  {255, 127, 14},
    {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {23, 190, 207},
};
constexpr int kPaletteSize = static_cast<int>(sizeof(kPalette) / sizeof(Color));

}  // namespace

void write_scatter_ppm(const std::string& path,
                       const std::vector<double>& points_xy,
                       const std::vector<int>& color_ids, int width,
                       int height) {
  if (width < 1 || height < 1)
    throw ConfigError("ppm: image dimensions must be positive");
  const std::size_t n = color_ids.size();
  if (points_xy.size() != 2 * n)
    throw DimensionError("ppm: points/color size mismatch");

  double lo_x = -1.0, hi_x = 1.0, lo_y = -1.0, hi_y = 1.0;
  if (n > 0) {
    lo_x = hi_x = points_xy[0];
    lo_y = hi_y = points_xy[1];
    for (std::size_t i = 0; i < n; ++i) {
      lo_x = std::min(lo_x, points_xy[2 * i]);
      hi_x = std::max(hi_x, points_xy[2 * i]);
      lo_y = std::min(lo_y, points_xy[2 * i + 1]);
      hi_y = std::max(hi_y, points_xy[2 * i + 1]);
    }
    const double pad_x = 0.05 * std::max(hi_x - lo_x, 1e-9);
    const double pad_y = 0.05 * std::max(hi_y - lo_y, 1e-9);
    lo_x -= pad_x, hi_x += pad_x;
    lo_y -= pad_y, hi_y += pad_y;
  }

  std::vector<Color> canvas(static_cast<std::size_t>(width) * height,
                            Color{255, 255, 255});
  const auto plot = [&](double x, double y, const Color& c) {
    const int px = static_cast<int>(
        std::floor((x - lo_x) / (hi_x - lo_x) * (width - 1) + 0.5));
    const int py = static_cast<int>(
        std::floor((hi_y - y) / (hi_y - lo_y) * (height - 1) + 0.5));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int qx = px + dx, qy = py + dy;
        if (qx < 0 || qx >= width || qy < 0 || qy >= height) continue;
        canvas[static_cast<std::size_t>(qy) * width + qx] = c;
      }
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(points_xy[2 * i]) || !std::isfinite(points_xy[2 * i + 1]))
      continue;
    plot(points_xy[2 * i], points_xy[2 * i + 1],
         kPalette[((color_ids[i] % kPaletteSize) + kPaletteSize) % kPaletteSize]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("ppm: cannot open '" + path + "'");
  out << "P3\n" << width << " " << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Color& c = canvas[static_cast<std::size_t>(y) * width + x];
      out << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b);
      out << (x + 1 == width ? '\n' : ' ');
    }
  }
}

}  // namespace scorelab::cli
