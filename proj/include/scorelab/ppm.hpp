#pragma once

#include <string>
#include <vector>

namespace scorelab::cli {

// Renders 2-D points as a scatter plot in the plain (P3) portable-pixmap
// format; color_ids select from a small fixed palette. Output is exactly
// width x height pixels.
void write_scatter_ppm(const std::string& path,
                       const std::vector<double>& points_xy,  // n*2
                       const std::vector<int>& color_ids,     // n
                       int width, int height);

}  // namespace scorelab::cli
