#include "bathyscope/util/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bathyscope {

void write_png_rgb8(const std::string& path, int64_t width, int64_t height,
                    const std::vector<unsigned char>& data) {
  if (static_cast<int64_t>(data.size()) != 3 * width * height)
    throw std::invalid_argument("write_png_rgb8: buffer size mismatch");

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("png write failed: " + path);
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<size_t>(height));
  for (int64_t y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(&data[static_cast<size_t>(3 * y * width)]);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

namespace {

// Five-stop ocean ramp: deep blue -> teal -> green -> yellow.
void ramp_color(double v, unsigned char* rgb) {
  static const double stops[5][3] = {{13, 8, 60},     {28, 64, 141},  {33, 144, 140},
                                     {93, 201, 99},   {253, 231, 37}};
  v = std::clamp(v, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(v));
  const double f = v - i;
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<unsigned char>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
}

}  // namespace

void write_heatmap_png(const std::string& path, const torch::Tensor& grid_hw) {
  if (grid_hw.dim() != 2) throw std::invalid_argument("write_heatmap_png: expected [H,W]");
  auto g = grid_hw.to(torch::kFloat64).contiguous();
  const int64_t h = g.size(0), w = g.size(1);
  const double lo = g.min().item<double>();
  const double hi = g.max().item<double>();
  const double span = hi - lo > 0 ? hi - lo : 1.0;

  std::vector<unsigned char> rgb(static_cast<size_t>(3 * h * w));
  auto acc = g.accessor<double, 2>();
  for (int64_t i = 0; i < h; ++i)
    for (int64_t j = 0; j < w; ++j)
      ramp_color((acc[i][j] - lo) / span, &rgb[static_cast<size_t>(3 * (i * w + j))]);
  write_png_rgb8(path, w, h, rgb);
}

void write_depth_bin_chart_png(const std::string& path, const DepthBinReport& report) {
  const int64_t w = 640, h = 360, ml = 40, mb = 30, mt = 15, mr = 15;
  std::vector<unsigned char> img(static_cast<size_t>(3 * w * h), 255);
  auto put = [&](int64_t x, int64_t y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    auto* p = &img[static_cast<size_t>(3 * (y * w + x))];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  };

  const int64_t n = static_cast<int64_t>(report.rows.size());
  if (n > 0) {
    int64_t max_count = 1;
    double max_mae = 1e-9;
    for (const auto& r : report.rows) {
      max_count = std::max(max_count, r.count);
      if (r.mae_m) max_mae = std::max(max_mae, *r.mae_m);
    }
    const double plot_w = static_cast<double>(w - ml - mr);
    const double plot_h = static_cast<double>(h - mt - mb);
    const double bar_w = plot_w / static_cast<double>(n);

    // count bars (light blue)
    for (int64_t i = 0; i < n; ++i) {
      const auto& r = report.rows[static_cast<size_t>(i)];
      const auto bh = static_cast<int64_t>(plot_h * static_cast<double>(r.count) / static_cast<double>(max_count));
      const auto x0 = static_cast<int64_t>(ml + i * bar_w + 1);
      const auto x1 = static_cast<int64_t>(ml + (i + 1) * bar_w - 1);
      for (int64_t x = x0; x <= x1; ++x)
        for (int64_t y = h - mb - bh; y < h - mb; ++y) put(x, y, 173, 216, 230);
    }
    // MAE polyline (orange)
    int64_t px = -1, py = -1;
    for (int64_t i = 0; i < n; ++i) {
      const auto& r = report.rows[static_cast<size_t>(i)];
      if (!r.mae_m) continue;
      const auto x = static_cast<int64_t>(ml + (i + 0.5) * bar_w);
      const auto y = static_cast<int64_t>(h - mb - plot_h * (*r.mae_m / max_mae));
      if (px >= 0) {
        const int64_t steps = std::max<int64_t>(std::llabs(x - px), std::llabs(y - py)) + 1;
        for (int64_t s = 0; s <= steps; ++s) {
          const auto xi = px + (x - px) * s / steps;
          const auto yi = py + (y - py) * s / steps;
          put(xi, yi, 230, 126, 34);
          put(xi, yi + 1, 230, 126, 34);
        }
      }
      px = x;
      py = y;
    }
  }
  // axes
  for (int64_t x = ml; x < w - mr; ++x) put(x, h - mb, 0, 0, 0);
  for (int64_t y = mt; y <= h - mb; ++y) put(ml, y, 0, 0, 0);

  write_png_rgb8(path, w, h, img);
}

}  // namespace bathyscope
