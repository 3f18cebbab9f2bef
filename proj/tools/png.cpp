#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "cli.hpp"
#include "rwcp/error.hpp"
#include "rwcp/morphology.hpp"

namespace rwcp::cli {

void write_overlay_png(const ProbMap& prob, const BinaryMask& set,
                       const std::optional<BinaryMask>& truth, const std::string& path) {
  const std::size_t h = prob.height();
  const std::size_t w = prob.width();
  std::vector<png_byte> rgb(h * w * 3);
  for (std::size_t i = 0; i < h * w; ++i) {
    const auto g = static_cast<png_byte>(prob[i] * 255.0 + 0.5);
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = g;
  }
  auto paint = [&](const BinaryMask& m, png_byte r, png_byte g, png_byte b) {
    if (m.empty()) return;
    const BinaryMask edge = extract_contour(m);
    for (std::size_t i = 0; i < h * w; ++i) {
      if (!edge[i]) continue;
      rgb[3 * i] = r;
      rgb[3 * i + 1] = g;
      rgb[3 * i + 2] = b;
    }
  };
  if (truth && truth->same_shape(set)) paint(*truth, 0, 0, 255);
  paint(set, 255, 0, 0);

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorKind::IoFailure, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoFailure, "libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < h; ++r) png_write_row(png, rgb.data() + r * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace rwcp::cli
