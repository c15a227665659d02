#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manga/errors.hpp"
#include "manga/geometry.hpp"

namespace manga {

// 8-bit grayscale raster, row-major, origin top-left.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static GrayImage filled(int w, int h, std::uint8_t value) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, value);
    return img;
  }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
};

// Per-pixel boolean raster with the same layout as GrayImage.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  static BinaryMask zeros(int w, int h) {
    BinaryMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
  }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

  std::int64_t count() const;
  bool none() const { return count() == 0; }

  // Tight bounding box of the set pixels; throws EmptyMaskError on an
  // all-zero mask.
  BoundingBox tight_bbox() const;
};

// Pixel-level intersection over union of two same-sized masks.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Copies the rectangle [x, x+w) x [y, y+h); samples outside the source image
// become `fill`.
GrayImage crop(const GrayImage& img, int x, int y, int w, int h, std::uint8_t fill = 255);

// Crop of the mask's tight bounding box in which every pixel outside the mask
// is replaced by `fill`. Used to isolate one region before line detection.
GrayImage masked_crop(const GrayImage& img, const BinaryMask& mask, std::uint8_t fill = 255);

// Exact box-filter downsample: each output cell is the area-weighted mean of
// the source pixels it covers. Returns row-major doubles in [0, 255].
std::vector<double> box_downsample(const GrayImage& img, int out_w, int out_h);

// --- File formats -----------------------------------------------------------

// Binary PGM (P5), maxval <= 255.
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// PNG, 8-bit depth, color types 0/2/4/6 (palette and interlace are rejected).
// Color images are reduced to luma with integer BT.601 weights.
GrayImage decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const GrayImage& img);
GrayImage read_png(const std::string& path);
void write_png(const GrayImage& img, const std::string& path);

// Dispatches on content magic (PNG signature or "P5").
GrayImage load_image(const std::string& path);
// Dispatches on file extension: .png or .pgm.
void save_image(const GrayImage& img, const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace manga
