#include "manga/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace manga {

std::int64_t BinaryMask::count() const {
  std::int64_t n = 0;
  for (std::uint8_t b : bits) n += b != 0;
  return n;
}

BoundingBox BinaryMask::tight_bbox() const {
  int x0 = width, y0 = height, x1 = -1, y1 = -1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw EmptyMaskError("tight_bbox of an empty mask");
  return {double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw PageMismatch("mask_iou requires equal mask sizes");
  }
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool pa = a.bits[i] != 0, pb = b.bits[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

GrayImage crop(const GrayImage& img, int x, int y, int w, int h, std::uint8_t fill) {
  GrayImage out = GrayImage::filled(std::max(0, w), std::max(0, h), fill);
  for (int oy = 0; oy < out.height; ++oy) {
    const int sy = y + oy;
    if (sy < 0 || sy >= img.height) continue;
    for (int ox = 0; ox < out.width; ++ox) {
      const int sx = x + ox;
      if (sx < 0 || sx >= img.width) continue;
      out.at(ox, oy) = img.at(sx, sy);
    }
  }
  return out;
}

GrayImage masked_crop(const GrayImage& img, const BinaryMask& mask, std::uint8_t fill) {
  if (img.width != mask.width || img.height != mask.height) {
    throw PageMismatch("masked_crop requires image and mask of equal size");
  }
  const BoundingBox bb = mask.tight_bbox();
  const int x0 = static_cast<int>(bb.x), y0 = static_cast<int>(bb.y);
  const int w = static_cast<int>(bb.w), h = static_cast<int>(bb.h);
  GrayImage out = GrayImage::filled(w, h, fill);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x0 + x, y0 + y)) out.at(x, y) = img.at(x0 + x, y0 + y);
    }
  }
  return out;
}

std::vector<double> box_downsample(const GrayImage& img, int out_w, int out_h) {
  if (img.empty() || out_w <= 0 || out_h <= 0) {
    throw ConfigError("box_downsample needs a non-empty image and positive output size");
  }
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h, 0.0);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    for (int ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      double acc = 0.0;
      for (int py = static_cast<int>(std::floor(y0)); py < static_cast<int>(std::ceil(y1)); ++py) {
        const double wy = std::min<double>(y1, py + 1) - std::max<double>(y0, py);
        if (wy <= 0) continue;
        for (int px = static_cast<int>(std::floor(x0)); px < static_cast<int>(std::ceil(x1)); ++px) {
          const double wx = std::min<double>(x1, px + 1) - std::max<double>(x0, px);
          if (wx <= 0) continue;
          acc += wx * wy * img.at(std::min(px, img.width - 1), std::min(py, img.height - 1));
        }
      }
      out[static_cast<std::size_t>(oy) * out_w + ox] = acc / (sx * sy);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

// --- PGM ---------------------------------------------------------------------

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw ParseError("truncated PGM header");
  return tok;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  if (pgm_token(in) != "P5") throw ParseError("not a binary PGM (P5): " + path);
  GrayImage img;
  try {
    img.width = std::stoi(pgm_token(in));
    img.height = std::stoi(pgm_token(in));
    const int maxval = std::stoi(pgm_token(in));
    if (img.width <= 0 || img.height <= 0) throw ParseError("bad PGM dimensions: " + path);
    if (maxval <= 0 || maxval > 255) throw ParseError("unsupported PGM maxval: " + path);
  } catch (const std::logic_error&) {
    throw ParseError("malformed PGM header: " + path);
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ParseError("truncated PGM payload: " + path);
  }
  return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
  if (img.empty()) throw ConfigError("refusing to write an empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("write failed: " + path);
}

// --- PNG ---------------------------------------------------------------------

namespace {

constexpr std::uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

std::vector<std::uint8_t> inflate_bytes(const std::vector<std::uint8_t>& in, std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw ParseError("zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int ret = inflate(&zs, Z_FINISH);
  const auto total = zs.total_out;
  inflateEnd(&zs);
  if (ret != Z_STREAM_END || total != expected) throw ParseError("PNG image data is corrupt");
  return out;
}

std::uint8_t luma(int r, int g, int b) {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

}  // namespace

GrayImage decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0) {
    throw ParseError("not a PNG file");
  }
  std::size_t pos = 8;
  int width = 0, height = 0, color_type = -1, channels = 0;
  bool saw_ihdr = false, saw_iend = false;
  std::vector<std::uint8_t> idat;

  while (pos + 12 <= bytes.size() && !saw_iend) {
    const std::uint32_t len = be32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw ParseError("truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const std::uint8_t* data = &bytes[pos + 8];
    const std::uint32_t stored_crc = be32(&bytes[pos + 8 + len]);
    const auto actual_crc = crc32(0L, &bytes[pos + 4], static_cast<uInt>(4 + len));
    if (stored_crc != static_cast<std::uint32_t>(actual_crc)) throw ParseError("PNG chunk CRC mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw ParseError("bad IHDR length");
      width = static_cast<int>(be32(data));
      height = static_cast<int>(be32(data + 4));
      const int depth = data[8];
      color_type = data[9];
      const int interlace = data[12];
      if (depth != 8) throw ParseError("unsupported PNG bit depth (only 8 is handled)");
      if (interlace != 0) throw ParseError("interlaced PNG is not supported");
      switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw ParseError("unsupported PNG color type");
      }
      if (width <= 0 || height <= 0) throw ParseError("bad PNG dimensions");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!saw_ihdr) throw ParseError("IDAT before IHDR");
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    // Ancillary chunks are skipped.
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend) throw ParseError("PNG missing IHDR or IEND");

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw = inflate_bytes(idat, (stride + 1) * height);

  // Undo per-scanline filters in place (prior row starts as zeros).
  std::vector<std::uint8_t> prev(stride, 0);
  std::vector<std::uint8_t> row(stride, 0);
  GrayImage img = GrayImage::filled(width, height, 0);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[(stride + 1) * y];
    const std::uint8_t* src = &raw[(stride + 1) * y + 1];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(channels) ? row[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw ParseError("unknown PNG filter type");
      }
      row[i] = static_cast<std::uint8_t>(v & 0xFF);
    }
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* px = &row[static_cast<std::size_t>(x) * channels];
      switch (color_type) {
        case 0: img.at(x, y) = px[0]; break;
        case 4: img.at(x, y) = px[0]; break;  // gray + alpha: keep gray
        case 2: img.at(x, y) = luma(px[0], px[1], px[2]); break;
        case 6: img.at(x, y) = luma(px[0], px[1], px[2]); break;
      }
    }
    std::swap(prev, row);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  if (img.empty()) throw ConfigError("refusing to encode an empty image");
  const std::size_t stride = static_cast<std::size_t>(img.width);
  std::vector<std::uint8_t> raw((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw[(stride + 1) * y] = 0;  // filter: none
    std::memcpy(&raw[(stride + 1) * y + 1], &img.pixels[stride * y], stride);
  }

  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error("PNG compression failed");
  }
  comp.resize(comp_size);

  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace

  std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});
  return out;
}

GrayImage read_png(const std::string& path) { return decode_png(read_file_bytes(path)); }

void write_png(const GrayImage& img, const std::string& path) {
  write_file_bytes(path, encode_png(img));
}

GrayImage load_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return read_pgm(path);
  throw ParseError("unrecognized image format: " + path);
}

void save_image(const GrayImage& img, const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0) {
    write_png(img, path);
  } else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0) {
    write_pgm(img, path);
  } else {
    throw ConfigError("unsupported image extension (use .png or .pgm): " + path);
  }
}

}  // namespace manga
