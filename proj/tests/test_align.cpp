#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "manga/align.hpp"
#include "manga/geometry.hpp"
#include "manga/image.hpp"
#include "manga/rng.hpp"

using namespace manga;

namespace {

// 3x3 box blur with edge clamping; smooths raw noise into a texture with
// usable gradients for corner detection and bilinear resampling.
GrayImage box_blur3(const GrayImage& img) {
  GrayImage out = GrayImage::filled(img.width, img.height, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int px = std::clamp(x + dx, 0, img.width - 1);
          const int py = std::clamp(y + dy, 0, img.height - 1);
          sum += img.at(px, py);
        }
      }
      out.pixels[std::size_t(y) * out.width + x] = std::uint8_t((sum + 4) / 9);
    }
  }
  return out;
}

// Smoothed random texture: rich in distinctive corners, no repeating patches.
GrayImage noise_page(Rng& rng, int w, int h) {
  GrayImage img = GrayImage::filled(w, h, 0);
  for (std::uint8_t& p : img.pixels) p = std::uint8_t(rng.uniform_int(0, 255));
  return box_blur3(box_blur3(img));
}

// dst(x, y) = src(x - dx, y - dy); uncovered border is white.
GrayImage shifted_copy(const GrayImage& src, int dx, int dy) {
  GrayImage out = GrayImage::filled(src.width, src.height, 255);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const int sx = x - dx;
      const int sy = y - dy;
      if (sx >= 0 && sx < src.width && sy >= 0 && sy < src.height) {
        out.pixels[std::size_t(y) * out.width + x] = src.at(sx, sy);
      }
    }
  }
  return out;
}

double reprojection_error(const Homography& h, Point2 p, Point2 expected) {
  const Point2 q = apply_homography(h, p);
  return std::hypot(q.x - expected.x, q.y - expected.y);
}

}  // namespace

TEST_CASE("global descriptor is mean-free, unit-length, and sign-flips under inversion") {
  Rng rng(411);
  const GrayImage img = noise_page(rng, 96, 72);
  const std::vector<double> d = global_descriptor(img);
  REQUIRE(d.size() == 1024);

  double mean = 0.0;
  double norm_sq = 0.0;
  for (double v : d) {
    mean += v;
    norm_sq += v * v;
  }
  CHECK(std::abs(mean / 1024.0) < 1e-12);
  CHECK(std::abs(norm_sq - 1.0) < 1e-12);

  CHECK(descriptor_distance(d, global_descriptor(img)) == 0.0);

  GrayImage inverted = img;
  for (std::uint8_t& p : inverted.pixels) p = std::uint8_t(255 - p);
  CHECK(descriptor_distance(d, global_descriptor(inverted)) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("global descriptor of a constant image is the zero vector") {
  const GrayImage flat = GrayImage::filled(40, 40, 173);
  const std::vector<double> d = global_descriptor(flat);
  REQUIRE(d.size() == 1024);
  for (double v : d) CHECK(v == 0.0);
  CHECK(descriptor_distance(d, d) == 0.0);
}

TEST_CASE("descriptor retrieval survives brightness remapping") {
  Rng rng(77);
  std::vector<GrayImage> pages;
  std::vector<std::vector<double>> descs;
  for (int i = 0; i < 50; ++i) {
    pages.push_back(noise_page(rng, 64, 48));
    descs.push_back(global_descriptor(pages.back()));
  }
  for (int i = 0; i < 50; ++i) {
    GrayImage dimmed = pages[std::size_t(i)];
    for (std::uint8_t& p : dimmed.pixels) {
      p = std::uint8_t(std::lround(0.5 * p + 60.0));
    }
    const std::vector<double> q = global_descriptor(dimmed);
    int best = -1;
    double best_dist = 1e18;
    double second = 1e18;
    for (int j = 0; j < 50; ++j) {
      const double dist = descriptor_distance(q, descs[std::size_t(j)]);
      if (dist < best_dist) {
        second = best_dist;
        best_dist = dist;
        best = j;
      } else {
        second = std::min(second, dist);
      }
    }
    CHECK(best == i);
    CHECK(best_dist < 0.2);
    CHECK(second > 0.5);
  }
}

TEST_CASE("pair_pages matches duplicate volumes page for page") {
  Rng rng(2024);
  std::vector<GrayImage> src;
  for (int i = 0; i < 4; ++i) src.push_back(noise_page(rng, 240, 320));
  const std::vector<GrayImage> dst = src;

  const PairingReport report = pair_pages(src, dst, {}, 7);
  REQUIRE(report.pairs.size() == 4);
  CHECK(report.unmatched_src.empty());
  CHECK(report.unmatched_dst.empty());
  CHECK(report.warnings.empty());

  for (std::size_t i = 0; i < 4; ++i) {
    const PagePair& pair = report.pairs[i];
    CHECK(pair.src_index == int(i));
    CHECK(pair.dst_index == int(i));
    CHECK(pair.src_width == 240);
    CHECK(pair.src_height == 320);
    CHECK(pair.inliers > 50);
    // Identical pages: the homography must be the identity to sub-pixel
    // accuracy across the whole page.
    for (const Point2 corner : {Point2{0, 0}, Point2{240, 0}, Point2{0, 320}, Point2{240, 320}}) {
      CHECK(reprojection_error(pair.h, corner, corner) < 1.0);
    }
  }
}

TEST_CASE("pair_pages recovers a pure translation and warp undoes it") {
  Rng rng(5150);
  const GrayImage src_page = noise_page(rng, 220, 300);
  const GrayImage dst_page = shifted_copy(src_page, 7, 3);

  const PairingReport report =
      pair_pages(std::vector<GrayImage>{src_page}, std::vector<GrayImage>{dst_page}, {}, 1);
  REQUIRE(report.pairs.size() == 1);
  const PagePair& pair = report.pairs[0];
  CHECK(pair.src_index == 0);
  CHECK(pair.dst_index == 0);

  // Content at dst (x, y) came from src (x - 7, y - 3), so the dst->src map
  // subtracts the shift.
  for (const Point2 p : {Point2{50, 50}, Point2{180, 40}, Point2{30, 250}, Point2{200, 290}}) {
    CHECK(reprojection_error(pair.h, p, Point2{p.x - 7, p.y - 3}) < 0.5);
  }

  const GrayImage recovered = warp_page(pair, dst_page);
  REQUIRE(recovered.width == src_page.width);
  REQUIRE(recovered.height == src_page.height);
  double abs_err = 0.0;
  int count = 0;
  for (int y = 10; y < src_page.height - 10; ++y) {
    for (int x = 10; x < src_page.width - 10; ++x) {
      abs_err += std::abs(int(recovered.at(x, y)) - int(src_page.at(x, y)));
      ++count;
    }
  }
  CHECK(abs_err / count < 1.0);
}

TEST_CASE("pair_pages leaves unrelated volumes unmatched") {
  Rng rng_a(10);
  Rng rng_b(20);
  std::vector<GrayImage> src;
  std::vector<GrayImage> dst;
  for (int i = 0; i < 2; ++i) src.push_back(noise_page(rng_a, 200, 280));
  for (int i = 0; i < 2; ++i) dst.push_back(noise_page(rng_b, 200, 280));

  const PairingReport report = pair_pages(src, dst, {}, 3);
  CHECK(report.pairs.empty());
  CHECK(report.unmatched_src == std::vector<int>{0, 1});
  CHECK(report.unmatched_dst == std::vector<int>{0, 1});
}

TEST_CASE("pair_pages results do not depend on dst page order") {
  Rng rng(909);
  std::vector<GrayImage> src;
  for (int i = 0; i < 3; ++i) src.push_back(noise_page(rng, 200, 260));
  std::vector<GrayImage> reversed(src.rbegin(), src.rend());

  const PairingReport forward = pair_pages(src, src, {}, 11);
  const PairingReport backward = pair_pages(src, reversed, {}, 11);
  REQUIRE(forward.pairs.size() == 3);
  REQUIRE(backward.pairs.size() == 3);

  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(forward.pairs[i].src_index == int(i));
    CHECK(forward.pairs[i].dst_index == int(i));
    CHECK(backward.pairs[i].src_index == int(i));
    CHECK(backward.pairs[i].dst_index == int(2 - i));
    // Same page content, same per-src random stream: the estimate must be
    // bit-identical, not merely close.
    for (int k = 0; k < 9; ++k) {
      CHECK(forward.pairs[i].h.m[std::size_t(k)] == backward.pairs[i].h.m[std::size_t(k)]);
    }
  }
}

TEST_CASE("pair_pages keeps duplicate claims and warns about them") {
  Rng rng(4242);
  const GrayImage page = noise_page(rng, 220, 300);
  const std::vector<GrayImage> src{page, page};
  const std::vector<GrayImage> dst{page};

  const PairingReport report = pair_pages(src, dst, {}, 5);
  REQUIRE(report.pairs.size() == 2);
  CHECK(report.pairs[0].src_index == 0);
  CHECK(report.pairs[1].src_index == 1);
  CHECK(report.pairs[0].dst_index == 0);
  CHECK(report.pairs[1].dst_index == 0);
  CHECK(report.unmatched_dst.empty());
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("dst page 0") != std::string::npos);
}

TEST_CASE("warp with the identity homography copies the image") {
  Rng rng(31);
  const GrayImage img = noise_page(rng, 90, 70);
  const PagePair pair{0, 0, img.width, img.height, Homography::identity(), 0};
  const GrayImage out = warp_page(pair, img);
  REQUIRE(out.width == img.width);
  REQUIRE(out.height == img.height);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("warp translation convention: h = translate(5, 0) reads in(x - 5, y)") {
  Rng rng(88);
  const GrayImage img = noise_page(rng, 60, 40);
  const PagePair pair{0, 0, img.width, img.height, Homography::translation(5, 0), 0};
  const GrayImage out = warp_page(pair, img);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (x < 5) {
        CHECK(out.at(x, y) == 255);
      } else {
        CHECK(out.at(x, y) == img.at(x - 5, y));
      }
    }
  }
}

TEST_CASE("warp inverts a mild perspective transform on a smooth image") {
  const auto f = [](double x, double y) {
    return 127.5 + 60.0 * std::sin(x / 19.0) + 50.0 * std::cos(y / 17.0);
  };
  const Homography h{{1.02, 0.01, 3.0, -0.008, 0.99, 2.0, 1e-5, -2e-5, 1.0}};

  const int w = 200;
  const int h_px = 160;
  GrayImage dst = GrayImage::filled(w, h_px, 0);
  for (int y = 0; y < h_px; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 p = apply_homography(h, Point2{double(x), double(y)});
      const double v = std::clamp(f(p.x, p.y), 0.0, 255.0);
      dst.pixels[std::size_t(y) * w + x] = std::uint8_t(std::lround(v));
    }
  }

  const PagePair pair{0, 0, w, h_px, h, 0};
  const GrayImage out = warp_page(pair, dst);
  const Homography inv = h.inverse();
  double abs_err = 0.0;
  int count = 0;
  for (int y = 0; y < h_px; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 back = apply_homography(inv, Point2{double(x), double(y)});
      if (back.x < 1.0 || back.x > w - 2.0 || back.y < 1.0 || back.y > h_px - 2.0) continue;
      abs_err += std::abs(double(out.at(x, y)) - f(x, y));
      ++count;
    }
  }
  REQUIRE(count > w * h_px / 2);
  CHECK(abs_err / count < 2.0);
}

TEST_CASE("transfer_regions clips and pads masks to the src page frame") {
  const PagePair pair{0, 0, 100, 80, Homography::identity(), 0};

  BinaryMask same = BinaryMask::zeros(100, 80);
  same.set(3, 4, true);
  same.set(99, 79, true);

  BinaryMask larger = BinaryMask::zeros(120, 90);
  larger.set(50, 40, true);
  larger.set(110, 85, true);  // outside the page, must be dropped

  BinaryMask smaller = BinaryMask::zeros(60, 50);
  smaller.set(59, 49, true);

  const std::vector<BinaryMask> out = transfer_regions(pair, {same, larger, smaller});
  REQUIRE(out.size() == 3);
  for (const BinaryMask& m : out) {
    CHECK(m.width == 100);
    CHECK(m.height == 80);
  }

  CHECK(out[0].bits == same.bits);

  int larger_count = 0;
  for (std::uint8_t b : out[1].bits) larger_count += b;
  CHECK(larger_count == 1);
  CHECK(out[1].at(50, 40));

  int smaller_count = 0;
  for (std::uint8_t b : out[2].bits) smaller_count += b;
  CHECK(smaller_count == 1);
  CHECK(out[2].at(59, 49));
}
