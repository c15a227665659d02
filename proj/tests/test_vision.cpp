#include "manga/vision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "manga/rng.hpp"

using namespace manga;

namespace {

void draw_disk(GrayImage& img, int cx, int cy, int r, std::uint8_t value) {
  for (int y = std::max(0, cy - r); y <= std::min(img.height - 1, cy + r); ++y) {
    for (int x = std::max(0, cx - r); x <= std::min(img.width - 1, cx + r); ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.at(x, y) = value;
    }
  }
}

void fill_rect(GrayImage& img, int x0, int y0, int w, int h, std::uint8_t value) {
  for (int y = std::max(0, y0); y < std::min(img.height, y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width, x0 + w); ++x) {
      img.at(x, y) = value;
    }
  }
}

// Independent reference labeling: repeated full-image sweeps propagating the
// minimum seed index until a fixpoint. Slow but obviously correct.
std::vector<int> reference_components(const BinaryMask& mask, bool eight) {
  const int w = mask.width, h = mask.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  for (int i = 0; i < w * h; ++i) {
    if (mask.bits[i]) label[i] = i;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        if (label[i] < 0) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const int j = ny * w + nx;
            if (label[j] >= 0 && label[j] < label[i]) {
              label[i] = label[j];
              changed = true;
            }
          }
        }
      }
    }
  }
  return label;
}

// Canonicalizes a labeling to "component id = smallest member pixel index".
std::vector<int> canonical_labels(const std::vector<std::int32_t>& labels, int w, int h) {
  std::map<std::int32_t, int> first_seen;
  std::vector<int> out(static_cast<std::size_t>(w) * h, -1);
  for (int i = 0; i < w * h; ++i) {
    if (labels[i] == 0) continue;
    auto it = first_seen.find(labels[i]);
    if (it == first_seen.end()) it = first_seen.insert({labels[i], i}).first;
    out[i] = it->second;
  }
  return out;
}

}  // namespace

TEST_CASE("canny yields nothing on a uniform image") {
  CHECK(canny_edges(GrayImage::filled(64, 64, 128)).none());
  CHECK(canny_edges(GrayImage::filled(64, 64, 0)).none());
}

TEST_CASE("canny localizes a vertical step to the boundary") {
  GrayImage img = GrayImage::filled(64, 64, 0);
  fill_rect(img, 32, 0, 32, 64, 255);  // boundary between columns 31 and 32
  const BinaryMask edges = canny_edges(img);
  REQUIRE_FALSE(edges.none());
  int rows_with_edge = 0;
  for (int y = 0; y < 64; ++y) {
    bool row_hit = false;
    for (int x = 0; x < 64; ++x) {
      if (!edges.at(x, y)) continue;
      CHECK(std::abs(x - 31.5) <= 1.5);  // within one pixel of the step
      row_hit = true;
    }
    rows_with_edge += row_hit;
  }
  CHECK(rows_with_edge >= 60);
}

TEST_CASE("canny traces a circle outline close to its true perimeter") {
  GrayImage img = GrayImage::filled(128, 128, 255);
  draw_disk(img, 64, 64, 20, 0);
  const BinaryMask edges = canny_edges(img);
  const double perimeter = 2.0 * 3.141592653589793 * 20.0;
  const double count = static_cast<double>(edges.count());
  CHECK(count >= perimeter * 0.85);
  CHECK(count <= perimeter * 1.15);
  // All edge pixels near the true circle.
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      if (!edges.at(x, y)) continue;
      const double r = std::hypot(x - 64.0, y - 64.0);
      CHECK(std::abs(r - 20.0) <= 3.0);
    }
  }
}

TEST_CASE("raising the strong threshold never adds edges") {
  Rng rng(55);
  GrayImage img = GrayImage::filled(96, 96, 255);
  for (int i = 0; i < 30; ++i) {
    draw_disk(img, rng.uniform_int(5, 90), rng.uniform_int(5, 90), rng.uniform_int(2, 7),
              static_cast<std::uint8_t>(rng.uniform_int(0, 200)));
  }
  const BinaryMask loose = canny_edges(img, {50, 100});
  const BinaryMask tight = canny_edges(img, {50, 200});
  for (std::size_t i = 0; i < loose.bits.size(); ++i) {
    if (tight.bits[i]) CHECK(loose.bits[i]);
  }
  CHECK(tight.count() <= loose.count());

  // Determinism.
  const BinaryMask again = canny_edges(img, {50, 100});
  CHECK(again.bits == loose.bits);
}

TEST_CASE("connected components on hand-built masks") {
  BinaryMask empty = BinaryMask::zeros(8, 8);
  CHECK(connected_components(empty, Connectivity::Four).count == 0);

  BinaryMask block = BinaryMask::zeros(10, 10);
  for (int y = 2; y < 5; ++y)
    for (int x = 3; x < 7; ++x) block.set(x, y, true);
  const ComponentMap cm = connected_components(block, Connectivity::Four);
  REQUIRE(cm.count == 1);
  CHECK(cm.areas[0] == 12);
  CHECK(cm.boxes[0].x == 3.0);
  CHECK(cm.boxes[0].y == 2.0);
  CHECK(cm.boxes[0].w == 4.0);
  CHECK(cm.boxes[0].h == 3.0);

  // Diagonal touch: separate under 4-connectivity, joined under 8.
  BinaryMask diag = BinaryMask::zeros(4, 4);
  diag.set(1, 1, true);
  diag.set(2, 2, true);
  CHECK(connected_components(diag, Connectivity::Four).count == 2);
  CHECK(connected_components(diag, Connectivity::Eight).count == 1);
}

TEST_CASE("connected components agree with a fixpoint-propagation oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    BinaryMask mask = BinaryMask::zeros(30, 20);
    for (auto& b : mask.bits) b = rng.chance(0.42) ? 1 : 0;
    for (Connectivity conn : {Connectivity::Four, Connectivity::Eight}) {
      const ComponentMap cm = connected_components(mask, conn);
      const std::vector<int> want = reference_components(mask, conn == Connectivity::Eight);
      const std::vector<int> got = canonical_labels(cm.labels, mask.width, mask.height);
      CHECK(got == want);
      std::int64_t total = 0;
      for (auto a : cm.areas) total += a;
      CHECK(total == mask.count());
    }
  }
}

TEST_CASE("meanshift separates well-spaced groups") {
  const std::vector<double> pts = {0, 1, 2, 100, 101, 102};
  const std::vector<int> got = meanshift_1d(pts, 10.0);
  CHECK(got == std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK(cluster_count(got) == 2);
}

TEST_CASE("meanshift collapses identical and near points") {
  CHECK(cluster_count(meanshift_1d({5, 5, 5, 5}, 3.0)) == 1);
  CHECK(meanshift_1d({}, 1.0).empty());
  CHECK(meanshift_1d({42.0}, 1.0) == std::vector<int>{0});
  // One huge bandwidth swallows everything.
  CHECK(cluster_count(meanshift_1d({0, 50, 100}, 1000.0)) == 1);
}

TEST_CASE("meanshift clustering is invariant to translation and permutation") {
  Rng rng(13);
  std::vector<double> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(rng.uniform(0, 30));
  for (int i = 0; i < 12; ++i) pts.push_back(rng.uniform(200, 240));
  const std::vector<int> base = meanshift_1d(pts, 15.0);

  std::vector<double> shifted(pts);
  for (auto& p : shifted) p += 5000.0;
  CHECK(meanshift_1d(shifted, 15.0) == base);

  // Reverse the sample order: assignments must follow the samples.
  std::vector<double> reversed(pts.rbegin(), pts.rend());
  const std::vector<int> rev = meanshift_1d(reversed, 15.0);
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) CHECK(rev[n - 1 - i] == base[i]);
}

TEST_CASE("meanshift cluster indices follow ascending position") {
  const std::vector<double> pts = {500, 501, 2, 3, 250};
  const std::vector<int> got = meanshift_1d(pts, 5.0);
  CHECK(got == std::vector<int>{2, 2, 0, 0, 1});
}

TEST_CASE("keypoints: none on a flat image, corners found on a rectangle") {
  CHECK(detect_keypoints(GrayImage::filled(64, 64, 200)).empty());

  GrayImage img = GrayImage::filled(128, 128, 255);
  fill_rect(img, 40, 40, 50, 50, 0);
  const auto kps = detect_keypoints(img);
  REQUIRE_FALSE(kps.empty());
  // Each rectangle corner should attract a keypoint.
  for (const Point2 corner : {Point2{40, 40}, Point2{89, 40}, Point2{40, 89}, Point2{89, 89}}) {
    double best = 1e9;
    for (const auto& kp : kps) best = std::min(best, distance(kp.pos, corner));
    CHECK(best <= 2.0);
  }
  for (const auto& kp : kps) {
    CHECK(kp.descriptor.size() == 256);
    double norm = 0;
    for (float v : kp.descriptor) norm += static_cast<double>(v) * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("keypoint budget is respected") {
  Rng rng(21);
  GrayImage img = GrayImage::filled(200, 200, 255);
  for (int i = 0; i < 60; ++i) {
    draw_disk(img, rng.uniform_int(10, 190), rng.uniform_int(10, 190), rng.uniform_int(2, 5), 0);
  }
  const auto all = detect_keypoints(img, 500);
  const auto few = detect_keypoints(img, 10);
  CHECK(few.size() == 10);
  CHECK(all.size() >= few.size());
  // The budgeted set is the strongest prefix.
  for (std::size_t i = 0; i < few.size(); ++i) {
    CHECK(few[i].pos.x == all[i].pos.x);
    CHECK(few[i].pos.y == all[i].pos.y);
  }
}

TEST_CASE("matching recovers a pure translation between blob images") {
  Rng rng(33);
  GrayImage img1 = GrayImage::filled(160, 160, 255);
  for (int i = 0; i < 25; ++i) {
    draw_disk(img1, rng.uniform_int(20, 140), rng.uniform_int(20, 140), rng.uniform_int(2, 6),
              static_cast<std::uint8_t>(rng.uniform_int(0, 120)));
  }
  const int tx = 7, ty = 3;
  GrayImage img2 = GrayImage::filled(160, 160, 255);
  for (int y = 0; y < 160; ++y) {
    for (int x = 0; x < 160; ++x) {
      const int sx = x - tx, sy = y - ty;
      if (sx >= 0 && sx < 160 && sy >= 0 && sy < 160) img2.at(x, y) = img1.at(sx, sy);
    }
  }

  const auto k1 = detect_keypoints(img1);
  const auto k2 = detect_keypoints(img2);
  const auto matches = match_descriptors(k1, k2, 0.8);
  REQUIRE(matches.size() >= 10);
  int consistent = 0;
  for (const auto& m : matches) {
    const double dx = m.dst.x - m.src.x, dy = m.dst.y - m.src.y;
    consistent += std::abs(dx - tx) < 0.75 && std::abs(dy - ty) < 0.75;
  }
  CHECK(consistent >= static_cast<int>(matches.size() * 6) / 10);
}

TEST_CASE("matching an image against itself pairs twins; empty inputs match nothing") {
  GrayImage img = GrayImage::filled(120, 120, 255);
  fill_rect(img, 30, 30, 25, 25, 0);
  draw_disk(img, 80, 75, 9, 50);
  const auto kps = detect_keypoints(img);
  REQUIRE_FALSE(kps.empty());
  const auto matches = match_descriptors(kps, kps, 0.8);
  CHECK(matches.size() == kps.size());
  for (const auto& m : matches) {
    CHECK(m.src.x == m.dst.x);
    CHECK(m.src.y == m.dst.y);
  }
  CHECK(match_descriptors({}, kps, 0.8).empty());
  CHECK(match_descriptors(kps, {}, 0.8).empty());
}
