#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"
#include "manga/rng.hpp"

namespace manga {

// Thumbnail retrieval descriptor: the image is area-averaged to 32x32,
// mean-subtracted, and L2-normalized into 1024 values. A constant image has
// no structure and maps to the zero vector.
std::vector<double> global_descriptor(const GrayImage& img);

double descriptor_distance(const std::vector<double>& a, const std::vector<double>& b);

struct AlignParams {
  double match_ratio = 0.8;
  int max_keypoints = 500;
  RansacParams ransac{.inlier_threshold = 3.0};  // page warps are near-affine
};

// A verified src/dst page correspondence. The homography pulls dst-page
// pixels onto the src frame: warp output (x, y) samples dst at h^-1 (x, y).
struct PagePair {
  int src_index = -1;
  int dst_index = -1;
  int src_width = 0;
  int src_height = 0;
  Homography h;
  int inliers = 0;
};

struct PairingReport {
  std::vector<PagePair> pairs;          // ascending src_index
  std::vector<int> unmatched_src;       // src pages with no verified partner
  std::vector<int> unmatched_dst;       // dst pages never claimed by a pair
  std::vector<std::string> warnings;    // e.g. two src pages claiming one dst
};

// Pairs every src page with its nearest dst page by descriptor distance and
// verifies the pair geometrically (keypoint matches + robust homography); a
// pair survives only with more than ransac.min_inliers inliers. Unmatched
// pages on either side are reported, not fatal. `seed` controls the robust
// estimation; each src page derives its own stream so results do not depend
// on processing order.
PairingReport pair_pages(const std::vector<GrayImage>& src_pages,
                         const std::vector<GrayImage>& dst_pages,
                         const AlignParams& params = {}, std::uint64_t seed = 0);

// Inverse-mapped warp of the dst page onto the src page frame with bilinear
// sampling; samples outside the dst image are white (255).
GrayImage warp_page(const PagePair& pair, const GrayImage& dst_img);

// After warping dst onto src, the src bubble masks are reused verbatim as dst
// text-region masks; each mask is clipped to the src page bounds.
std::vector<BinaryMask> transfer_regions(const PagePair& pair,
                                         const std::vector<BinaryMask>& src_masks);

// JSON round trip for pairing reports; homographies keep full precision.
std::string pairing_to_json(const PairingReport& report);
PairingReport pairing_from_json(const std::string& text);  // throws ParseError

}  // namespace manga
