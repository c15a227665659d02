#include "manga/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "json.hpp"
#include "manga/vision.hpp"

namespace manga {
namespace {

// Bilinear sample with white outside the image.
double sample_or_white(const GrayImage& img, double x, double y) {
  const int x0 = int(std::floor(x));
  const int y0 = int(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const auto tap = [&img](int px, int py) -> double {
    if (px < 0 || px >= img.width || py < 0 || py >= img.height) return 255.0;
    return img.at(px, py);
  };
  const double top = (1.0 - fx) * tap(x0, y0) + fx * tap(x0 + 1, y0);
  const double bottom = (1.0 - fx) * tap(x0, y0 + 1) + fx * tap(x0 + 1, y0 + 1);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

std::vector<double> global_descriptor(const GrayImage& img) {
  std::vector<double> v = box_downsample(img, 32, 32);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double norm_sq = 0.0;
  for (double& x : v) {
    x -= mean;
    norm_sq += x * x;
  }
  if (norm_sq <= 0.0) return v;  // constant image: zero vector
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
  return v;
}

double descriptor_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

PairingReport pair_pages(const std::vector<GrayImage>& src_pages,
                         const std::vector<GrayImage>& dst_pages,
                         const AlignParams& params, std::uint64_t seed) {
  PairingReport report;
  if (src_pages.empty() || dst_pages.empty()) {
    for (std::size_t i = 0; i < src_pages.size(); ++i) report.unmatched_src.push_back(int(i));
    for (std::size_t j = 0; j < dst_pages.size(); ++j) report.unmatched_dst.push_back(int(j));
    return report;
  }

  std::vector<std::vector<double>> dst_descriptors;
  dst_descriptors.reserve(dst_pages.size());
  for (const GrayImage& img : dst_pages) dst_descriptors.push_back(global_descriptor(img));

  std::map<int, std::vector<Keypoint>> dst_keypoints;  // computed on demand
  const auto keypoints_of_dst = [&](int j) -> const std::vector<Keypoint>& {
    auto it = dst_keypoints.find(j);
    if (it == dst_keypoints.end()) {
      it = dst_keypoints.emplace(j, detect_keypoints(dst_pages[std::size_t(j)],
                                                     params.max_keypoints)).first;
    }
    return it->second;
  };

  std::map<int, std::vector<int>> dst_claims;  // dst index -> src indices paired to it
  for (std::size_t i = 0; i < src_pages.size(); ++i) {
    const std::vector<double> desc = global_descriptor(src_pages[i]);
    int nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dst_pages.size(); ++j) {
      const double d = descriptor_distance(desc, dst_descriptors[j]);
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = int(j);
      }
    }

    const std::vector<Keypoint> src_kps = detect_keypoints(src_pages[i], params.max_keypoints);
    const std::vector<Correspondence> matches =
        match_descriptors(src_kps, keypoints_of_dst(nearest), params.match_ratio);

    std::optional<RansacResult> model;
    if (matches.size() >= 4) {
      // The pair homography maps dst coordinates to src coordinates, so the
      // roles flip: the estimator's source points are the dst positions.
      std::vector<Correspondence> flipped;
      flipped.reserve(matches.size());
      for (const Correspondence& m : matches) flipped.push_back({m.dst, m.src});
      Rng rng = Rng::derive(seed, i);
      model = ransac_homography(flipped, params.ransac, rng);
    }
    if (!model || int(model->inliers.size()) <= params.ransac.min_inliers) {
      report.unmatched_src.push_back(int(i));
      continue;
    }
    report.pairs.push_back({int(i), nearest, src_pages[i].width, src_pages[i].height, model->h,
                            int(model->inliers.size())});
    dst_claims[nearest].push_back(int(i));
  }

  for (std::size_t j = 0; j < dst_pages.size(); ++j) {
    if (dst_claims.find(int(j)) == dst_claims.end()) report.unmatched_dst.push_back(int(j));
  }
  for (const auto& [dst, claimants] : dst_claims) {
    if (claimants.size() > 1) {
      std::string w = "dst page " + std::to_string(dst) + " claimed by src pages";
      for (int s : claimants) w += " " + std::to_string(s);
      report.warnings.push_back(std::move(w));
    }
  }
  return report;
}

GrayImage warp_page(const PagePair& pair, const GrayImage& dst_img) {
  GrayImage out = GrayImage::filled(pair.src_width, pair.src_height, 255);
  const Homography inv = pair.h.inverse();
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto p = try_apply_homography(inv, Point2{double(x), double(y)});
      const double v = p ? sample_or_white(dst_img, p->x, p->y) : 255.0;
      out.pixels[std::size_t(y) * out.width + x] =
          std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

std::vector<BinaryMask> transfer_regions(const PagePair& pair,
                                         const std::vector<BinaryMask>& src_masks) {
  std::vector<BinaryMask> out;
  out.reserve(src_masks.size());
  for (const BinaryMask& m : src_masks) {
    BinaryMask clipped = BinaryMask::zeros(pair.src_width, pair.src_height);
    const int w = std::min(m.width, clipped.width);
    const int h = std::min(m.height, clipped.height);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) clipped.set(x, y, m.at(x, y));
    }
    out.push_back(std::move(clipped));
  }
  return out;
}

std::string pairing_to_json(const PairingReport& report) {
  nlohmann::json j;
  j["pairs"] = nlohmann::json::array();
  for (const PagePair& p : report.pairs) {
    nlohmann::json jp;
    jp["src"] = p.src_index;
    jp["dst"] = p.dst_index;
    jp["src_width"] = p.src_width;
    jp["src_height"] = p.src_height;
    jp["h"] = std::vector<double>(std::begin(p.h.m), std::end(p.h.m));
    jp["inliers"] = p.inliers;
    j["pairs"].push_back(std::move(jp));
  }
  j["unmatched_src"] = report.unmatched_src;
  j["unmatched_dst"] = report.unmatched_dst;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

PairingReport pairing_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    PairingReport report;
    for (const nlohmann::json& jp : j.at("pairs")) {
      PagePair p;
      p.src_index = jp.at("src").get<int>();
      p.dst_index = jp.at("dst").get<int>();
      p.src_width = jp.at("src_width").get<int>();
      p.src_height = jp.at("src_height").get<int>();
      const auto h = jp.at("h").get<std::vector<double>>();
      if (h.size() != 9) throw ParseError("pairing homography needs nine numbers");
      std::copy(h.begin(), h.end(), p.h.m.begin());
      p.inliers = jp.at("inliers").get<int>();
      report.pairs.push_back(p);
    }
    report.unmatched_src = j.at("unmatched_src").get<std::vector<int>>();
    report.unmatched_dst = j.at("unmatched_dst").get<std::vector<int>>();
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pairing report: ") + e.what());
  }
}

}  // namespace manga
