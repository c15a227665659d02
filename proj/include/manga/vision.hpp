#pragma once

#include <cstdint>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"

namespace manga {

struct CannyParams {
  double low = 50.0;    // weak-edge gradient threshold
  double high = 150.0;  // strong-edge gradient threshold
};

// Classic edge detection chain: 5x5 Gaussian (sigma 1.4), Sobel gradients,
// non-maximum suppression along the quantized gradient direction, then
// hysteresis keeping weak edges only when 8-connected to a strong one.
BinaryMask canny_edges(const GrayImage& img, const CannyParams& params = {});

enum class Connectivity { Four, Eight };

struct ComponentMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // 0 = background, components are 1..count
  int count = 0;
  std::vector<std::int64_t> areas;       // areas[i] = pixels with label i+1
  std::vector<BoundingBox> boxes;        // boxes[i] = tight box of label i+1

  std::int32_t label_at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

// Labels connected regions of set pixels in scan order (deterministic).
ComponentMap connected_components(const BinaryMask& mask, Connectivity conn);

// Mean shift with a flat kernel on scalar samples.
//
// Every sample iterates x <- mean{p : |p - x| <= bandwidth} to a fixpoint;
// converged modes closer than bandwidth/2 are merged transitively. Returns a
// cluster index per sample; clusters are numbered by ascending mode position.
std::vector<int> meanshift_1d(const std::vector<double>& points, double bandwidth);

// Number of clusters in a meanshift_1d assignment (max index + 1).
int cluster_count(const std::vector<int>& assignment);

struct Keypoint {
  Point2 pos;
  double response = 0.0;
  std::vector<float> descriptor;  // 256 values: normalized 16x16 patch
};

// Harris corners with mean/variance-normalized 16x16 patch descriptors.
// Keypoints are local maxima of the corner response, strongest first, at most
// max_keypoints of them. Points too close to the border for a full patch are
// dropped.
std::vector<Keypoint> detect_keypoints(const GrayImage& img, int max_keypoints = 500);

// Lowe ratio matching: a match is kept when the best distance is below
// `ratio` times the second best. Output pairs are (a position, b position).
std::vector<Correspondence> match_descriptors(const std::vector<Keypoint>& a,
                                              const std::vector<Keypoint>& b,
                                              double ratio = 0.8);

}  // namespace manga
