#pragma once

#include <optional>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"
#include "manga/page.hpp"
#include "manga/vision.hpp"

namespace manga {

struct BubbleParams {
  CannyParams canny;
  double dilate_ratio = 0.10;       // box growth (total, split across both sides)
  double min_overlap_ratio = 0.05;  // of box area; below this the bubble failed
  double min_blank_mean = 128.0;    // winner must be blank (bright), not dark art
};

// Estimates the pixel mask of the bubble under `box`: edge-detect inside the
// dilated box, label 4-connected components of the NON-edge pixels, and keep
// the component sharing the largest area with the original box. Returns a
// page-sized mask, or nullopt when the best component covers less than
// min_overlap_ratio of the box (a failed bubble).
std::optional<BinaryMask> estimate_bubble_mask(const GrayImage& img, const BoundingBox& box,
                                               const BubbleParams& params = {});

enum class TextOrientation { Vertical, Horizontal };

// Rule-based text line detection. A pixel column (vertical text) or row
// (horizontal text) is activated when it contains an edge pixel; maximal
// activated runs become candidates; candidates narrower than half the widest
// one are dropped (this removes ruby); survivors are tightened to the
// bounding box of their edge pixels. Boxes come back in scan-axis order.
std::vector<BoundingBox> detect_text_lines_rule(const GrayImage& region_img,
                                                TextOrientation orientation,
                                                const CannyParams& canny = {});

struct CutInfo {
  enum class Axis { Horizontal, Vertical };  // horizontal = constant y

  Axis axis = Axis::Horizontal;
  int coord = 0;           // the row (horizontal) or column (vertical) removed
  int length_in_mask = 0;  // mask pixels lying on the cut line
};

struct BubbleSplit {
  std::vector<BinaryMask> masks;  // one per paragraph, in cluster order
  std::vector<CutInfo> cuts;      // the applied cuts, one per split boundary
  bool no_separating_cut = false; // some boundary had no valid cut; left merged
  bool used_x_fallback = false;   // paragraphs separated by x instead of top-y
};

// Splits a bubble mask into paragraphs. Line top-y coordinates are clustered
// with mean shift (bandwidth = half the median line height); for each pair of
// adjacent clusters every integer row/column strictly between their line
// bounding boxes is considered as a straight cut, cuts that fail to separate
// the clusters' lines into different components are discarded, and the one
// covering the fewest mask pixels wins (ties: closest to the midpoint between
// the clusters, then horizontal before vertical, then smaller coordinate).
// When top-y yields a single cluster but the line x-extents fall into groups
// separated by more than half a median line width, those x-groups are used
// instead (used_x_fallback).
BubbleSplit split_connected_bubble(const BinaryMask& mask,
                                   const std::vector<BoundingBox>& lines);

// Crop of the mask's bounding box prepared for line detection: pixels
// connected to the crop border through non-mask area (the outline and the
// world outside the bubble) are flattened to the mask's median intensity,
// while holes inside the mask — the text ink, which the blank-area mask
// excludes — survive untouched. Throws EmptyMaskError on an all-zero mask.
struct RegionCrop {
  GrayImage image;
  int x0 = 0;  // crop origin in page coordinates
  int y0 = 0;
};
RegionCrop isolate_region_text(const GrayImage& img, const BinaryMask& mask);

struct SegmentParams {
  BubbleParams bubble;
  TextOrientation orientation = TextOrientation::Vertical;
};

// Full segmentation of one page: for every candidate bubble box, estimate the
// mask, detect text lines inside it, split connected bubbles, and emit one
// TextUnit per split region (box = union of its line boxes, mask attached,
// content left empty for recognition). Failed bubbles and empty regions are
// dropped; the rest keep detector order, split regions in cluster order.
std::vector<TextUnit> segment_page_regions(const GrayImage& img,
                                           const std::vector<BoundingBox>& boxes,
                                           const SegmentParams& params = {});

}  // namespace manga
