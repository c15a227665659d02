#include "manga/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "manga/errors.hpp"

namespace manga {
namespace {

int clamp_int(double v, int lo, int hi) {
  return std::max(lo, std::min(hi, int(std::llround(v))));
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BoundingBox union_of(const std::vector<BoundingBox>& boxes, const std::vector<int>& ids) {
  BoundingBox acc = boxes[ids[0]];
  for (std::size_t i = 1; i < ids.size(); ++i) acc = box_union(acc, boxes[ids[i]]);
  return acc;
}

struct Candidate {
  CutInfo::Axis axis;
  int coord;
  int length = 0;
  double mid_dist = 0.0;
};

bool better_cut(const Candidate& a, const Candidate& b) {
  if (a.length != b.length) return a.length < b.length;
  if (a.mid_dist != b.mid_dist) return a.mid_dist < b.mid_dist;
  if (a.axis != b.axis) return a.axis == CutInfo::Axis::Horizontal;
  return a.coord < b.coord;
}

// Integer coordinates strictly inside the open interval (lo, hi).
void strictly_between(double lo, double hi, std::vector<int>& out) {
  out.clear();
  if (!(lo < hi)) return;
  for (int c = int(std::floor(lo)) + 1; c < hi; ++c) {
    if (c > lo) out.push_back(c);
  }
}

// The working mask restricted to its tight bounding box, so component passes
// touch only the bubble's neighborhood rather than the whole page.
struct SubMask {
  int x0 = 0, y0 = 0;
  BinaryMask bits;

  static SubMask around(const BinaryMask& mask) {
    const BoundingBox b = mask.tight_bbox();
    SubMask sub;
    sub.x0 = int(b.x);
    sub.y0 = int(b.y);
    sub.bits = BinaryMask::zeros(int(b.w) + 1, int(b.h) + 1);
    for (int y = 0; y < sub.bits.height; ++y) {
      for (int x = 0; x < sub.bits.width; ++x) {
        sub.bits.set(x, y, mask.at(sub.x0 + x, sub.y0 + y));
      }
    }
    return sub;
  }

  // Removes every set pixel on the given page-coordinate line; returns the
  // number of pixels that were set on it.
  int erase_line(CutInfo::Axis axis, int coord) {
    int removed = 0;
    if (axis == CutInfo::Axis::Horizontal) {
      const int y = coord - y0;
      if (y < 0 || y >= bits.height) return 0;
      for (int x = 0; x < bits.width; ++x) {
        if (bits.at(x, y)) {
          bits.set(x, y, false);
          ++removed;
        }
      }
    } else {
      const int x = coord - x0;
      if (x < 0 || x >= bits.width) return 0;
      for (int y = 0; y < bits.height; ++y) {
        if (bits.at(x, y)) {
          bits.set(x, y, false);
          ++removed;
        }
      }
    }
    return removed;
  }

  int line_pixels(CutInfo::Axis axis, int coord) const {
    int n = 0;
    if (axis == CutInfo::Axis::Horizontal) {
      const int y = coord - y0;
      if (y < 0 || y >= bits.height) return 0;
      for (int x = 0; x < bits.width; ++x) n += bits.at(x, y) ? 1 : 0;
    } else {
      const int x = coord - x0;
      if (x < 0 || x >= bits.width) return 0;
      for (int y = 0; y < bits.height; ++y) n += bits.at(x, y) ? 1 : 0;
    }
    return n;
  }
};

// Component that owns the majority of the mask pixels under the line box;
// 0 when the box covers no labeled pixel.
std::int32_t dominant_component(const ComponentMap& cm, const SubMask& sub,
                                const BoundingBox& line) {
  std::vector<std::int64_t> votes(std::size_t(cm.count) + 1, 0);
  const int lx0 = std::max(0, int(std::floor(line.x)) - sub.x0);
  const int ly0 = std::max(0, int(std::floor(line.y)) - sub.y0);
  const int lx1 = std::min(cm.width - 1, int(std::ceil(line.right())) - 1 - sub.x0);
  const int ly1 = std::min(cm.height - 1, int(std::ceil(line.bottom())) - 1 - sub.y0);
  for (int y = ly0; y <= ly1; ++y) {
    for (int x = lx0; x <= lx1; ++x) {
      const std::int32_t label = cm.label_at(x, y);
      if (label > 0) ++votes[std::size_t(label)];
    }
  }
  std::int32_t best = 0;
  std::int64_t best_votes = 0;
  for (std::int32_t label = 1; label <= cm.count; ++label) {
    if (votes[std::size_t(label)] > best_votes) {
      best_votes = votes[std::size_t(label)];
      best = label;
    }
  }
  return best;
}

// True when every component owning lines of group a is distinct from every
// component owning lines of group b, and all lines found a component.
bool separates(const ComponentMap& cm, const SubMask& sub, const std::vector<BoundingBox>& lines,
               const std::vector<int>& group_a, const std::vector<int>& group_b) {
  std::vector<std::int32_t> owners_a, owners_b;
  for (int id : group_a) {
    const std::int32_t owner = dominant_component(cm, sub, lines[id]);
    if (owner == 0) return false;
    owners_a.push_back(owner);
  }
  for (int id : group_b) {
    const std::int32_t owner = dominant_component(cm, sub, lines[id]);
    if (owner == 0) return false;
    owners_b.push_back(owner);
  }
  for (std::int32_t a : owners_a) {
    for (std::int32_t b : owners_b) {
      if (a == b) return false;
    }
  }
  return true;
}

}  // namespace

std::optional<BinaryMask> estimate_bubble_mask(const GrayImage& img, const BoundingBox& box,
                                               const BubbleParams& params) {
  const double grow_x = box.w * params.dilate_ratio / 2.0;
  const double grow_y = box.h * params.dilate_ratio / 2.0;
  const int x0 = clamp_int(std::floor(box.x - grow_x), 0, img.width);
  const int y0 = clamp_int(std::floor(box.y - grow_y), 0, img.height);
  const int x1 = clamp_int(std::ceil(box.right() + grow_x), 0, img.width);
  const int y1 = clamp_int(std::ceil(box.bottom() + grow_y), 0, img.height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;

  const GrayImage region = crop(img, x0, y0, x1 - x0, y1 - y0);
  const BinaryMask edges = canny_edges(region, params.canny);
  BinaryMask non_edge = BinaryMask::zeros(region.width, region.height);
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      non_edge.set(x, y, !edges.at(x, y));
    }
  }
  const ComponentMap cm = connected_components(non_edge, Connectivity::Four);
  if (cm.count == 0) return std::nullopt;

  // Overlap of each component with the original (undilated) box.
  const int bx0 = std::max(x0, clamp_int(box.x, 0, img.width));
  const int by0 = std::max(y0, clamp_int(box.y, 0, img.height));
  const int bx1 = std::min(x1, clamp_int(box.right(), 0, img.width));
  const int by1 = std::min(y1, clamp_int(box.bottom(), 0, img.height));
  std::vector<std::int64_t> overlap(std::size_t(cm.count) + 1, 0);
  for (int y = by0; y < by1; ++y) {
    for (int x = bx0; x < bx1; ++x) {
      const std::int32_t label = cm.label_at(x - x0, y - y0);
      if (label > 0) ++overlap[std::size_t(label)];
    }
  }
  std::int32_t best = 1;
  for (std::int32_t label = 2; label <= cm.count; ++label) {
    if (overlap[std::size_t(label)] > overlap[std::size_t(best)]) best = label;
  }
  if (double(overlap[std::size_t(best)]) < params.min_overlap_ratio * box.w * box.h) {
    return std::nullopt;
  }

  // The winner must be blank (the bright inside of a bubble); a component of
  // solid dark art means there is no bubble here.
  double brightness_sum = 0.0;
  std::int64_t brightness_n = 0;
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      if (cm.label_at(x, y) == best) {
        brightness_sum += region.at(x, y);
        ++brightness_n;
      }
    }
  }
  if (brightness_sum < params.min_blank_mean * double(brightness_n)) return std::nullopt;

  BinaryMask out = BinaryMask::zeros(img.width, img.height);
  for (int y = 0; y < region.height; ++y) {
    for (int x = 0; x < region.width; ++x) {
      if (cm.label_at(x, y) == best) out.set(x0 + x, y0 + y, true);
    }
  }
  return out;
}

std::vector<BoundingBox> detect_text_lines_rule(const GrayImage& region_img,
                                                TextOrientation orientation,
                                                const CannyParams& canny) {
  if (region_img.width <= 0 || region_img.height <= 0) return {};
  const BinaryMask edges = canny_edges(region_img, canny);
  const bool vertical = orientation == TextOrientation::Vertical;
  const int n = vertical ? region_img.width : region_img.height;

  std::vector<char> active(std::size_t(n), 0);
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      if (edges.at(x, y)) active[std::size_t(vertical ? x : y)] = 1;
    }
  }

  struct Run {
    int lo, hi;  // inclusive
    int width() const { return hi - lo + 1; }
  };
  std::vector<Run> runs;
  for (int i = 0; i < n; ++i) {
    if (!active[std::size_t(i)]) continue;
    if (!runs.empty() && runs.back().hi == i - 1) {
      runs.back().hi = i;
    } else {
      runs.push_back({i, i});
    }
  }
  if (runs.empty()) return {};

  int max_width = 0;
  for (const Run& r : runs) max_width = std::max(max_width, r.width());

  std::vector<BoundingBox> lines;
  for (const Run& r : runs) {
    if (double(r.width()) < 0.5 * max_width) continue;  // ruby and stray marks
    int min_x = edges.width, min_y = edges.height, max_x = -1, max_y = -1;
    for (int y = 0; y < edges.height; ++y) {
      for (int x = 0; x < edges.width; ++x) {
        const int scan = vertical ? x : y;
        if (scan < r.lo || scan > r.hi || !edges.at(x, y)) continue;
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
      }
    }
    lines.push_back({double(min_x), double(min_y), double(max_x - min_x + 1),
                     double(max_y - min_y + 1)});
  }
  return lines;
}

BubbleSplit split_connected_bubble(const BinaryMask& mask,
                                   const std::vector<BoundingBox>& lines) {
  BubbleSplit out;
  if (lines.empty() || mask.none()) {
    out.masks.push_back(mask);
    return out;
  }

  std::vector<double> heights, tops;
  heights.reserve(lines.size());
  tops.reserve(lines.size());
  for (const BoundingBox& l : lines) {
    heights.push_back(l.h);
    tops.push_back(l.y);
  }
  std::vector<int> labels = meanshift_1d(tops, 0.5 * median(heights));
  int k = cluster_count(labels);

  if (k == 1 && lines.size() >= 2) {
    // One top-y cluster: side-by-side paragraphs separate along x instead.
    // Lines chain together while their x-extents come within half a median
    // line width of each other; a wider gap starts a new group.
    std::vector<double> widths;
    for (const BoundingBox& l : lines) widths.push_back(l.w);
    const double merge_gap = 0.5 * median(widths);
    std::vector<int> by_x(lines.size());
    std::iota(by_x.begin(), by_x.end(), 0);
    std::sort(by_x.begin(), by_x.end(),
              [&lines](int a, int b) { return lines[a].x < lines[b].x; });
    std::vector<int> xlabels(lines.size(), 0);
    int group = 0;
    double reach = lines[std::size_t(by_x[0])].right();
    for (std::size_t i = 1; i < by_x.size(); ++i) {
      const BoundingBox& l = lines[std::size_t(by_x[i])];
      if (l.x - reach > merge_gap) ++group;
      xlabels[std::size_t(by_x[i])] = group;
      reach = std::max(reach, l.right());
    }
    if (group >= 1) {
      labels = xlabels;
      k = group + 1;
      out.used_x_fallback = true;
    }
  }
  if (k == 1) {
    out.masks.push_back(mask);
    return out;
  }

  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    clusters[std::size_t(labels[i])].push_back(int(i));
  }

  SubMask working = SubMask::around(mask);
  std::vector<int> coords;
  for (int pair = 0; pair + 1 < k; ++pair) {
    const std::vector<int>& group_a = clusters[std::size_t(pair)];
    const std::vector<int>& group_b = clusters[std::size_t(pair) + 1];
    const BoundingBox box_a = union_of(lines, group_a);
    const BoundingBox box_b = union_of(lines, group_b);

    std::optional<Candidate> best;
    const auto consider = [&](CutInfo::Axis axis, double lo, double hi) {
      strictly_between(lo, hi, coords);
      const double mid = 0.5 * (lo + hi);
      for (int c : coords) {
        Candidate cand{axis, c, working.line_pixels(axis, c), std::abs(c - mid)};
        if (best && !better_cut(cand, *best)) continue;
        SubMask trial = working;
        trial.erase_line(axis, c);
        const ComponentMap cm = connected_components(trial.bits, Connectivity::Four);
        if (separates(cm, trial, lines, group_a, group_b)) best = cand;
      }
    };
    if (box_a.bottom() < box_b.y) consider(CutInfo::Axis::Horizontal, box_a.bottom(), box_b.y);
    if (box_b.bottom() < box_a.y) consider(CutInfo::Axis::Horizontal, box_b.bottom(), box_a.y);
    if (box_a.right() < box_b.x) consider(CutInfo::Axis::Vertical, box_a.right(), box_b.x);
    if (box_b.right() < box_a.x) consider(CutInfo::Axis::Vertical, box_b.right(), box_a.x);

    if (!best) {
      out.no_separating_cut = true;
      continue;
    }
    working.erase_line(best->axis, best->coord);
    out.cuts.push_back({best->axis, best->coord, best->length});
  }

  if (out.cuts.empty()) {
    out.masks.push_back(mask);
    return out;
  }

  // Assign each cluster the components its lines landed in; clusters sharing
  // a component (a boundary without a cut) merge into one paragraph.
  const ComponentMap cm = connected_components(working.bits, Connectivity::Four);
  std::vector<std::vector<std::int32_t>> owners(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    for (int id : clusters[std::size_t(c)]) {
      const std::int32_t owner = dominant_component(cm, working, lines[id]);
      if (owner > 0) owners[std::size_t(c)].push_back(owner);
    }
  }
  std::vector<int> group(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) group[std::size_t(c)] = c;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      bool shared = false;
      for (std::int32_t oa : owners[std::size_t(a)]) {
        for (std::int32_t ob : owners[std::size_t(b)]) {
          if (oa == ob) shared = true;
        }
      }
      if (shared) {
        const int from = group[std::size_t(b)];
        const int to = group[std::size_t(a)];
        for (int& g : group) {
          if (g == from) g = to;
        }
      }
    }
  }

  for (int c = 0; c < k; ++c) {
    if (group[std::size_t(c)] != c) continue;  // merged into an earlier cluster
    std::vector<char> keep(std::size_t(cm.count) + 1, 0);
    bool any = false;
    for (int member = 0; member < k; ++member) {
      if (group[std::size_t(member)] != c) continue;
      for (std::int32_t owner : owners[std::size_t(member)]) {
        keep[std::size_t(owner)] = 1;
        any = true;
      }
    }
    if (!any) continue;
    BinaryMask paragraph = BinaryMask::zeros(mask.width, mask.height);
    for (int y = 0; y < cm.height; ++y) {
      for (int x = 0; x < cm.width; ++x) {
        const std::int32_t label = cm.label_at(x, y);
        if (label > 0 && keep[std::size_t(label)]) {
          paragraph.set(working.x0 + x, working.y0 + y, true);
        }
      }
    }
    out.masks.push_back(std::move(paragraph));
  }
  if (out.masks.empty()) out.masks.push_back(mask);
  return out;
}

RegionCrop isolate_region_text(const GrayImage& img, const BinaryMask& mask) {
  const BoundingBox bbox = mask.tight_bbox();
  const int x0 = int(bbox.x);
  const int y0 = int(bbox.y);
  const int w = int(bbox.w);
  const int h = int(bbox.h);

  std::vector<std::uint8_t> blank;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      if (mask.at(x, y)) blank.push_back(img.at(x, y));
    }
  }
  std::nth_element(blank.begin(), blank.begin() + std::ptrdiff_t(blank.size() / 2), blank.end());
  const std::uint8_t fill = blank[blank.size() / 2];

  // Flood the non-mask area reachable from the crop border; unreached
  // non-mask pixels are holes (ink) and stay.
  std::vector<std::uint8_t> exterior(std::size_t(w) * h, 0);
  std::vector<std::pair<int, int>> queue;
  const auto try_seed = [&](int x, int y) {
    if (!mask.at(x0 + x, y0 + y) && !exterior[std::size_t(y) * w + x]) {
      exterior[std::size_t(y) * w + x] = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    try_seed(x, 0);
    try_seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    try_seed(0, y);
    try_seed(w - 1, y);
  }
  while (!queue.empty()) {
    const auto [cx, cy] = queue.back();
    queue.pop_back();
    if (cx > 0) try_seed(cx - 1, cy);
    if (cx + 1 < w) try_seed(cx + 1, cy);
    if (cy > 0) try_seed(cx, cy - 1);
    if (cy + 1 < h) try_seed(cx, cy + 1);
  }

  RegionCrop out{GrayImage::filled(w, h, fill), x0, y0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!exterior[std::size_t(y) * w + x]) {
        out.image.pixels[std::size_t(y) * w + x] = img.at(x0 + x, y0 + y);
      }
    }
  }
  return out;
}

std::vector<TextUnit> segment_page_regions(const GrayImage& img,
                                           const std::vector<BoundingBox>& boxes,
                                           const SegmentParams& params) {
  std::vector<TextUnit> out;
  for (const BoundingBox& box : boxes) {
    std::optional<BinaryMask> mask = estimate_bubble_mask(img, box, params.bubble);
    if (!mask) continue;

    const RegionCrop crop = isolate_region_text(img, *mask);
    std::vector<BoundingBox> lines =
        detect_text_lines_rule(crop.image, params.orientation, params.bubble.canny);
    if (lines.empty()) continue;
    for (BoundingBox& lb : lines) {
      lb.x += crop.x0;
      lb.y += crop.y0;
    }

    BubbleSplit split = split_connected_bubble(*mask, lines);

    // Each line goes to the region holding most of the blank pixels under its
    // box (the ink itself is a hole in every region mask); first region wins
    // ties so a line is never emitted twice.
    std::vector<std::vector<BoundingBox>> members(split.masks.size());
    for (const BoundingBox& lb : lines) {
      int owner = -1;
      std::int64_t best = 0;
      for (std::size_t r = 0; r < split.masks.size(); ++r) {
        const BinaryMask& region = split.masks[r];
        std::int64_t covered = 0;
        for (int y = int(lb.y); y < int(lb.y + lb.h); ++y) {
          for (int x = int(lb.x); x < int(lb.x + lb.w); ++x) {
            if (x >= 0 && y >= 0 && x < region.width && y < region.height && region.at(x, y)) {
              ++covered;
            }
          }
        }
        if (covered > best) {
          best = covered;
          owner = int(r);
        }
      }
      if (owner >= 0) members[std::size_t(owner)].push_back(lb);
    }

    for (std::size_t r = 0; r < split.masks.size(); ++r) {
      if (members[r].empty()) continue;
      BoundingBox region_box = members[r][0];
      for (std::size_t i = 1; i < members[r].size(); ++i) {
        region_box = box_union(region_box, members[r][i]);
      }
      out.push_back(TextUnit{region_box, "", std::move(members[r]), std::nullopt, std::nullopt,
                             std::move(split.masks[r])});
    }
  }
  return out;
}

}  // namespace manga
