#include "manga/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "manga/errors.hpp"

namespace manga {
namespace {

// ---------------------------------------------------------------------------
// Nested row/column layout generation. Construction guarantees the layout is
// recoverable by alternating gap splitting: every split keeps one child as a
// leaf that exactly fills its cell, so the only axis-aligned gaps crossing a
// region are the gutters the generator placed there.
// ---------------------------------------------------------------------------

struct LayoutSpec {
  double min_cell = 70.0;
  double min_gutter = 8.0;
  double max_gutter = 18.0;
  int max_depth = 3;
  int max_kids = 4;
  double leaf_chance = 0.25;
  double max_inset = 2.0;
};

std::vector<std::pair<double, double>> split_cells(Rng& rng, const LayoutSpec& spec, double lo,
                                                   double hi, int k) {
  std::vector<double> gutters(std::size_t(k - 1));
  double gutter_total = 0.0;
  for (double& g : gutters) {
    g = double(rng.uniform_int(int(spec.min_gutter), int(spec.max_gutter)));
    gutter_total += g;
  }
  const double extra = (hi - lo) - gutter_total - k * spec.min_cell;
  std::vector<double> weights(static_cast<std::size_t>(k));
  double weight_total = 0.0;
  for (double& w : weights) {
    w = rng.uniform() + 0.05;
    weight_total += w;
  }
  std::vector<std::pair<double, double>> cells;
  double cursor = lo;
  for (int i = 0; i < k; ++i) {
    const double size = spec.min_cell + extra * weights[std::size_t(i)] / weight_total;
    cells.push_back({cursor, cursor + size});
    cursor += size + (i + 1 < k ? gutters[std::size_t(i)] : 0.0);
  }
  return cells;
}

int max_children(const LayoutSpec& spec, double length) {
  int k = 2;
  while ((k + 1) * spec.min_cell + k * spec.min_gutter <= length) ++k;
  return std::min(k, spec.max_kids);
}

void gen_node(Rng& rng, const LayoutSpec& spec, double x0, double y0, double x1, double y1,
              bool row_axis, int depth, bool must_fill,
              std::vector<BoundingBox>& boxes_in_reading_order) {
  const double length = row_axis ? (y1 - y0) : (x1 - x0);
  const bool splittable =
      depth > 0 && !must_fill && 2 * spec.min_cell + spec.min_gutter <= length;
  // The root always splits; deeper nodes may stop early.
  if (!splittable || (depth < spec.max_depth && rng.chance(spec.leaf_chance))) {
    const double inset = must_fill ? 0.0 : double(rng.uniform_int(0, int(spec.max_inset)));
    boxes_in_reading_order.push_back(
        {x0 + inset, y0 + inset, (x1 - x0) - 2 * inset, (y1 - y0) - 2 * inset});
    return;
  }
  const int k = rng.uniform_int(2, max_children(spec, length));
  const auto cells = row_axis ? split_cells(rng, spec, y0, y1, k)
                              : split_cells(rng, spec, x0, x1, k);
  const int filler = rng.uniform_int(0, k - 1);
  if (row_axis) {
    for (int i = 0; i < k; ++i) {  // rows read top to bottom
      gen_node(rng, spec, x0, cells[std::size_t(i)].first, x1, cells[std::size_t(i)].second,
               false, depth - 1, i == filler, boxes_in_reading_order);
    }
  } else {
    for (int i = k - 1; i >= 0; --i) {  // columns read right to left
      gen_node(rng, spec, cells[std::size_t(i)].first, y0, cells[std::size_t(i)].second, y1,
               true, depth - 1, i == filler, boxes_in_reading_order);
    }
  }
}

std::vector<BoundingBox> generate_frames(Rng& rng, const LayoutSpec& spec, double width,
                                         double height) {
  std::vector<BoundingBox> ordered;
  gen_node(rng, spec, 0.0, 0.0, width, height, rng.chance(0.5), spec.max_depth, false, ordered);
  return ordered;
}

// Fisher-Yates permutation of 0..n-1.
std::vector<int> shuffled_indices(Rng& rng, std::size_t n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[std::size_t(rng.uniform_int(0, int(i) - 1))]);
  }
  return perm;
}

// ---------------------------------------------------------------------------
// Pixel helpers.
// ---------------------------------------------------------------------------

void paint_rect(GrayImage& img, int x0, int y0, int w, int h, std::uint8_t v) {
  const int xa = std::max(0, x0);
  const int ya = std::max(0, y0);
  const int xb = std::min(img.width, x0 + w);
  const int yb = std::min(img.height, y0 + h);
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) img.at(x, y) = v;
  }
}

bool inside_ellipse(double x, double y, double cx, double cy, double rx, double ry) {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

void paint_ellipse(GrayImage& img, double cx, double cy, double rx, double ry, std::uint8_t v) {
  const int xa = std::max(0, int(std::floor(cx - rx)));
  const int ya = std::max(0, int(std::floor(cy - ry)));
  const int xb = std::min(img.width, int(std::ceil(cx + rx)) + 1);
  const int yb = std::min(img.height, int(std::ceil(cy + ry)) + 1);
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) {
      if (inside_ellipse(x, y, cx, cy, rx, ry)) img.at(x, y) = v;
    }
  }
}

void paint_frame_border(GrayImage& img, const BoundingBox& box) {
  const int x = int(std::lround(box.x));
  const int y = int(std::lround(box.y));
  const int w = int(std::lround(box.w));
  const int h = int(std::lround(box.h));
  paint_rect(img, x, y, w, 2, 0);
  paint_rect(img, x, y + h - 2, w, 2, 0);
  paint_rect(img, x, y, 2, h, 0);
  paint_rect(img, x + w - 2, y, 2, h, 0);
}

bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

// ---------------------------------------------------------------------------
// Page plans: all structure is decided first, then rendered twice (source and
// target side) from the same plan, so both language renderings share art.
// ---------------------------------------------------------------------------

constexpr int kGlyph = 12;       // source glyph block side
constexpr int kPitch = 17;       // source glyph pitch (5 px gaps)
constexpr int kDstGlyph = 10;    // target glyph block side
constexpr int kDstPitch = 14;    // target glyph pitch
constexpr int kRing = 4;         // bubble outline thickness
constexpr int kTextPad = 6;      // white margin recorded around the glyphs

const std::vector<std::string>& vocab() {
  static const std::vector<std::string> words{
      "naru", "koto", "hito", "kimi",  "yume",   "sora",   "hoshi", "kaze", "toki", "hana",
      "mizu", "tori", "yama", "kawa",  "tsuki",  "hikari", "kokoro", "tabi", "uta",  "machi"};
  return words;
}

const std::vector<std::string>& tag_vocab() {
  static const std::vector<std::string> tags{"1boy",   "1girl",  "2girls", "indoor",
                                             "night",  "outdoor", "serious", "smile"};
  return tags;
}

std::string reverse_word(const std::string& w) { return std::string(w.rbegin(), w.rend()); }

std::string random_sentence(Rng& rng, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab()[std::size_t(rng.uniform_int(0, int(vocab().size()) - 1))];
  }
  return out;
}

std::string translate_sentence(const std::string& src) {
  std::string out;
  std::string word;
  std::istringstream in(src);
  while (in >> word) {
    if (!out.empty()) out += ' ';
    out += reverse_word(word);
  }
  return out;
}

struct ArtRect {
  BoundingBox box;
  std::uint8_t shade = 128;
};

struct BubblePlan {
  int frame_index = 0;   // index into the page's (shuffled) frame array
  double cx = 0, cy = 0;
  double rx_i = 0, ry_i = 0;  // interior radii; the ring adds kRing outside
  int cols = 2, rows = 4;     // source glyph grid
  BoundingBox annot;          // recorded text box (glyph extent + kTextPad)
  std::string src_text;
  std::string dst_text;
  int truth_order = 0;
};

struct PagePlan {
  std::vector<FrameBox> frames;  // order fields carry the generative rank
  std::vector<ArtRect> art;
  std::vector<BubblePlan> bubbles;  // in generative reading order
};

// Frame layout, one bubble per frame, art that stays clear of the bubbles.
PagePlan plan_page(Rng& rng, int width, int height) {
  LayoutSpec spec;
  spec.min_cell = 170.0;
  spec.max_kids = 3;
  PagePlan plan;

  const std::vector<BoundingBox> ordered = generate_frames(rng, spec, width, height);
  const std::vector<int> perm = shuffled_indices(rng, ordered.size());
  plan.frames.resize(ordered.size());
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    FrameBox f;
    f.box = ordered[rank];
    f.order = int(rank);
    const int n_tags = rng.uniform_int(0, 2);
    for (int t = 0; t < n_tags; ++t) {
      f.tags.push_back(tag_vocab()[std::size_t(rng.uniform_int(0, int(tag_vocab().size()) - 1))]);
    }
    std::sort(f.tags.begin(), f.tags.end());
    f.tags.erase(std::unique(f.tags.begin(), f.tags.end()), f.tags.end());
    plan.frames[std::size_t(perm[rank])] = std::move(f);
  }

  int order_counter = 0;
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    const int frame_index = perm[rank];
    const BoundingBox& fb = ordered[rank];

    BubblePlan b;
    b.frame_index = frame_index;
    // Dense pages carry smaller balloons, which also keeps the page's corner
    // population dominated by art rather than by interchangeable glyph blocks.
    const bool dense = ordered.size() > 6;
    b.cols = dense ? 2 : rng.uniform_int(2, 3);
    b.rows = dense ? rng.uniform_int(3, 4) : rng.uniform_int(4, 5);
    const double extent_w = (b.cols - 1) * kPitch + kGlyph;
    const double extent_h = (b.rows - 1) * kPitch + kGlyph;
    const double annot_w = extent_w + 2 * kTextPad;
    const double annot_h = extent_h + 2 * kTextPad;
    // Interior sized so the recorded box's corners stay well inside it.
    b.rx_i = std::ceil(0.74 * annot_w);
    b.ry_i = std::ceil(0.74 * annot_h);
    const double half_w = b.rx_i + kRing;
    const double half_h = b.ry_i + kRing;
    const double margin = 10.0;
    const double lo_x = fb.x + margin + half_w;
    const double hi_x = fb.right() - margin - half_w;
    const double lo_y = fb.y + margin + half_h;
    const double hi_y = fb.bottom() - margin - half_h;
    b.cx = std::floor(lo_x < hi_x ? rng.uniform(lo_x, hi_x) : (fb.x + fb.w / 2));
    b.cy = std::floor(lo_y < hi_y ? rng.uniform(lo_y, hi_y) : (fb.y + fb.h / 2));
    const double gx = std::floor(b.cx - extent_w / 2);
    const double gy = std::floor(b.cy - extent_h / 2);
    b.annot = BoundingBox{gx - kTextPad, gy - kTextPad, annot_w, annot_h};
    b.src_text = random_sentence(rng, rng.uniform_int(2, 3));
    b.dst_text = translate_sentence(b.src_text);
    b.truth_order = order_counter++;
    plan.bubbles.push_back(b);

    // Distractor art that keeps clear of the bubble. Overlapping rectangle
    // clusters with mixed shades give each corner a locally unique
    // neighborhood, the way real art does; lone flat rectangles all look
    // alike up close and are useless for matching.
    const BoundingBox keep_out{b.cx - half_w - 6, b.cy - half_h - 6, 2 * (half_w + 6),
                               2 * (half_h + 6)};
    const int clusters = rng.uniform_int(8, 11);
    for (int r = 0; r < clusters; ++r) {
      for (int attempt = 0; attempt < 25; ++attempt) {
        const double w = double(rng.uniform_int(8, 18));
        const double h = double(rng.uniform_int(8, 18));
        const double lo_ax = fb.x + 6;
        const double hi_ax = fb.right() - 6 - w - 14;
        const double lo_ay = fb.y + 6;
        const double hi_ay = fb.bottom() - 6 - h - 14;
        if (lo_ax >= hi_ax || lo_ay >= hi_ay) break;
        const BoundingBox seed_rect{std::floor(rng.uniform(lo_ax, hi_ax)),
                                    std::floor(rng.uniform(lo_ay, hi_ay)), w, h};
        const BoundingBox cluster_extent{seed_rect.x - 12, seed_rect.y - 12, w + 26, h + 26};
        if (boxes_overlap(cluster_extent, keep_out)) continue;
        plan.art.push_back({seed_rect, std::uint8_t(rng.uniform_int(0, 200))});
        const int extras = rng.uniform_int(1, 2);
        for (int e = 0; e < extras; ++e) {
          const double dx = double(rng.uniform_int(4, 12) * (rng.chance(0.5) ? 1 : -1));
          const double dy = double(rng.uniform_int(4, 12) * (rng.chance(0.5) ? 1 : -1));
          BoundingBox piece{seed_rect.x + dx, seed_rect.y + dy,
                            double(rng.uniform_int(6, 14)), double(rng.uniform_int(6, 14))};
          piece.x = std::clamp(piece.x, fb.x + 4, fb.right() - 4 - piece.w);
          piece.y = std::clamp(piece.y, fb.y + 4, fb.bottom() - 4 - piece.h);
          if (boxes_overlap(piece, keep_out)) continue;
          plan.art.push_back({piece, std::uint8_t(rng.uniform_int(0, 200))});
        }
        break;
      }
    }
  }
  return plan;
}

// Renders a planned page; the source side draws vertical glyph columns, the
// target side horizontal glyph rows.
GrayImage render_plan(const PagePlan& plan, int width, int height, bool target_side) {
  GrayImage img = GrayImage::filled(width, height, 255);
  for (const FrameBox& f : plan.frames) paint_frame_border(img, f.box);
  for (const ArtRect& a : plan.art) {
    paint_rect(img, int(a.box.x), int(a.box.y), int(a.box.w), int(a.box.h), a.shade);
  }
  for (const BubblePlan& b : plan.bubbles) {
    paint_ellipse(img, b.cx, b.cy, b.rx_i + kRing, b.ry_i + kRing, 0);
    paint_ellipse(img, b.cx, b.cy, b.rx_i, b.ry_i, 255);
    if (!target_side) {
      const int gx = int(std::floor(b.cx - ((b.cols - 1) * kPitch + kGlyph) / 2.0));
      const int gy = int(std::floor(b.cy - ((b.rows - 1) * kPitch + kGlyph) / 2.0));
      for (int c = 0; c < b.cols; ++c) {
        for (int r = 0; r < b.rows; ++r) {
          paint_rect(img, gx + c * kPitch, gy + r * kPitch, kGlyph, kGlyph, 0);
        }
      }
    } else {
      const int cols = 3, rows = 2;
      const int gx = int(std::floor(b.cx - ((cols - 1) * kDstPitch + kDstGlyph) / 2.0));
      const int gy = int(std::floor(b.cy - ((rows - 1) * kDstPitch + kDstGlyph) / 2.0));
      for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
          paint_rect(img, gx + c * kDstPitch, gy + r * kDstPitch, kDstGlyph, kDstGlyph, 0);
        }
      }
    }
  }
  return img;
}

// The exact blank-interior mask of one rendered bubble: interior pixels that
// stayed white after the glyphs were drawn.
BinaryMask bubble_truth_mask(const GrayImage& rendered, const BubblePlan& b) {
  BinaryMask mask = BinaryMask::zeros(rendered.width, rendered.height);
  const int xa = std::max(0, int(std::floor(b.cx - b.rx_i)));
  const int ya = std::max(0, int(std::floor(b.cy - b.ry_i)));
  const int xb = std::min(rendered.width, int(std::ceil(b.cx + b.rx_i)) + 1);
  const int yb = std::min(rendered.height, int(std::ceil(b.cy + b.ry_i)) + 1);
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) {
      if (inside_ellipse(x, y, b.cx, b.cy, b.rx_i, b.ry_i) && rendered.at(x, y) == 255) {
        mask.set(x, y, true);
      }
    }
  }
  return mask;
}

// Mild scan-like perspective; identity when disabled.
Homography random_perspective(Rng& rng, bool enabled) {
  if (!enabled) return Homography::identity();
  Homography g;
  g.m = {1.0 + rng.uniform(-0.02, 0.02), rng.uniform(-0.01, 0.01),  rng.uniform(-4.0, 4.0),
         rng.uniform(-0.01, 0.01),       1.0 + rng.uniform(-0.02, 0.02), rng.uniform(-4.0, 4.0),
         rng.uniform(-2e-5, 2e-5),       rng.uniform(-2e-5, 2e-5),  1.0};
  return g;
}

GrayImage render_cover(Rng& rng, int width, int height) {
  GrayImage img = GrayImage::filled(width, height, 255);
  paint_ellipse(img, width / 2.0, height / 2.5, width / 3.0, height / 4.0, 80);
  for (int bar = 0; bar < 4; ++bar) {
    paint_rect(img, width / 8, height * 2 / 3 + bar * 26, width * 3 / 4, 10, 0);
  }
  for (int r = 0; r < 24; ++r) {
    paint_rect(img, rng.uniform_int(4, width - 24), rng.uniform_int(4, height - 24),
               rng.uniform_int(5, 18), rng.uniform_int(5, 18),
               std::uint8_t(rng.uniform_int(40, 210)));
  }
  return img;
}

std::string page_name(const char* stem, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", stem, index);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  out << text;
  if (!out) throw IoError("failed writing: " + path);
}

}  // namespace

Page generate_layout_page(int width, int height, Rng& rng) {
  LayoutSpec spec;  // defaults: 70 px cells, depth 3, up to 4 children
  Page page;
  page.width = width;
  page.height = height;

  const std::vector<BoundingBox> ordered = generate_frames(rng, spec, width, height);
  const std::vector<int> perm = shuffled_indices(rng, ordered.size());
  page.frames.resize(ordered.size());
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    page.frames[std::size_t(perm[rank])] = FrameBox{ordered[rank], int(rank), {}};
  }

  // One or two text boxes per frame; a frame's second text sits further left
  // at the same height, so the right one reads first.
  struct PlacedText {
    BoundingBox box;
    int frame_index;
    int order;
  };
  std::vector<PlacedText> placed;
  int order_counter = 0;
  for (std::size_t rank = 0; rank < ordered.size(); ++rank) {
    const BoundingBox& fb = ordered[rank];
    const int frame_index = perm[rank];
    const bool two = fb.w >= 100.0 && rng.chance(0.35);
    if (two) {
      const double w = double(rng.uniform_int(18, 26));
      const double h = double(rng.uniform_int(18, 30));
      const double y = std::floor(rng.uniform(fb.y + 8, fb.bottom() - 8 - h));
      const double right_x = std::floor(rng.uniform(fb.x + 8 + w + 15, fb.right() - 8 - w));
      const double left_x = std::floor(rng.uniform(fb.x + 8, right_x - w - 15));
      placed.push_back({{right_x, y, w, h}, frame_index, order_counter++});
      placed.push_back({{left_x, y, w, h}, frame_index, order_counter++});
    } else {
      const double w = double(rng.uniform_int(20, int(std::min(40.0, fb.w - 16))));
      const double h = double(rng.uniform_int(20, int(std::min(40.0, fb.h - 16))));
      const double x = std::floor(rng.uniform(fb.x + 8, fb.right() - 8 - w));
      const double y = std::floor(rng.uniform(fb.y + 8, fb.bottom() - 8 - h));
      placed.push_back({{x, y, w, h}, frame_index, order_counter++});
    }
  }
  const std::vector<int> text_perm = shuffled_indices(rng, placed.size());
  page.texts.resize(placed.size());
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const PlacedText& t = placed[i];
    page.texts[std::size_t(text_perm[i])] =
        TextUnit{t.box, "", {}, t.order, t.frame_index, std::nullopt};
  }
  return page;
}

Page strip_layout_annotations(Page page) {
  for (FrameBox& f : page.frames) f.order.reset();
  for (TextUnit& t : page.texts) {
    t.order.reset();
    t.scene.reset();
  }
  return page;
}

BubbleCase generate_bubble_case(Rng& rng) {
  const int width = rng.uniform_int(230, 280);
  const int height = rng.uniform_int(260, 330);
  const int cols = rng.uniform_int(1, 2);
  const int rows = rng.uniform_int(3, 5);
  const double extent_w = (cols - 1) * kPitch + kGlyph;
  const double extent_h = (rows - 1) * kPitch + kGlyph;

  BubblePlan b;
  b.cols = cols;
  b.rows = rows;
  b.rx_i = extent_w / 2 + rng.uniform_int(36, 48);
  b.ry_i = extent_h / 2 + rng.uniform_int(36, 48);
  b.cx = std::floor(width / 2.0 + rng.uniform(-8, 8));
  b.cy = std::floor(height / 2.0 + rng.uniform(-8, 8));

  GrayImage img = GrayImage::filled(width, height, 255);
  // distractor art outside the bubble
  const BoundingBox keep_out{b.cx - b.rx_i - kRing - 5, b.cy - b.ry_i - kRing - 5,
                             2 * (b.rx_i + kRing + 5), 2 * (b.ry_i + kRing + 5)};
  for (int r = 0; r < 14; ++r) {
    const BoundingBox candidate{double(rng.uniform_int(0, width - 18)),
                                double(rng.uniform_int(0, height - 18)),
                                double(rng.uniform_int(5, 16)), double(rng.uniform_int(5, 16))};
    if (boxes_overlap(candidate, keep_out)) continue;
    paint_rect(img, int(candidate.x), int(candidate.y), int(candidate.w), int(candidate.h),
               std::uint8_t(rng.uniform_int(40, 200)));
  }
  paint_ellipse(img, b.cx, b.cy, b.rx_i + kRing, b.ry_i + kRing, 0);
  paint_ellipse(img, b.cx, b.cy, b.rx_i, b.ry_i, 255);
  const int gx = int(std::floor(b.cx - extent_w / 2));
  const int gy = int(std::floor(b.cy - extent_h / 2));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      paint_rect(img, gx + c * kPitch, gy + r * kPitch, kGlyph, kGlyph, 0);
    }
  }

  BubbleCase out;
  out.truth_mask = bubble_truth_mask(img, b);
  out.image = std::move(img);
  out.box = BoundingBox{b.cx - b.rx_i - kRing, b.cy - b.ry_i - kRing, 2 * (b.rx_i + kRing),
                        2 * (b.ry_i + kRing)};
  return out;
}

RubyCase generate_ruby_case(double ratio, Rng& rng) {
  const int main_w = rng.uniform_int(14, 20);
  const int ruby_w = std::max(2, int(std::lround(ratio * main_w)));
  const int rows = rng.uniform_int(4, 6);
  const int pitch = main_w + 5;
  const int extent_h = (rows - 1) * pitch + main_w;
  const int gap = rng.uniform_int(8, 12);
  const bool ruby_left = rng.chance(0.5);

  const int width = main_w + ruby_w + gap + 24;
  const int height = extent_h + 24;
  GrayImage img = GrayImage::filled(width, height, 255);

  const int main_x = ruby_left ? 12 + ruby_w + gap : 12;
  const int ruby_x = ruby_left ? 12 : 12 + main_w + gap;
  for (int r = 0; r < rows; ++r) {
    paint_rect(img, main_x, 12 + r * pitch, main_w, main_w, 0);
  }
  // ruby blocks: small squares stacked along the same vertical span
  const int ruby_pitch = ruby_w + 3;
  for (int y = 12; y + ruby_w <= 12 + extent_h; y += ruby_pitch) {
    paint_rect(img, ruby_x, y, ruby_w, ruby_w, 0);
  }

  RubyCase out;
  out.image = std::move(img);
  out.ratio = ratio;
  out.expected_lines = ratio < 0.5 ? 1 : 2;
  return out;
}

SplitCase generate_split_case(Rng& rng) {
  const int cols_a = rng.uniform_int(2, 3);
  const int cols_b = rng.uniform_int(2, 3);
  const int line_w = 14;
  const int pitch = 19;
  const int ha = rng.uniform_int(55, 75);
  const int hb = rng.uniform_int(55, 75);
  const int ya = rng.uniform_int(12, 20);
  const int gap = rng.uniform_int(int(0.9 * ha), int(1.3 * ha));
  const int yb = ya + ha + gap;

  const int extent_a = (cols_a - 1) * pitch + line_w;
  const int extent_b = (cols_b - 1) * pitch + line_w;
  const int width = std::max(extent_a, extent_b) + 2 * rng.uniform_int(26, 40);
  const int height = yb + hb + rng.uniform_int(18, 28);
  const int xa = (width - extent_a) / 2 + rng.uniform_int(-6, 6);
  const int xb = (width - extent_b) / 2 + rng.uniform_int(-6, 6);

  SplitCase out;
  out.mask = BinaryMask::zeros(width, height);
  const double cxa = xa + extent_a / 2.0, cya = ya + ha / 2.0;
  const double cxb = xb + extent_b / 2.0, cyb = yb + hb / 2.0;
  const double rxa = extent_a / 2.0 + rng.uniform_int(14, 24);
  const double rya = ha / 2.0 + rng.uniform_int(12, 20);
  const double rxb = extent_b / 2.0 + rng.uniform_int(14, 24);
  const double ryb = hb / 2.0 + rng.uniform_int(12, 20);
  const double waist_w = double(rng.uniform_int(16, 28));
  const double waist_x = (cxa + cxb) / 2.0 - waist_w / 2.0 + rng.uniform_int(-4, 4);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool in_a = inside_ellipse(x, y, cxa, cya, rxa, rya);
      const bool in_b = inside_ellipse(x, y, cxb, cyb, rxb, ryb);
      const bool in_waist =
          x >= waist_x && x < waist_x + waist_w && y >= cya && y <= cyb;
      if (in_a || in_b || in_waist) out.mask.set(x, y, true);
    }
  }
  for (int c = 0; c < cols_a; ++c) {
    out.lines.push_back({double(xa + c * pitch), double(ya), double(line_w), double(ha)});
  }
  for (int c = 0; c < cols_b; ++c) {
    out.lines.push_back({double(xb + c * pitch), double(yb), double(line_w), double(hb)});
  }
  return out;
}

FixtureVolume generate_volume(const FixtureParams& params) {
  if (params.pages < 0 || params.covers < 0 || params.width < 400 || params.height < 400) {
    throw ConfigError("generate_volume: need non-negative counts and pages of at least 400x400");
  }
  FixtureVolume vol;
  vol.src.volume_id = "fixture-src";
  vol.dst.volume_id = "fixture-dst";

  {
    std::string dict;
    for (const std::string& w : vocab()) {
      dict += w;
      dict += '\t';
      dict += reverse_word(w);
      dict += '\n';
    }
    vol.dict_tsv = std::move(dict);
  }

  for (int c = 0; c < params.covers; ++c) {
    Rng rng = Rng::derive(params.seed, 100000 + std::uint64_t(c));
    vol.dst.images.push_back(render_cover(rng, params.width, params.height));
    Page cover;
    cover.id = page_name("cover", c);
    cover.width = params.width;
    cover.height = params.height;
    vol.dst.pages.push_back(std::move(cover));
  }

  for (int i = 0; i < params.pages; ++i) {
    Rng rng = Rng::derive(params.seed, std::uint64_t(i));
    const PagePlan plan = plan_page(rng, params.width, params.height);
    const Homography g = random_perspective(rng, params.perspective);

    GrayImage src_img = render_plan(plan, params.width, params.height, false);
    const GrayImage dst_base = render_plan(plan, params.width, params.height, true);

    PagePair warp_spec;
    warp_spec.src_width = params.width;
    warp_spec.src_height = params.height;
    warp_spec.h = g.inverse();
    GrayImage dst_img = warp_page(warp_spec, dst_base);

    const Homography g_inv = g.inverse();
    const std::string id = page_name("page", i);

    Page src_page;
    src_page.id = id;
    src_page.width = params.width;
    src_page.height = params.height;
    src_page.frames = plan.frames;

    Page dst_page;
    dst_page.id = id;
    dst_page.width = params.width;
    dst_page.height = params.height;

    for (const BubblePlan& b : plan.bubbles) {
      BinaryMask truth_mask = bubble_truth_mask(src_img, b);
      src_page.texts.push_back(
          TextUnit{b.annot, b.src_text, {}, b.truth_order, b.frame_index, std::move(truth_mask)});
      dst_page.texts.push_back(TextUnit{apply_homography(g_inv, b.annot), b.dst_text, {},
                                        b.truth_order, b.frame_index, std::nullopt});

      ParallelRecord record;
      record.volume_id = vol.src.volume_id;
      record.page_id = id;
      record.src_text = b.src_text;
      record.dst_text = b.dst_text;
      record.scene = b.frame_index;
      record.order = b.truth_order;
      record.tags = plan.frames[std::size_t(b.frame_index)].tags;
      record.src_box = b.annot;
      vol.truth.push_back(std::move(record));
    }

    PagePair pair;
    pair.src_index = i;
    pair.dst_index = params.covers + i;
    pair.src_width = params.width;
    pair.src_height = params.height;
    pair.h = g;
    pair.inliers = 0;  // truth pairing; not established by robust fitting
    vol.pairs.pairs.push_back(pair);

    vol.src.images.push_back(std::move(src_img));
    vol.src.pages.push_back(std::move(src_page));
    vol.dst.images.push_back(std::move(dst_img));
    vol.dst.pages.push_back(std::move(dst_page));
  }

  for (int c = 0; c < params.covers; ++c) vol.pairs.unmatched_dst.push_back(c);
  return vol;
}

void write_volume(const FixtureVolume& vol, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir + "/src", ec);
  fs::create_directories(dir + "/dst", ec);
  if (ec) throw IoError("cannot create volume directory: " + dir);

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["src_volume"] = vol.src.volume_id;
  manifest["dst_volume"] = vol.dst.volume_id;
  manifest["width"] = vol.src.images.empty() ? 0 : vol.src.images[0].width;
  manifest["height"] = vol.src.images.empty() ? 0 : vol.src.images[0].height;
  manifest["pages"] = int(vol.src.images.size());
  manifest["covers"] = int(vol.dst.images.size()) - int(vol.src.images.size());

  const auto dump_side = [&](const char* side, const VolumeData& data) {
    std::vector<std::string> images, annotations;
    for (std::size_t i = 0; i < data.images.size(); ++i) {
      const std::string stem =
          data.pages.size() == data.images.size() && !data.pages[i].id.empty()
              ? data.pages[i].id
              : page_name("page", int(i));
      const std::string rel_png = std::string(side) + "/" + stem + ".png";
      const std::string rel_json = std::string(side) + "/" + stem + ".json";
      write_png(data.images[i], dir + "/" + rel_png);
      if (i < data.pages.size()) {
        save_page_annotations(data.pages[i], dir + "/" + rel_json);
        annotations.push_back(rel_json);
      }
      images.push_back(rel_png);
    }
    manifest[std::string(side) + "_images"] = images;
    manifest[std::string(side) + "_annotations"] = annotations;
  };
  dump_side("src", vol.src);
  dump_side("dst", vol.dst);

  write_text_file(dir + "/pairs.json", pairing_to_json(vol.pairs));
  save_corpus_jsonl(dir + "/truth.jsonl", vol.truth);
  write_text_file(dir + "/dict.tsv", vol.dict_tsv);
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

FixtureVolume load_volume(const std::string& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("volume manifest: ") + e.what());
  }
  FixtureVolume vol;
  try {
    vol.src.volume_id = manifest.at("src_volume").get<std::string>();
    vol.dst.volume_id = manifest.at("dst_volume").get<std::string>();
    const auto load_side = [&](const char* side, VolumeData& data) {
      for (const auto& rel : manifest.at(std::string(side) + "_images")) {
        data.images.push_back(read_png(dir + "/" + rel.get<std::string>()));
      }
      for (const auto& rel : manifest.at(std::string(side) + "_annotations")) {
        data.pages.push_back(load_page_annotations(dir + "/" + rel.get<std::string>()));
      }
    };
    load_side("src", vol.src);
    load_side("dst", vol.dst);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("volume manifest: ") + e.what());
  }
  vol.pairs = pairing_from_json(read_text_file(dir + "/pairs.json"));
  vol.truth = load_corpus_jsonl(dir + "/truth.jsonl");
  vol.dict_tsv = read_text_file(dir + "/dict.tsv");
  return vol;
}

}  // namespace manga
