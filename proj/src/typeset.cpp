#include "manga/typeset.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "manga/errors.hpp"
#include "manga/unicode.hpp"

namespace manga {
namespace {

struct WrappedLine {
  std::string text;
  double ems = 0.0;  // advance sum; exact for half-em advances
};

// Greedy wrap against a pixel budget: a chunk fits when ems * size <= width.
// Breaks at whitespace runs (joined with a single space) and splits a word
// per character when it cannot fit on a line of its own; an over-wide single
// glyph still lands alone and is caught by the width feasibility check.
std::vector<WrappedLine> wrap_text(const std::string& text, const GlyphMetrics& metrics,
                                   int size, double width_px) {
  const std::vector<DecodedChar> cps = decode_utf8(text);

  struct Word {
    std::size_t begin = 0, end = 0;  // index range into cps
    double ems = 0.0;
  };
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_space(cps[i].cp)) {
      ++i;
      continue;
    }
    Word w{i, i, 0.0};
    while (w.end < cps.size() && !is_space(cps[w.end].cp)) {
      w.ems += metrics.advance(cps[w.end].cp);
      ++w.end;
    }
    words.push_back(w);
    i = w.end;
  }

  const auto slice = [&](std::size_t begin, std::size_t end) {
    const std::size_t from = cps[begin].offset;
    const std::size_t to = cps[end - 1].offset + cps[end - 1].length;
    return text.substr(from, to - from);
  };
  const auto fits = [&](double ems) { return ems * size <= width_px; };

  std::vector<WrappedLine> lines;
  WrappedLine cur;
  const auto flush = [&] {
    if (!cur.text.empty()) {
      lines.push_back(cur);
      cur = {};
    }
  };

  const double space_em = metrics.advance(U' ');
  for (const Word& w : words) {
    const double joined = cur.text.empty() ? w.ems : cur.ems + space_em + w.ems;
    if (fits(joined)) {
      if (!cur.text.empty()) {
        cur.text += ' ';
        cur.ems += space_em;
      }
      cur.text += slice(w.begin, w.end);
      cur.ems += w.ems;
      continue;
    }
    flush();
    if (fits(w.ems)) {
      cur.text = slice(w.begin, w.end);
      cur.ems = w.ems;
      continue;
    }
    for (std::size_t k = w.begin; k < w.end; ++k) {
      const double adv = metrics.advance(cps[k].cp);
      if (!cur.text.empty() && !fits(cur.ems + adv)) flush();
      cur.text += slice(k, k + 1);
      cur.ems += adv;
    }
  }
  flush();
  return lines;
}

bool plan_fits(const std::vector<WrappedLine>& lines, const GlyphMetrics& metrics, int size,
               const BoundingBox& rect) {
  for (const WrappedLine& line : lines) {
    if (line.ems * size > rect.w) return false;
  }
  return double(lines.size()) * (metrics.line_height() * size) <= rect.h;
}

class MaskClipSink final : public GlyphSink {
 public:
  MaskClipSink(GrayImage& img, const BinaryMask* mask) : img_(img), mask_(mask) {}

  void set(int x, int y, std::uint8_t value) override {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    if (mask_ && !(x < mask_->width && y < mask_->height && mask_->at(x, y))) return;
    img_.pixels[std::size_t(y) * img_.width + x] = value;
  }

 private:
  GrayImage& img_;
  const BinaryMask* mask_;
};

}  // namespace

const GlyphMetrics& default_glyph_metrics() {
  static const DefaultGlyphMetrics metrics;
  return metrics;
}

GrayImage MedianFillCleaner::clean(const GrayImage& img, const std::vector<BoundingBox>& line_boxes,
                                   const BinaryMask& mask) {
  if (line_boxes.empty()) return img;
  if (mask.width != img.width || mask.height != img.height) {
    throw ConfigError("clean: mask size does not match the image");
  }
  const auto in_any_box = [&](int x, int y) {
    const Point2 center{x + 0.5, y + 0.5};
    for (const BoundingBox& b : line_boxes) {
      if (b.contains(center)) return true;
    }
    return false;
  };

  std::vector<std::uint8_t> background;
  std::vector<std::uint8_t> whole_mask;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) continue;
      whole_mask.push_back(img.at(x, y));
      if (!in_any_box(x, y)) background.push_back(img.at(x, y));
    }
  }
  std::vector<std::uint8_t>& samples = background.empty() ? whole_mask : background;
  if (samples.empty()) return img;  // empty mask: nothing to clean
  std::nth_element(samples.begin(), samples.begin() + std::ptrdiff_t(samples.size() / 2),
                   samples.end());
  const std::uint8_t median = samples[samples.size() / 2];

  GrayImage out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (mask.at(x, y) && in_any_box(x, y)) {
        out.pixels[std::size_t(y) * out.width + x] = median;
      }
    }
  }
  return out;
}

GrayImage clean_text(const GrayImage& img, const std::vector<BoundingBox>& line_boxes,
                     const BinaryMask& mask) {
  MedianFillCleaner cleaner;
  return cleaner.clean(img, line_boxes, mask);
}

BoundingBox inscribed_rect(const BinaryMask& mask) {
  int best_area = 0;
  BoundingBox best;
  std::vector<int> heights(std::size_t(mask.width), 0);
  std::vector<int> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      heights[std::size_t(x)] = mask.at(x, y) ? heights[std::size_t(x)] + 1 : 0;
    }
    stack.clear();
    for (int x = 0; x <= mask.width; ++x) {
      const int h = x < mask.width ? heights[std::size_t(x)] : -1;
      while (!stack.empty() && heights[std::size_t(stack.back())] >= h) {
        const int height = heights[std::size_t(stack.back())];
        stack.pop_back();
        const int left = stack.empty() ? 0 : stack.back() + 1;
        const int width = x - left;
        if (height * width > best_area) {
          best_area = height * width;
          best = BoundingBox{double(left), double(y - height + 1), double(width), double(height)};
        }
      }
      stack.push_back(x);
    }
  }
  if (best_area == 0) throw EmptyMaskError("inscribed_rect: mask has no set pixels");
  return best;
}

LetteringPlan plan_lettering(const std::string& text, const BinaryMask& mask,
                             const GlyphMetrics& metrics) {
  if (text.empty()) throw ConfigError("plan_lettering: empty text");
  const BoundingBox rect = inscribed_rect(mask);

  const auto feasible = [&](int size) {
    return plan_fits(wrap_text(text, metrics, size, rect.w), metrics, size, rect);
  };

  LetteringPlan plan;
  plan.rect = rect;
  plan.region = &mask;
  if (!feasible(kMinFontSize)) {
    plan.font_size = kMinFontSize;
    plan.overflow = true;
  } else {
    // Feasibility is monotone in the size (wrap decisions depend on it only
    // through the em budget), so the largest feasible size binary-searches.
    int lo = kMinFontSize;
    int hi = std::max(kMinFontSize, int(std::floor(rect.h)));
    while (lo < hi) {
      const int mid = lo + (hi - lo + 1) / 2;
      if (feasible(mid)) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    plan.font_size = lo;
  }

  const int size = plan.font_size;
  const std::vector<WrappedLine> lines = wrap_text(text, metrics, size, rect.w);
  const double line_height = metrics.line_height() * size;
  const double top = rect.y + (rect.h - double(lines.size()) * line_height) / 2.0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    PlannedLine out;
    out.text = lines[i].text;
    const double width_px = lines[i].ems * size;
    out.baseline = Point2{rect.x + (rect.w - width_px) / 2.0, top + double(i) * line_height + size};
    double pen = out.baseline.x;
    for (const DecodedChar& c : decode_utf8(out.text)) {
      const double adv = metrics.advance(c.cp) * size;
      out.glyphs.push_back(c.cp);
      out.cells.push_back(BoundingBox{pen, out.baseline.y - size, adv, double(size)});
      pen += adv;
    }
    plan.lines.push_back(std::move(out));
  }
  return plan;
}

LetteringPlan plan_lettering(const std::string& text, const BinaryMask& mask) {
  return plan_lettering(text, mask, default_glyph_metrics());
}

void BoxGlyphRasterizer::draw_glyph(GlyphSink& sink, char32_t cp, const BoundingBox& cell) {
  if (is_space(cp)) return;
  const int x0 = int(std::lround(cell.x + 0.15 * cell.w));
  const int x1 = int(std::lround(cell.x + 0.85 * cell.w));
  const int y0 = int(std::lround(cell.y + 0.15 * cell.h));
  const int y1 = int(std::lround(cell.y + 0.85 * cell.h));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) sink.set(x, y, value_);
  }
}

GrayImage render_lettering(const GrayImage& img, const LetteringPlan& plan,
                           RasterizerInterface& rasterizer) {
  GrayImage out = img;
  MaskClipSink sink(out, plan.region);
  for (const PlannedLine& line : plan.lines) {
    for (std::size_t i = 0; i < line.glyphs.size(); ++i) {
      rasterizer.draw_glyph(sink, line.glyphs[i], line.cells[i]);
    }
  }
  return out;
}

}  // namespace manga
