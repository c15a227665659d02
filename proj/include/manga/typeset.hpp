#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"

namespace manga {

inline constexpr int kMinFontSize = 6;

// Scale-free glyph geometry: advances and line height are in em units and are
// multiplied by the font size in pixels.
class GlyphMetrics {
 public:
  virtual ~GlyphMetrics() = default;
  virtual double advance(char32_t cp) const = 0;  // > 0
  virtual double line_height() const = 0;
};

// Half-width single-byte characters, full-width everything else, 1.2 em line
// slots — the usual fixed-pitch approximation.
class DefaultGlyphMetrics final : public GlyphMetrics {
 public:
  double advance(char32_t cp) const override { return cp < 0x80 ? 0.5 : 1.0; }
  double line_height() const override { return 1.2; }
};

const GlyphMetrics& default_glyph_metrics();

struct PlannedLine {
  std::string text;
  Point2 baseline;                 // left end of the baseline
  std::vector<char32_t> glyphs;    // decoded characters of `text`
  std::vector<BoundingBox> cells;  // ink box per glyph (whitespace included)
};

struct LetteringPlan {
  int font_size = kMinFontSize;
  std::vector<PlannedLine> lines;
  BoundingBox rect;                    // layout rectangle inside the region
  const BinaryMask* region = nullptr;  // clip mask; the caller keeps it alive
  bool overflow = false;               // even the minimum size does not fit
};

// Source-text removal. The bundled cleaner flat-fills each line box with the
// median intensity of the region outside all line boxes; a real inpainter can
// be substituted through the same interface.
class CleanerInterface {
 public:
  virtual ~CleanerInterface() = default;
  virtual GrayImage clean(const GrayImage& img, const std::vector<BoundingBox>& line_boxes,
                          const BinaryMask& mask) = 0;
};

class MedianFillCleaner final : public CleanerInterface {
 public:
  GrayImage clean(const GrayImage& img, const std::vector<BoundingBox>& line_boxes,
                  const BinaryMask& mask) override;
};

// Median-fill cleaning: pixels of each line box inside the mask take the
// median intensity of the mask minus all line boxes. No boxes, no change;
// pixels outside the mask are never touched.
GrayImage clean_text(const GrayImage& img, const std::vector<BoundingBox>& line_boxes,
                     const BinaryMask& mask);

// Maximal-area axis-aligned rectangle fully inside the mask (histogram
// sweep). Throws EmptyMaskError on an all-zero mask.
BoundingBox inscribed_rect(const BinaryMask& mask);

// Chooses the largest integer font size in [kMinFontSize, rect height] whose
// greedy wrap (break at whitespace, fall back to per-character splits) fits
// the inscribed rectangle, then centers the lines in it. When even the
// minimum size does not fit, the plan is emitted at the minimum with
// `overflow` set instead of failing: the pipeline always letters something.
LetteringPlan plan_lettering(const std::string& text, const BinaryMask& mask,
                             const GlyphMetrics& metrics);
LetteringPlan plan_lettering(const std::string& text, const BinaryMask& mask);

// Clipped pixel access handed to rasterizers; writes outside the permitted
// region are silently dropped, which keeps the no-paint-outside-the-mask
// guarantee independent of rasterizer correctness.
class GlyphSink {
 public:
  virtual ~GlyphSink() = default;
  virtual void set(int x, int y, std::uint8_t value) = 0;
};

class RasterizerInterface {
 public:
  virtual ~RasterizerInterface() = default;
  virtual void draw_glyph(GlyphSink& sink, char32_t cp, const BoundingBox& cell) = 0;
};

// Font-free stand-in: fills each glyph cell inset by 15% per side with a
// constant value; whitespace draws nothing. Deterministic by construction.
class BoxGlyphRasterizer final : public RasterizerInterface {
 public:
  explicit BoxGlyphRasterizer(std::uint8_t value = 0) : value_(value) {}
  void draw_glyph(GlyphSink& sink, char32_t cp, const BoundingBox& cell) override;

 private:
  std::uint8_t value_;
};

// Draws every planned glyph through the rasterizer, clipped to plan.region
// (and the image bounds). Returns a modified copy.
GrayImage render_lettering(const GrayImage& img, const LetteringPlan& plan,
                           RasterizerInterface& rasterizer);

}  // namespace manga
