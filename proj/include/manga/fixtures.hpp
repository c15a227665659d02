#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manga/align.hpp"
#include "manga/corpus.hpp"
#include "manga/image.hpp"
#include "manga/page.hpp"
#include "manga/rng.hpp"

namespace manga {

// Synthetic test-data generators. Every generator records the ground truth it
// constructs (reading order, bubble masks, parallel text, page homographies),
// which makes generated data usable as an oracle: a pipeline answer is
// correct iff it reproduces what the generator wrote down.

struct FixtureParams {
  int pages = 20;
  int width = 620;
  int height = 880;
  int covers = 2;           // front-matter pages present only in the dst volume
  bool perspective = true;  // warp dst pages like a skewed scan
  std::uint64_t seed = 0;
};

// Layout-only page: nested row/column frames separated by gutters, plus one
// or two text boxes per frame. Frame and text array indices are shuffled; the
// generative reading order is recorded in the `order` fields and each text's
// `scene` names its frame's index. No pixels are rendered.
Page generate_layout_page(int width, int height, Rng& rng);

// Returns a copy with everything a layout pass must infer cleared: frame
// orders, text orders, and text scenes.
Page strip_layout_annotations(Page page);

// One rendered speech bubble on a small canvas with distractor art outside.
// `box` is the bubble's bounding box (a detector-style query) and
// `truth_mask` holds the interior blank pixels exactly as drawn.
struct BubbleCase {
  GrayImage image;
  BoundingBox box;
  BinaryMask truth_mask;
};
BubbleCase generate_bubble_case(Rng& rng);

// A rendered crop with one main glyph column and one side column `ratio`
// times its width. Columns narrower than half the widest are phonetic guides
// (ruby) and must be dropped by line detection, so `expected_lines` is 1 for
// ratios safely under 0.5 and 2 at or above it.
struct RubyCase {
  GrayImage image;
  double ratio = 0.0;
  int expected_lines = 0;
};
RubyCase generate_ruby_case(double ratio, Rng& rng);

// A connected two-paragraph bubble mask (two lobes joined by a waist) with
// its text-line boxes. The paragraphs' line tops form two clusters separated
// by well over one line height, so a splitter must cut between them.
struct SplitCase {
  BinaryMask mask;
  std::vector<BoundingBox> lines;
};
SplitCase generate_split_case(Rng& rng);

// A complete synthetic bilingual volume and every ground truth about it: both
// image stacks, fully annotated pages (text masks included), the true page
// pairing (covers stay unpaired), the parallel corpus sorted by (page,
// order), and the word table mapping each source word to its translation.
struct FixtureVolume {
  VolumeData src;
  VolumeData dst;
  PairingReport pairs;
  std::vector<ParallelRecord> truth;
  std::string dict_tsv;
};
FixtureVolume generate_volume(const FixtureParams& params);

// On-disk form: <dir>/manifest.json, src/page_*.{png,json},
// dst/page_*.{png,json}, pairs.json, truth.jsonl, dict.tsv. Writing is
// deterministic: equal params yield byte-identical trees.
void write_volume(const FixtureVolume& vol, const std::string& dir);
FixtureVolume load_volume(const std::string& dir);

}  // namespace manga
