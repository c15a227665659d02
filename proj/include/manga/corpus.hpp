#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manga/align.hpp"
#include "manga/bubble.hpp"
#include "manga/layout.hpp"
#include "manga/page.hpp"

namespace manga {

// One aligned bilingual text region with its layout context.
struct ParallelRecord {
  std::string volume_id;
  std::string page_id;
  std::string src_text;
  std::string dst_text;
  int scene = 0;
  int order = 0;
  std::vector<std::string> tags;  // sorted, unique
  BoundingBox src_box;
};

// What an engine sees for one page: the pixels, plus annotations and the page
// index for fixture engines that replay ground truth. Real engines read only
// the image.
struct PageContext {
  const GrayImage& image;
  const Page* annotations = nullptr;
  int page_index = 0;
};

// Text recognition behind a name. Implementations must be deterministic: the
// same page and box always produce the same string.
class OcrEngine {
 public:
  virtual ~OcrEngine() = default;
  virtual std::string name() const = 0;
  virtual std::string recognize(const PageContext& page, const BoundingBox& box) = 0;
};

// Replays annotated strings: a query box reads the annotated text it overlaps
// with IoU >= 0.5 (largest overlap wins); anything else reads as empty.
// Decouples geometric pipeline quality from recognition quality.
class FixtureOcr final : public OcrEngine {
 public:
  std::string name() const override { return "fixture"; }
  std::string recognize(const PageContext& page, const BoundingBox& box) override;
};

// Speech-bubble text detection behind a name. Returned boxes lie within the
// page bounds.
class DetectorEngine {
 public:
  virtual ~DetectorEngine() = default;
  virtual std::string name() const = 0;
  virtual std::vector<BoundingBox> detect(const PageContext& page) = 0;
};

// Replays annotated text boxes, optionally jittered by a seeded uniform
// offset per edge (to stress mask estimation); boxes are clamped to the page.
// The jitter stream is derived per page index, so results do not depend on
// the order pages are visited.
class FixtureDetector final : public DetectorEngine {
 public:
  explicit FixtureDetector(double max_jitter = 0.0, std::uint64_t seed = 0)
      : max_jitter_(max_jitter), seed_(seed) {}
  std::string name() const override { return "fixture"; }
  std::vector<BoundingBox> detect(const PageContext& page) override;

 private:
  double max_jitter_;
  std::uint64_t seed_;
};

struct EngineSet {
  DetectorEngine* detector = nullptr;  // required
  OcrEngine* src_ocr = nullptr;        // required
  OcrEngine* dst_ocr = nullptr;        // required
  TaggerInterface* tagger = nullptr;   // optional: records carry no tags when null
};

// One language side of a bilingual volume. `pages` may be empty when real
// (non-fixture) engines run; fixture engines need it.
struct VolumeData {
  std::string volume_id;
  std::vector<GrayImage> images;
  std::vector<Page> pages;
};

struct ExtractionResult {
  std::vector<ParallelRecord> records;  // sorted by (page, order)
  std::vector<std::string> warnings;    // per-page failures; never fatal
};

// Runs the region pipeline over every verified page pair: detect bubbles,
// estimate and split masks, read both language sides (the dst box is the src
// region carried through the pair homography), order and scene-assign via the
// layout pass, and emit one record per region. A failing page is reported in
// `warnings` and skipped; the volume never aborts.
ExtractionResult extract_corpus(const PairingReport& pairing, const EngineSet& engines,
                                const VolumeData& src, const VolumeData& dst,
                                const SegmentParams& params = {});

// Edit distance over Unicode code points.
int levenshtein(const std::string& a, const std::string& b);

// 1 - levenshtein/max(len); two empty strings count as identical (1.0).
double ned_similarity(const std::string& a, const std::string& b);

struct ExtractionScore {
  double recall = 1.0;     // matched / truth (empty truth scores 1)
  double precision = 1.0;  // matched / extracted (empty extraction scores 1)
  int true_positives = 0;
};

// Greedy one-to-one matching in descending similarity: an extracted record
// matches an unmatched truth record on the same (volume, page) iff
// ned_similarity >= tau on BOTH the src and dst texts. tau must be in (0, 1].
ExtractionScore evaluate_extraction(const std::vector<ParallelRecord>& extracted,
                                    const std::vector<ParallelRecord>& truth, double tau);

// Fraction of pages whose predicted text order equals the ground truth
// exactly (texts aligned by index). Throws PageMismatch when the two lists
// differ in length; an empty list scores 1.
double evaluate_reading_order(const std::vector<Page>& predicted, const std::vector<Page>& truth);

// JSONL: one record per line, UTF-8, keys fixed and sorted
// ("box","dst","order","page","scene","src","tags","volume").
std::string record_to_json_line(const ParallelRecord& r);
std::string corpus_to_jsonl(const std::vector<ParallelRecord>& records);
std::vector<ParallelRecord> corpus_from_jsonl(const std::string& text);  // throws ParseError
void save_corpus_jsonl(const std::string& path, const std::vector<ParallelRecord>& records);
std::vector<ParallelRecord> load_corpus_jsonl(const std::string& path);

}  // namespace manga
