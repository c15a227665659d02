#include "manga/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "manga/bubble.hpp"
#include "manga/errors.hpp"
#include "manga/layout.hpp"

using namespace manga;

namespace {

long mask_area(const BinaryMask& m) {
  long n = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) n += m.at(x, y);
  return n;
}

bool box_contains(const BoundingBox& outer, const BoundingBox& inner) {
  return inner.x >= outer.x && inner.y >= outer.y && inner.right() <= outer.right() &&
         inner.bottom() <= outer.bottom();
}

void rect(GrayImage& img, int x0, int y0, int w, int h, std::uint8_t v) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x)
      if (x >= 0 && x < img.width && y >= 0 && y < img.height) img.at(x, y) = v;
}

void ellipse(GrayImage& img, double cx, double cy, double rx, double ry, std::uint8_t v) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x - cx) / rx, dy = (y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) img.at(x, y) = v;
    }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("generated layout pages carry a consistent ground truth") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Page page = generate_layout_page(1000, 1400, rng);
    REQUIRE(page.frames.size() >= 2);
    REQUIRE(!page.texts.empty());

    // frame orders form a permutation of 0..n-1
    std::set<int> frame_orders;
    for (const FrameBox& f : page.frames) {
      REQUIRE(f.order.has_value());
      frame_orders.insert(*f.order);
    }
    CHECK(frame_orders.size() == page.frames.size());
    CHECK(*frame_orders.begin() == 0);
    CHECK(*frame_orders.rbegin() == int(page.frames.size()) - 1);

    // text orders form a permutation, scenes point at containing frames
    std::set<int> text_orders;
    for (const TextUnit& t : page.texts) {
      REQUIRE(t.order.has_value());
      REQUIRE(t.scene.has_value());
      text_orders.insert(*t.order);
      REQUIRE(*t.scene >= 0);
      REQUIRE(*t.scene < int(page.frames.size()));
      CHECK(box_contains(page.frames[std::size_t(*t.scene)].box, t.box));
    }
    CHECK(text_orders.size() == page.texts.size());

    // texts of an earlier frame come before texts of a later frame
    for (const TextUnit& a : page.texts) {
      for (const TextUnit& b : page.texts) {
        const int fa = *page.frames[std::size_t(*a.scene)].order;
        const int fb = *page.frames[std::size_t(*b.scene)].order;
        if (fa < fb) CHECK(*a.order < *b.order);
      }
    }
  }
}

TEST_CASE("layout annotation recovers generated reading order exactly") {
  Rng rng(7);
  std::vector<Page> truth, recovered;
  for (int i = 0; i < 120; ++i) {
    Page t = generate_layout_page(1000, 1400, rng);
    recovered.push_back(annotate_layout(strip_layout_annotations(t)));
    truth.push_back(std::move(t));
  }
  CHECK(evaluate_reading_order(recovered, truth) == doctest::Approx(1.0));
}

TEST_CASE("strip_layout_annotations clears orders and scenes but keeps boxes") {
  Rng rng(5);
  const Page full = generate_layout_page(800, 1100, rng);
  const Page bare = strip_layout_annotations(full);
  REQUIRE(bare.frames.size() == full.frames.size());
  REQUIRE(bare.texts.size() == full.texts.size());
  for (const FrameBox& f : bare.frames) CHECK(!f.order.has_value());
  for (std::size_t i = 0; i < bare.texts.size(); ++i) {
    CHECK(!bare.texts[i].order.has_value());
    CHECK(!bare.texts[i].scene.has_value());
    CHECK(bare.texts[i].box.x == full.texts[i].box.x);
    CHECK(bare.texts[i].box.w == full.texts[i].box.w);
  }
}

TEST_CASE("bubble cases: estimated masks track the drawn interiors") {
  double sum = 0.0;
  const int trials = 40;
  for (int i = 0; i < trials; ++i) {
    Rng rng = Rng::derive(42, std::uint64_t(i));
    const BubbleCase bc = generate_bubble_case(rng);
    REQUIRE(mask_area(bc.truth_mask) > 0);

    // the truth mask lies inside the reported bubble box
    for (int y = 0; y < bc.truth_mask.height; ++y) {
      for (int x = 0; x < bc.truth_mask.width; ++x) {
        if (!bc.truth_mask.at(x, y)) continue;
        REQUIRE(x >= int(bc.box.x));
        REQUIRE(x < int(bc.box.right()) + 1);
        REQUIRE(y >= int(bc.box.y));
        REQUIRE(y < int(bc.box.bottom()) + 1);
      }
    }

    const auto estimated = estimate_bubble_mask(bc.image, bc.box);
    REQUIRE(estimated.has_value());
    const double iou = mask_iou(*estimated, bc.truth_mask);
    CHECK(iou > 0.9);
    sum += iou;
  }
  CHECK(sum / trials >= 0.95);
}

TEST_CASE("ruby cases: narrow guide columns are dropped, wide ones kept") {
  for (int i = 0; i < 30; ++i) {
    Rng rng = Rng::derive(3, std::uint64_t(i));
    const double ratio = (i % 2 == 0) ? 0.20 + 0.15 * rng.uniform() : 0.50 + 0.30 * rng.uniform();
    const RubyCase rc = generate_ruby_case(ratio, rng);
    CHECK(rc.expected_lines == (ratio < 0.5 ? 1 : 2));
    const auto lines = detect_text_lines_rule(rc.image, TextOrientation::Vertical);
    CHECK(int(lines.size()) == rc.expected_lines);
  }
}

TEST_CASE("split cases: two paragraphs separated by the cheapest straight cut") {
  for (int i = 0; i < 25; ++i) {
    Rng rng = Rng::derive(17, std::uint64_t(i));
    const SplitCase sc = generate_split_case(rng);
    REQUIRE(sc.lines.size() >= 4);

    const BubbleSplit split = split_connected_bubble(sc.mask, sc.lines);
    REQUIRE(split.masks.size() == 2);
    REQUIRE(split.cuts.size() == 1);
    CHECK(!split.no_separating_cut);
    CHECK(!split.used_x_fallback);
    REQUIRE(split.cuts[0].axis == CutInfo::Axis::Horizontal);

    // the two paragraph masks are disjoint
    long overlap = 0;
    for (int y = 0; y < sc.mask.height; ++y)
      for (int x = 0; x < sc.mask.width; ++x)
        overlap += split.masks[0].at(x, y) && split.masks[1].at(x, y);
    CHECK(overlap == 0);

    // cheapest-row oracle over the band between the two line groups
    double bottom_a = 0, top_b = 1e9;
    for (const BoundingBox& l : sc.lines) {
      if (l.y < 45) bottom_a = std::max(bottom_a, l.bottom());
      else top_b = std::min(top_b, l.y);
    }
    REQUIRE(bottom_a < top_b);
    int cheapest = 1 << 30;
    for (int y = int(bottom_a) + 1; y < int(top_b); ++y) {
      int count = 0;
      for (int x = 0; x < sc.mask.width; ++x) count += sc.mask.at(x, y);
      cheapest = std::min(cheapest, count);
    }
    CHECK(split.cuts[0].length_in_mask == cheapest);
  }
}

TEST_CASE("generated volumes have aligned images, annotations, and truth") {
  FixtureParams params;
  params.pages = 5;
  params.covers = 2;
  params.seed = 21;
  const FixtureVolume vol = generate_volume(params);

  REQUIRE(vol.src.images.size() == 5);
  REQUIRE(vol.src.pages.size() == 5);
  REQUIRE(vol.dst.images.size() == 7);
  REQUIRE(vol.dst.pages.size() == 7);
  CHECK(vol.src.volume_id == "fixture-src");
  CHECK(vol.dst.volume_id == "fixture-dst");

  // covers sit at the front of the dst volume and are reported unmatched
  CHECK(vol.dst.pages[0].id == "cover_000");
  CHECK(vol.dst.pages[1].id == "cover_001");
  CHECK(vol.dst.pages[0].texts.empty());
  REQUIRE(vol.pairs.pairs.size() == 5);
  REQUIRE(vol.pairs.unmatched_dst == std::vector<int>{0, 1});
  CHECK(vol.pairs.unmatched_src.empty());
  for (int i = 0; i < 5; ++i) {
    CHECK(vol.pairs.pairs[std::size_t(i)].src_index == i);
    CHECK(vol.pairs.pairs[std::size_t(i)].dst_index == i + 2);
    CHECK(vol.pairs.pairs[std::size_t(i)].src_width == params.width);
    CHECK(vol.pairs.pairs[std::size_t(i)].src_height == params.height);
  }

  std::size_t text_total = 0;
  for (int i = 0; i < 5; ++i) {
    const Page& sp = vol.src.pages[std::size_t(i)];
    const Page& dp = vol.dst.pages[std::size_t(i + 2)];
    CHECK(sp.id == dp.id);
    REQUIRE(!sp.frames.empty());
    REQUIRE(sp.texts.size() == dp.texts.size());
    REQUIRE(sp.texts.size() == sp.frames.size());  // one balloon per frame
    text_total += sp.texts.size();
    for (std::size_t t = 0; t < sp.texts.size(); ++t) {
      const TextUnit& st = sp.texts[t];
      REQUIRE(st.order.has_value());
      REQUIRE(st.scene.has_value());
      REQUIRE(st.mask.has_value());
      CHECK(mask_area(*st.mask) > 0);
      CHECK(!st.content.empty());
      CHECK(!dp.texts[t].content.empty());
      CHECK(dp.texts[t].order == st.order);
      // the dst box is the src box carried through the page homography
      const BoundingBox mapped =
          apply_homography(vol.pairs.pairs[std::size_t(i)].h.inverse(), st.box);
      CHECK(dp.texts[t].box.x == doctest::Approx(mapped.x));
      CHECK(dp.texts[t].box.w == doctest::Approx(mapped.w));
    }
  }
  REQUIRE(vol.truth.size() == text_total);

  // truth records arrive sorted by page then reading order, with canonical tags
  for (std::size_t i = 1; i < vol.truth.size(); ++i) {
    const ParallelRecord& a = vol.truth[i - 1];
    const ParallelRecord& b = vol.truth[i];
    CHECK((a.page_id < b.page_id || (a.page_id == b.page_id && a.order < b.order)));
  }
  for (const ParallelRecord& r : vol.truth) {
    CHECK(std::is_sorted(r.tags.begin(), r.tags.end()));
    CHECK(std::adjacent_find(r.tags.begin(), r.tags.end()) == r.tags.end());
    CHECK(!r.src_text.empty());
    CHECK(!r.dst_text.empty());
  }
}

TEST_CASE("volume generation is deterministic for identical parameters") {
  FixtureParams params;
  params.pages = 3;
  params.covers = 1;
  params.seed = 99;
  const FixtureVolume a = generate_volume(params);
  const FixtureVolume b = generate_volume(params);
  REQUIRE(a.src.images.size() == b.src.images.size());
  for (std::size_t i = 0; i < a.src.images.size(); ++i) {
    CHECK(a.src.images[i].pixels == b.src.images[i].pixels);
  }
  for (std::size_t i = 0; i < a.dst.images.size(); ++i) {
    CHECK(a.dst.images[i].pixels == b.dst.images[i].pixels);
  }
  CHECK(corpus_to_jsonl(a.truth) == corpus_to_jsonl(b.truth));
  CHECK(pairing_to_json(a.pairs) == pairing_to_json(b.pairs));

  FixtureParams other = params;
  other.seed = 100;
  const FixtureVolume c = generate_volume(other);
  CHECK(a.src.images[0].pixels != c.src.images[0].pixels);
}

TEST_CASE("jittered detection and recognition still recover the full corpus") {
  FixtureParams params;
  params.pages = 6;
  params.covers = 1;
  params.seed = 7;
  const FixtureVolume vol = generate_volume(params);

  FixtureDetector detector(3.0, 7);
  FixtureOcr ocr;
  FixtureTagger tagger;
  EngineSet engines;
  engines.detector = &detector;
  engines.src_ocr = &ocr;
  engines.dst_ocr = &ocr;
  engines.tagger = &tagger;

  const ExtractionResult result = extract_corpus(vol.pairs, engines, vol.src, vol.dst);
  CHECK(result.warnings.empty());
  REQUIRE(result.records.size() == vol.truth.size());

  double prev_recall = 2.0, prev_precision = 2.0;
  for (const double tau : {0.7, 0.8, 0.9}) {
    const ExtractionScore score = evaluate_extraction(result.records, vol.truth, tau);
    CHECK(score.recall == doctest::Approx(1.0));
    CHECK(score.precision == doctest::Approx(1.0));
    CHECK(score.recall <= prev_recall + 1e-12);
    CHECK(score.precision <= prev_precision + 1e-12);
    prev_recall = score.recall;
    prev_precision = score.precision;
  }

  // scene tags survive into the records and match the planned frames
  for (const ParallelRecord& r : result.records) {
    bool found = false;
    for (const ParallelRecord& t : vol.truth) {
      if (t.page_id == r.page_id && t.order == r.order) {
        CHECK(t.tags == r.tags);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("page matching pairs every content page and leaves covers alone") {
  FixtureParams params;
  params.pages = 8;
  params.covers = 2;
  params.seed = 11;
  params.perspective = false;  // the dst volume is the src volume re-lettered
  const FixtureVolume vol = generate_volume(params);

  const PairingReport report = pair_pages(vol.src.images, vol.dst.images, {}, 5);
  REQUIRE(report.pairs.size() == 8);
  std::set<int> used_dst;
  for (const PagePair& p : report.pairs) {
    CHECK(p.dst_index == p.src_index + params.covers);
    CHECK(p.inliers > 50);
    used_dst.insert(p.dst_index);
  }
  CHECK(used_dst.size() == report.pairs.size());
  REQUIRE(report.unmatched_dst.size() == 2);
  CHECK(!used_dst.count(0));
  CHECK(!used_dst.count(1));
}

TEST_CASE("page matching finds nothing across unrelated volumes") {
  FixtureParams content;
  content.pages = 3;
  content.covers = 0;
  content.seed = 2;
  FixtureParams unrelated;
  unrelated.pages = 0;
  unrelated.covers = 4;
  unrelated.seed = 777;
  const FixtureVolume a = generate_volume(content);
  const FixtureVolume b = generate_volume(unrelated);
  const PairingReport report = pair_pages(a.src.images, b.dst.images, {}, 5);
  CHECK(report.pairs.empty());
  CHECK(report.unmatched_src.size() == 3);
  CHECK(report.unmatched_dst.size() == 4);
}

TEST_CASE("translated text lands inside transferred region masks") {
  // One bubble; the source column fills the upper part of the text region and
  // the translated rows the lower part, so the translation must fall entirely
  // in the blank area the source-side segmentation masks out.
  GrayImage src = GrayImage::filled(300, 400, 255);
  ellipse(src, 150, 180, 80, 120, 0);
  ellipse(src, 150, 180, 76, 116, 255);
  for (int r = 0; r < 4; ++r) rect(src, 128, 90 + r * 17, 12, 12, 0);

  GrayImage base = GrayImage::filled(300, 400, 255);
  ellipse(base, 150, 180, 80, 120, 0);
  ellipse(base, 150, 180, 76, 116, 255);
  std::vector<BoundingBox> dst_glyphs;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r) {
      rect(base, 122 + c * 14, 195 + r * 14, 10, 10, 0);
      dst_glyphs.push_back({122.0 + c * 14, 195.0 + r * 14, 10.0, 10.0});
    }

  // dst page = base shifted left/up by (4,3); its homography maps dst → src
  GrayImage dst = GrayImage::filled(300, 400, 255);
  for (int y = 0; y < 400; ++y)
    for (int x = 0; x < 300; ++x) {
      const int sx = x + 4, sy = y + 3;
      dst.at(x, y) = (sx < 300 && sy < 400) ? base.at(sx, sy) : 255;
    }
  PagePair pair;
  pair.src_width = 300;
  pair.src_height = 400;
  pair.h = Homography{{1, 0, 4, 0, 1, 3, 0, 0, 1}};

  const auto units = segment_page_regions(src, {{120.0, 84.0, 48.0, 140.0}});
  REQUIRE(units.size() == 1);
  REQUIRE(units[0].mask.has_value());
  const auto transferred = transfer_regions(pair, {*units[0].mask});
  REQUIRE(transferred.size() == 1);

  const GrayImage warped = warp_page(pair, dst);
  long inside = 0, total = 0;
  for (const BoundingBox& g : dst_glyphs)
    for (int y = int(g.y); y < int(g.bottom()); ++y)
      for (int x = int(g.x); x < int(g.right()); ++x) {
        if (warped.at(x, y) >= 128) continue;  // sampling blur at glyph rims
        ++total;
        inside += transferred[0].at(x, y);
      }
  REQUIRE(total > 0);
  CHECK(double(inside) / double(total) >= 0.99);
}

TEST_CASE("volumes round-trip through disk and write byte-identical trees") {
  namespace fs = std::filesystem;
  FixtureParams params;
  params.pages = 3;
  params.covers = 1;
  params.seed = 13;
  const FixtureVolume vol = generate_volume(params);

  const fs::path dir_a = fs::temp_directory_path() / "manga_fixture_vol_a";
  const fs::path dir_b = fs::temp_directory_path() / "manga_fixture_vol_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  write_volume(vol, dir_a.string());
  write_volume(vol, dir_b.string());

  // identical trees: same relative files, same bytes
  std::vector<std::string> rel_a;
  for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
    if (entry.is_regular_file()) rel_a.push_back(fs::relative(entry.path(), dir_a).string());
  }
  std::sort(rel_a.begin(), rel_a.end());
  REQUIRE(!rel_a.empty());
  for (const std::string& rel : rel_a) {
    CHECK(slurp(dir_a / rel) == slurp(dir_b / rel));
  }

  const FixtureVolume loaded = load_volume(dir_a.string());
  REQUIRE(loaded.src.images.size() == vol.src.images.size());
  REQUIRE(loaded.dst.images.size() == vol.dst.images.size());
  CHECK(loaded.src.volume_id == vol.src.volume_id);
  for (std::size_t i = 0; i < vol.src.images.size(); ++i) {
    CHECK(loaded.src.images[i].pixels == vol.src.images[i].pixels);
  }
  REQUIRE(loaded.src.pages.size() == vol.src.pages.size());
  for (std::size_t i = 0; i < vol.src.pages.size(); ++i) {
    CHECK(loaded.src.pages[i].id == vol.src.pages[i].id);
    CHECK(loaded.src.pages[i].texts.size() == vol.src.pages[i].texts.size());
  }
  CHECK(corpus_to_jsonl(loaded.truth) == corpus_to_jsonl(vol.truth));
  CHECK(pairing_to_json(loaded.pairs) == pairing_to_json(vol.pairs));
  CHECK(loaded.dict_tsv == vol.dict_tsv);

  CHECK_THROWS_AS(load_volume((fs::temp_directory_path() / "manga_no_such_vol").string()),
                  IoError);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("pairing reports round-trip through JSON") {
  PairingReport report;
  PagePair p;
  p.src_index = 2;
  p.dst_index = 5;
  p.src_width = 620;
  p.src_height = 880;
  p.h = Homography{{1.25, 0.01, -3.5, 0.02, 0.98, 4.25, 1e-5, -2e-5, 1.0}};
  p.inliers = 87;
  report.pairs.push_back(p);
  report.unmatched_src = {0};
  report.unmatched_dst = {1, 3};
  report.warnings = {"page 0: too few keypoints"};

  const PairingReport back = pairing_from_json(pairing_to_json(report));
  REQUIRE(back.pairs.size() == 1);
  CHECK(back.pairs[0].src_index == 2);
  CHECK(back.pairs[0].dst_index == 5);
  CHECK(back.pairs[0].src_width == 620);
  CHECK(back.pairs[0].src_height == 880);
  CHECK(back.pairs[0].inliers == 87);
  for (std::size_t k = 0; k < 9; ++k) {
    CHECK(back.pairs[0].h.m[k] == doctest::Approx(p.h.m[k]).epsilon(1e-12));
  }
  CHECK(back.unmatched_src == report.unmatched_src);
  CHECK(back.unmatched_dst == report.unmatched_dst);
  CHECK(back.warnings == report.warnings);

  CHECK_THROWS_AS(pairing_from_json("not json"), ParseError);
  CHECK_THROWS_AS(pairing_from_json(R"({"pairs":[{"src":0,"dst":1,"src_width":10,)"
                                    R"("src_height":10,"h":[1,0,0],"inliers":60}],)"
                                    R"("unmatched_src":[],"unmatched_dst":[],"warnings":[]})"),
                  ParseError);
}

TEST_CASE("volume generation rejects unusable parameters") {
  FixtureParams bad;
  bad.pages = -1;
  CHECK_THROWS_AS(generate_volume(bad), ConfigError);
  FixtureParams tiny;
  tiny.width = 100;
  CHECK_THROWS_AS(generate_volume(tiny), ConfigError);
}
