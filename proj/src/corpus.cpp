#include "manga/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "manga/errors.hpp"
#include "manga/rng.hpp"
#include "manga/unicode.hpp"

namespace manga {
namespace {

using json = nlohmann::json;  // plain json keeps object keys sorted

std::string page_label(const VolumeData& volume, int index) {
  if (std::size_t(index) < volume.pages.size() && !volume.pages[std::size_t(index)].id.empty()) {
    return volume.pages[std::size_t(index)].id;
  }
  return std::to_string(index);
}

}  // namespace

std::string FixtureOcr::recognize(const PageContext& page, const BoundingBox& box) {
  if (!page.annotations) throw EngineFailure("fixture OCR needs page annotations");
  const TextUnit* best = nullptr;
  double best_iou = 0.0;
  for (const TextUnit& t : page.annotations->texts) {
    const double overlap = iou(box, t.box);
    if (overlap > best_iou) {
      best_iou = overlap;
      best = &t;
    }
  }
  if (!best || best_iou < 0.5) return "";
  return best->content;
}

std::vector<BoundingBox> FixtureDetector::detect(const PageContext& page) {
  if (!page.annotations) throw EngineFailure("fixture detector needs page annotations");
  const double page_w = page.image.width;
  const double page_h = page.image.height;
  Rng rng = Rng::derive(seed_, std::uint64_t(page.page_index));
  std::vector<BoundingBox> out;
  out.reserve(page.annotations->texts.size());
  for (const TextUnit& t : page.annotations->texts) {
    BoundingBox b = t.box;
    if (max_jitter_ > 0.0) {
      b.x += rng.uniform(-max_jitter_, max_jitter_);
      b.y += rng.uniform(-max_jitter_, max_jitter_);
      b.w += rng.uniform(-max_jitter_, max_jitter_);
      b.h += rng.uniform(-max_jitter_, max_jitter_);
    }
    b.x = std::clamp(b.x, 0.0, std::max(0.0, page_w - 1.0));
    b.y = std::clamp(b.y, 0.0, std::max(0.0, page_h - 1.0));
    b.w = std::clamp(b.w, 1.0, page_w - b.x);
    b.h = std::clamp(b.h, 1.0, page_h - b.y);
    out.push_back(b);
  }
  return out;
}

ExtractionResult extract_corpus(const PairingReport& pairing, const EngineSet& engines,
                                const VolumeData& src, const VolumeData& dst,
                                const SegmentParams& params) {
  if (!engines.detector || !engines.src_ocr || !engines.dst_ocr) {
    throw ConfigError("extract_corpus: detector and both OCR engines are required");
  }
  ExtractionResult result;
  if (pairing.pairs.empty()) {
    result.warnings.push_back("no verified page pairs; corpus is empty");
    return result;
  }

  for (const PagePair& pair : pairing.pairs) {
    if (std::size_t(pair.src_index) >= src.images.size() ||
        std::size_t(pair.dst_index) >= dst.images.size()) {
      result.warnings.push_back("pair (" + std::to_string(pair.src_index) + ", " +
                                std::to_string(pair.dst_index) + ") points outside the volumes");
      continue;
    }
    const std::string page_id = page_label(src, pair.src_index);
    try {
      const GrayImage& src_img = src.images[std::size_t(pair.src_index)];
      const GrayImage& dst_img = dst.images[std::size_t(pair.dst_index)];
      const Page* src_annot = std::size_t(pair.src_index) < src.pages.size()
                                  ? &src.pages[std::size_t(pair.src_index)]
                                  : nullptr;
      const Page* dst_annot = std::size_t(pair.dst_index) < dst.pages.size()
                                  ? &dst.pages[std::size_t(pair.dst_index)]
                                  : nullptr;
      const PageContext src_ctx{src_img, src_annot, pair.src_index};
      const PageContext dst_ctx{dst_img, dst_annot, pair.dst_index};

      const std::vector<BoundingBox> boxes = engines.detector->detect(src_ctx);
      std::vector<TextUnit> regions = segment_page_regions(src_img, boxes, params);

      // Read the source side; regions that recognize as empty are dropped
      // (records guarantee a nonempty src text).
      std::vector<TextUnit> kept;
      for (TextUnit& region : regions) {
        region.content = engines.src_ocr->recognize(src_ctx, region.box);
        if (!region.content.empty()) kept.push_back(std::move(region));
      }

      Page work;
      work.id = page_id;
      work.width = src_img.width;
      work.height = src_img.height;
      if (src_annot) work.frames = src_annot->frames;
      work.texts = std::move(kept);
      const Page annotated = annotate_layout(std::move(work));

      std::vector<std::vector<std::string>> tags_per_scene(annotated.frames.size());
      if (engines.tagger) {
        for (std::size_t f = 0; f < annotated.frames.size(); ++f) {
          tags_per_scene[f] =
              predict_scene_tags(*engines.tagger, src_img, annotated.frames[f], int(f)).tags;
        }
      }

      const Homography src_to_dst = pair.h.inverse();
      for (const TextUnit& text : annotated.texts) {
        ParallelRecord record;
        record.volume_id = src.volume_id;
        record.page_id = page_id;
        record.src_text = text.content;
        record.src_box = text.box;
        record.order = text.order.value_or(0);
        record.scene = text.scene.value_or(0);
        if (text.scene && std::size_t(*text.scene) < tags_per_scene.size()) {
          record.tags = tags_per_scene[std::size_t(*text.scene)];
        }
        const BoundingBox dst_box = apply_homography(src_to_dst, text.box);
        record.dst_text = engines.dst_ocr->recognize(dst_ctx, dst_box);
        result.records.push_back(std::move(record));
      }
    } catch (const Error& e) {
      result.warnings.push_back("page " + page_id + ": " + e.what());
    }
  }

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const ParallelRecord& a, const ParallelRecord& b) {
                     if (a.page_id != b.page_id) return a.page_id < b.page_id;
                     return a.order < b.order;
                   });
  return result;
}

int levenshtein(const std::string& a, const std::string& b) {
  const std::vector<char32_t> u = code_points(a);
  const std::vector<char32_t> v = code_points(b);
  if (u.empty()) return int(v.size());
  if (v.empty()) return int(u.size());
  std::vector<int> prev(v.size() + 1);
  std::vector<int> cur(v.size() + 1);
  for (std::size_t j = 0; j <= v.size(); ++j) prev[j] = int(j);
  for (std::size_t i = 1; i <= u.size(); ++i) {
    cur[0] = int(i);
    for (std::size_t j = 1; j <= v.size(); ++j) {
      const int subst = prev[j - 1] + (u[i - 1] == v[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[v.size()];
}

double ned_similarity(const std::string& a, const std::string& b) {
  const std::size_t la = code_points(a).size();
  const std::size_t lb = code_points(b).size();
  const std::size_t longest = std::max(la, lb);
  if (longest == 0) return 1.0;
  return 1.0 - double(levenshtein(a, b)) / double(longest);
}

ExtractionScore evaluate_extraction(const std::vector<ParallelRecord>& extracted,
                                    const std::vector<ParallelRecord>& truth, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("evaluate_extraction: tau must be in (0, 1]");

  struct Candidate {
    double similarity;
    std::size_t extracted_index;
    std::size_t truth_index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t e = 0; e < extracted.size(); ++e) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (extracted[e].volume_id != truth[t].volume_id) continue;
      if (extracted[e].page_id != truth[t].page_id) continue;
      const double src_sim = ned_similarity(extracted[e].src_text, truth[t].src_text);
      if (src_sim < tau) continue;
      const double dst_sim = ned_similarity(extracted[e].dst_text, truth[t].dst_text);
      if (dst_sim < tau) continue;
      candidates.push_back({std::min(src_sim, dst_sim), e, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.extracted_index != b.extracted_index) return a.extracted_index < b.extracted_index;
    return a.truth_index < b.truth_index;
  });

  std::vector<std::uint8_t> e_used(extracted.size(), 0);
  std::vector<std::uint8_t> t_used(truth.size(), 0);
  int matched = 0;
  for (const Candidate& c : candidates) {
    if (e_used[c.extracted_index] || t_used[c.truth_index]) continue;
    e_used[c.extracted_index] = 1;
    t_used[c.truth_index] = 1;
    ++matched;
  }

  ExtractionScore score;
  score.true_positives = matched;
  score.recall = truth.empty() ? 1.0 : double(matched) / double(truth.size());
  score.precision = extracted.empty() ? 1.0 : double(matched) / double(extracted.size());
  return score;
}

double evaluate_reading_order(const std::vector<Page>& predicted, const std::vector<Page>& truth) {
  if (predicted.size() != truth.size()) {
    throw PageMismatch("evaluate_reading_order: page counts differ");
  }
  if (predicted.empty()) return 1.0;
  int correct = 0;
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    const std::vector<TextUnit>& a = predicted[p].texts;
    const std::vector<TextUnit>& b = truth[p].texts;
    if (a.size() != b.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].order || !b[i].order || *a[i].order != *b[i].order) {
        same = false;
        break;
      }
    }
    if (same) ++correct;
  }
  return double(correct) / double(predicted.size());
}

std::string record_to_json_line(const ParallelRecord& r) {
  json j;
  j["box"] = json::array({std::lround(r.src_box.x), std::lround(r.src_box.y),
                          std::lround(r.src_box.w), std::lround(r.src_box.h)});
  j["dst"] = r.dst_text;
  j["order"] = r.order;
  j["page"] = r.page_id;
  j["scene"] = r.scene;
  j["src"] = r.src_text;
  j["tags"] = r.tags;
  j["volume"] = r.volume_id;
  return j.dump();
}

std::string corpus_to_jsonl(const std::vector<ParallelRecord>& records) {
  std::string out;
  for (const ParallelRecord& r : records) {
    out += record_to_json_line(r);
    out += '\n';
  }
  return out;
}

std::vector<ParallelRecord> corpus_from_jsonl(const std::string& text) {
  std::vector<ParallelRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      ParallelRecord r;
      r.volume_id = j.at("volume").get<std::string>();
      r.page_id = j.at("page").get<std::string>();
      r.src_text = j.at("src").get<std::string>();
      r.dst_text = j.at("dst").get<std::string>();
      r.scene = j.at("scene").get<int>();
      r.order = j.at("order").get<int>();
      r.tags = j.at("tags").get<std::vector<std::string>>();
      const json& box = j.at("box");
      if (!box.is_array() || box.size() != 4) throw ParseError("box must have four numbers");
      r.src_box = BoundingBox{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                              box[3].get<double>()};
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_corpus_jsonl(const std::string& path, const std::vector<ParallelRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus: " + path);
  out << corpus_to_jsonl(records);
  if (!out) throw IoError("failed writing corpus: " + path);
}

std::vector<ParallelRecord> load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return corpus_from_jsonl(buffer.str());
}

}  // namespace manga
