#include "manga/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "manga/bubble.hpp"
#include "manga/context.hpp"
#include "manga/corpus.hpp"
#include "manga/errors.hpp"
#include "manga/fixtures.hpp"
#include "manga/layout.hpp"
#include "manga/typeset.hpp"

namespace manga {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a 64).
// ---------------------------------------------------------------------------

constexpr std::uint64_t kFnvBasis = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = kFnvBasis) {
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h = kFnvBasis) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string key_hex(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(key));
  return buf;
}

std::uint64_t hash_image(const GrayImage& img) {
  std::uint64_t h = fnv1a("img");
  h = fnv1a_bytes(&img.width, sizeof img.width, h);
  h = fnv1a_bytes(&img.height, sizeof img.height, h);
  return fnv1a_bytes(img.pixels.data(), img.pixels.size(), h);
}

// A stage output address: stage name, the stage's config digest, and the
// digests of everything the stage reads.
std::uint64_t stage_key(std::string_view stage, std::uint64_t config_hash,
                        std::initializer_list<std::uint64_t> input_hashes) {
  std::uint64_t h = fnv1a(stage);
  h = fnv1a(key_hex(config_hash), h);
  for (const std::uint64_t in : input_hashes) h = fnv1a(key_hex(in), h);
  return h;
}

// ---------------------------------------------------------------------------
// Cache blobs: a JSON metadata document plus an optional binary payload,
// stored as one file ("MPC1", little-endian meta length, meta, payload).
// ---------------------------------------------------------------------------

struct CacheBlob {
  json meta;
  std::string payload;
};

std::filesystem::path blob_path(const std::string& cache_dir, std::string_view stage,
                                std::uint64_t key) {
  return std::filesystem::path(cache_dir) / (std::string(stage) + "-" + key_hex(key) + ".mpc");
}

std::optional<CacheBlob> load_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "MPC1") return std::nullopt;
  std::uint64_t meta_len = 0;
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) return std::nullopt;
  for (int i = 7; i >= 0; --i) meta_len = (meta_len << 8) | len_bytes[i];
  if (meta_len > (1ull << 31)) return std::nullopt;
  std::string meta_text(meta_len, '\0');
  if (!in.read(meta_text.data(), std::streamsize(meta_len))) return std::nullopt;
  CacheBlob blob;
  blob.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  try {
    blob.meta = json::parse(meta_text);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return blob;
}

void store_blob(const std::filesystem::path& path, const CacheBlob& blob, int page_index) {
  const std::string meta_text = blob.meta.dump();
  const std::filesystem::path tmp =
      path.string() + ".tmp" + std::to_string(page_index);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;  // cache is best-effort; the run itself must not fail
    out.write("MPC1", 4);
    unsigned char len_bytes[8];
    std::uint64_t n = meta_text.size();
    for (int i = 0; i < 8; ++i) {
      len_bytes[i] = static_cast<unsigned char>(n & 0xff);
      n >>= 8;
    }
    out.write(reinterpret_cast<const char*>(len_bytes), 8);
    out.write(meta_text.data(), std::streamsize(meta_text.size()));
    out.write(blob.payload.data(), std::streamsize(blob.payload.size()));
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

// Runs one stage through the cache: on a hit the stored blob is returned, on
// a miss `compute` runs and its blob is stored. Either way downstream code
// consumes the blob, so warm and cold runs follow the same data path.
template <typename Fn>
CacheBlob run_stage(const std::string& cache_dir, std::string_view stage, std::uint64_t key,
                    int page_index, StageReport& report, Fn&& compute) {
  report.key = key_hex(key);
  const std::filesystem::path path = blob_path(cache_dir, stage, key);
  if (auto hit = load_blob(path)) {
    report.cached = true;
    report.ms = 0.0;
    return std::move(*hit);
  }
  const auto t0 = Clock::now();
  CacheBlob blob = compute();
  report.cached = false;
  report.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  store_blob(path, blob, page_index);
  return blob;
}

// ---------------------------------------------------------------------------
// Serialization helpers for stage blobs.
// ---------------------------------------------------------------------------

json box_to_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BoundingBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("box must have four numbers");
  return BoundingBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>()};
}

json mask_to_json(const BinaryMask& mask) {
  json runs = json::array();
  const std::size_t total = std::size_t(mask.width) * std::size_t(mask.height);
  std::size_t i = 0;
  while (i < total) {
    if (!mask.bits[i]) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < total && mask.bits[i]) ++i;
    runs.push_back(json::array({start, i - start}));
  }
  return json{{"w", mask.width}, {"h", mask.height}, {"runs", std::move(runs)}};
}

BinaryMask mask_from_json(const json& j) {
  BinaryMask mask = BinaryMask::zeros(j.at("w").get<int>(), j.at("h").get<int>());
  const std::size_t total = mask.bits.size();
  for (const auto& run : j.at("runs")) {
    const std::size_t start = run.at(0).get<std::size_t>();
    const std::size_t len = run.at(1).get<std::size_t>();
    if (start + len > total) throw ParseError("mask run out of range");
    for (std::size_t i = start; i < start + len; ++i) mask.bits[i] = 1;
  }
  return mask;
}

json unit_to_json(const TextUnit& u) {
  json j;
  j["box"] = box_to_json(u.box);
  j["content"] = u.content;
  json lines = json::array();
  for (const BoundingBox& l : u.lines) lines.push_back(box_to_json(l));
  j["lines"] = std::move(lines);
  j["order"] = u.order.value_or(0);
  j["scene"] = u.scene.value_or(0);
  if (u.mask) j["mask"] = mask_to_json(*u.mask);
  return j;
}

TextUnit unit_from_json(const json& j) {
  TextUnit u;
  u.box = box_from_json(j.at("box"));
  u.content = j.at("content").get<std::string>();
  for (const auto& l : j.at("lines")) u.lines.push_back(box_from_json(l));
  u.order = j.at("order").get<int>();
  u.scene = j.at("scene").get<int>();
  if (j.contains("mask")) u.mask = mask_from_json(j.at("mask"));
  return u;
}

std::string image_to_png_string(const GrayImage& img) {
  const std::vector<std::uint8_t> bytes = encode_png(img);
  return std::string(bytes.begin(), bytes.end());
}

GrayImage image_from_png_string(const std::string& s) {
  return decode_png(std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::vector<std::string> strings_from_json(const json& j) {
  std::vector<std::string> out;
  for (const auto& s : j) out.push_back(s.get<std::string>());
  return out;
}

// ---------------------------------------------------------------------------
// Engine construction.
// ---------------------------------------------------------------------------

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Engines {
  std::unique_ptr<FixtureDetector> detector;
  std::unique_ptr<FixtureOcr> ocr;
  std::unique_ptr<TaggerInterface> tagger;  // null when config names "none"
  std::unique_ptr<TranslatorInterface> translator;
  std::unique_ptr<CleanerInterface> cleaner;
  std::unique_ptr<RasterizerInterface> rasterizer;
  std::string dict_content;  // raw dict bytes; part of the translate config digest
};

Engines build_engines(const PipelineConfig& cfg) {
  Engines e;
  e.detector = std::make_unique<FixtureDetector>(cfg.detector_jitter, cfg.seed);
  e.ocr = std::make_unique<FixtureOcr>();
  if (cfg.tagger == "fixture") {
    e.tagger = std::make_unique<FixtureTagger>();
  } else if (cfg.tagger == "constant") {
    e.tagger = std::make_unique<ConstantTagger>(cfg.constant_tags);
  }
  if (cfg.translator == "dict") {
    const std::string path =
        cfg.dict_path.empty() ? cfg.volume_dir + "/dict.tsv" : cfg.dict_path;
    e.dict_content = read_file_or_throw(path);
    e.translator = std::make_unique<DictTranslator>(DictTranslator::from_file(path));
  } else {
    e.translator = std::make_unique<EchoTranslator>();
  }
  e.cleaner = std::make_unique<MedianFillCleaner>();
  e.rasterizer =
      std::make_unique<BoxGlyphRasterizer>(std::uint8_t(cfg.rasterizer_shade));
  return e;
}

// ---------------------------------------------------------------------------
// Per-page processing.
// ---------------------------------------------------------------------------

struct RunContext {
  const PipelineConfig* cfg = nullptr;
  const FixtureVolume* volume = nullptr;
  Engines* engines = nullptr;
  std::string cache_dir;
  // per-stage config digests, fixed for the whole run
  std::uint64_t layout_cfg = 0;
  std::uint64_t segment_cfg = 0;
  std::uint64_t prep_cfg = 0;
  std::uint64_t translate_cfg = 0;
  std::uint64_t clean_cfg = 0;
  std::uint64_t letter_cfg = 0;
};

struct PageOutcome {
  PageRunReport report;
  GrayImage image;
  bool have_image = false;
};

PageOutcome process_page(const RunContext& ctx, int index) {
  const PipelineConfig& cfg = *ctx.cfg;
  const GrayImage& img = ctx.volume->src.images[std::size_t(index)];
  const Page& annotations = ctx.volume->src.pages[std::size_t(index)];

  PageOutcome out;
  out.report.id = annotations.id.empty() ? std::to_string(index) : annotations.id;
  out.report.index = index;

  const std::uint64_t img_hash = hash_image(img);
  const std::uint64_t annot_hash = fnv1a(page_to_json_string(annotations));

  try {
    // ---- layout: detect regions, order frames, assign scenes ---------------
    const std::uint64_t layout_key =
        stage_key("layout", ctx.layout_cfg, {img_hash, annot_hash});
    CacheBlob layout_blob = run_stage(
        ctx.cache_dir, "layout", layout_key, index, out.report.stages["layout"], [&] {
          PageContext page_ctx{img, &annotations, index};
          const std::vector<BoundingBox> boxes = ctx.engines->detector->detect(page_ctx);
          Page work;
          work.id = annotations.id;
          work.width = annotations.width;
          work.height = annotations.height;
          work.frames = annotations.frames;
          for (FrameBox& f : work.frames) f.order.reset();
          for (const BoundingBox& b : boxes) work.texts.push_back(TextUnit{b, "", {}, {}, {}, {}});
          const LayoutResult layout = order_frames(work);
          work = apply_frame_order(std::move(work), layout);
          work = assign_scenes(std::move(work));
          work = order_texts(std::move(work));
          std::sort(work.texts.begin(), work.texts.end(),
                    [](const TextUnit& a, const TextUnit& b) { return a.order < b.order; });
          CacheBlob blob;
          blob.meta["irregular"] = layout.irregular;
          blob.meta["page_json"] = page_to_json_string(work);
          blob.meta["warnings"] = json::array();
          return blob;
        });
    const Page layout_page =
        page_from_json_string(layout_blob.meta.at("page_json").get<std::string>());
    out.report.irregular = layout_blob.meta.at("irregular").get<bool>();
    for (const std::string& w : strings_from_json(layout_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    const std::uint64_t layout_out_hash = fnv1a(layout_blob.meta.dump());

    // ---- segment: bubble masks + text lines, then recognition --------------
    const std::uint64_t segment_key =
        stage_key("segment", ctx.segment_cfg, {img_hash, layout_out_hash});
    CacheBlob segment_blob = run_stage(
        ctx.cache_dir, "segment", segment_key, index, out.report.stages["segment"], [&] {
          std::vector<BoundingBox> boxes;
          for (const TextUnit& t : layout_page.texts) boxes.push_back(t.box);
          std::vector<TextUnit> units = segment_page_regions(img, boxes);

          // re-derive order and scene for the split regions
          Page work;
          work.id = layout_page.id;
          work.width = layout_page.width;
          work.height = layout_page.height;
          work.frames = layout_page.frames;
          work.texts = std::move(units);
          work = assign_scenes(std::move(work));
          work = order_texts(std::move(work));
          std::sort(work.texts.begin(), work.texts.end(),
                    [](const TextUnit& a, const TextUnit& b) { return a.order < b.order; });

          json warnings = json::array();
          json unit_array = json::array();
          int kept = 0;
          PageContext page_ctx{img, &annotations, index};
          for (TextUnit& u : work.texts) {
            u.content = ctx.engines->ocr->recognize(page_ctx, u.box);
            if (u.content.empty()) {
              warnings.push_back("unreadable region near (" +
                                 std::to_string(int(u.box.x)) + ", " +
                                 std::to_string(int(u.box.y)) + ") dropped");
              continue;
            }
            u.order = kept++;
            unit_array.push_back(unit_to_json(u));
          }
          CacheBlob blob;
          blob.meta["units"] = std::move(unit_array);
          blob.meta["warnings"] = std::move(warnings);
          return blob;
        });
    std::vector<TextUnit> units;
    for (const auto& j : segment_blob.meta.at("units")) units.push_back(unit_from_json(j));
    for (const std::string& w : strings_from_json(segment_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    out.report.texts = int(units.size());
    const std::uint64_t segment_out_hash = fnv1a(segment_blob.meta.dump());

    // ---- prep: build the translation input for each region -----------------
    const std::uint64_t prep_key =
        stage_key("prep", ctx.prep_cfg, {segment_out_hash, annot_hash, img_hash});
    CacheBlob prep_blob = run_stage(
        ctx.cache_dir, "prep", prep_key, index, out.report.stages["prep"], [&] {
          json inputs = json::array();
          for (int n = 0; n < int(units.size()); ++n) {
            std::string input;
            int slot = 0;
            if (cfg.model == "sentence") {
              input = units[std::size_t(n)].content;
            } else if (cfg.model == "2+2") {
              input = build_input_2p2(units, n);
              slot = n > 0 ? 1 : 0;
            } else if (cfg.model == "scene") {
              const SceneInput scene = build_input_scene(units, n);
              input = scene.input;
              slot = scene.slot;
            } else {  // scene+visual
              const int scene_index = units[std::size_t(n)].scene.value_or(0);
              SceneTagSet tags;
              tags.scene = scene_index;
              if (ctx.engines->tagger && scene_index >= 0 &&
                  scene_index < int(layout_page.frames.size())) {
                tags = predict_scene_tags(*ctx.engines->tagger, img,
                                          layout_page.frames[std::size_t(scene_index)],
                                          scene_index);
              }
              const SceneInput scene = build_input_scene_visual(units, n, tags);
              input = scene.input;
              slot = scene.slot;
            }
            inputs.push_back(json{{"input", input}, {"slot", slot}});
          }
          CacheBlob blob;
          blob.meta["inputs"] = std::move(inputs);
          blob.meta["warnings"] = json::array();
          return blob;
        });
    struct PrepInput {
      std::string input;
      int slot = 0;
    };
    std::vector<PrepInput> prep_inputs;
    for (const auto& j : prep_blob.meta.at("inputs")) {
      prep_inputs.push_back({j.at("input").get<std::string>(), j.at("slot").get<int>()});
    }
    for (const std::string& w : strings_from_json(prep_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    const std::uint64_t prep_out_hash = fnv1a(prep_blob.meta.dump());

    // ---- translate ----------------------------------------------------------
    const std::uint64_t translate_key =
        stage_key("translate", ctx.translate_cfg, {prep_out_hash});
    CacheBlob translate_blob = run_stage(
        ctx.cache_dir, "translate", translate_key, index, out.report.stages["translate"], [&] {
          json texts = json::array();
          json warnings = json::array();
          for (std::size_t n = 0; n < prep_inputs.size(); ++n) {
            std::string text;
            bool degraded = false;
            try {
              const std::string raw = ctx.engines->translator->translate(prep_inputs[n].input);
              SplitResult split = split_output(raw, prep_inputs[n].slot);
              degraded = split.degraded;
              text = std::move(split.text);
              if (cfg.model == "scene+visual" && prep_inputs[n].slot == 0) {
                text = strip_leading_tags(text);
              }
            } catch (const Error& e) {
              warnings.push_back("region " + std::to_string(n) +
                                 ": translation failed: " + e.what());
            }
            if (degraded) {
              warnings.push_back("region " + std::to_string(n) +
                                 ": engine returned fewer segments than expected");
            }
            texts.push_back(json{{"text", text}, {"degraded", degraded}});
          }
          CacheBlob blob;
          blob.meta["texts"] = std::move(texts);
          blob.meta["warnings"] = std::move(warnings);
          return blob;
        });
    std::vector<std::string> translations;
    for (const auto& j : translate_blob.meta.at("texts")) {
      translations.push_back(j.at("text").get<std::string>());
    }
    for (const std::string& w : strings_from_json(translate_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    const std::uint64_t translate_out_hash = fnv1a(translate_blob.meta.dump());

    // ---- clean: erase the source text ---------------------------------------
    const std::uint64_t clean_key =
        stage_key("clean", ctx.clean_cfg, {img_hash, segment_out_hash});
    CacheBlob clean_blob = run_stage(
        ctx.cache_dir, "clean", clean_key, index, out.report.stages["clean"], [&] {
          GrayImage cleaned = img;
          for (const TextUnit& u : units) {
            if (!u.mask) continue;
            cleaned = ctx.engines->cleaner->clean(cleaned, u.lines, *u.mask);
          }
          CacheBlob blob;
          blob.meta["warnings"] = json::array();
          blob.payload = image_to_png_string(cleaned);
          return blob;
        });
    for (const std::string& w : strings_from_json(clean_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    const std::uint64_t clean_out_hash =
        fnv1a(clean_blob.payload, fnv1a(clean_blob.meta.dump()));

    // ---- letter: place the translations -------------------------------------
    const std::uint64_t letter_key = stage_key(
        "letter", ctx.letter_cfg, {clean_out_hash, translate_out_hash, segment_out_hash});
    CacheBlob letter_blob = run_stage(
        ctx.cache_dir, "letter", letter_key, index, out.report.stages["letter"], [&] {
          GrayImage lettered = image_from_png_string(clean_blob.payload);
          json warnings = json::array();
          int overflows = 0;
          for (std::size_t n = 0; n < units.size() && n < translations.size(); ++n) {
            if (translations[n].empty() || !units[n].mask) continue;
            const LetteringPlan plan = plan_lettering(translations[n], *units[n].mask);
            if (plan.overflow) {
              ++overflows;
              warnings.push_back("region " + std::to_string(n) +
                                 ": translation does not fit, lettered at minimum size");
            }
            lettered = render_lettering(lettered, plan, *ctx.engines->rasterizer);
          }
          CacheBlob blob;
          blob.meta["overflows"] = overflows;
          blob.meta["warnings"] = std::move(warnings);
          blob.payload = image_to_png_string(lettered);
          return blob;
        });
    out.report.overflows = letter_blob.meta.at("overflows").get<int>();
    for (const std::string& w : strings_from_json(letter_blob.meta.at("warnings"))) {
      out.report.warnings.push_back(w);
    }
    out.image = image_from_png_string(letter_blob.payload);
    out.have_image = true;
  } catch (const Error& e) {
    out.report.failed = true;
    out.report.error = e.what();
  } catch (const std::exception& e) {
    out.report.failed = true;
    out.report.error = std::string("unexpected: ") + e.what();
  }
  return out;
}

std::string join_tags(const std::vector<std::string>& tags) {
  std::string out;
  for (const std::string& t : tags) {
    out += t;
    out += ',';
  }
  return out;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("pipeline config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("pipeline config must be a JSON object");

  static const std::set<std::string> known{
      "volume",     "out_dir",    "cache_dir",      "detector",   "detector_jitter",
      "ocr",        "tagger",     "constant_tags",  "translator", "dict",
      "cleaner",    "rasterizer", "rasterizer_shade", "model",    "src_lang",
      "dst_lang",   "seed",       "workers"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("pipeline config: unknown key \"" + item.key() + "\"");
    }
  }

  PipelineConfig cfg;
  try {
    cfg.volume_dir = doc.value("volume", std::string());
    cfg.out_dir = doc.value("out_dir", std::string());
    cfg.cache_dir = doc.value("cache_dir", std::string());
    cfg.detector = doc.value("detector", cfg.detector);
    cfg.detector_jitter = doc.value("detector_jitter", cfg.detector_jitter);
    cfg.ocr = doc.value("ocr", cfg.ocr);
    cfg.tagger = doc.value("tagger", cfg.tagger);
    if (doc.contains("constant_tags")) {
      cfg.constant_tags = doc.at("constant_tags").get<std::vector<std::string>>();
    }
    cfg.translator = doc.value("translator", cfg.translator);
    cfg.dict_path = doc.value("dict", cfg.dict_path);
    cfg.cleaner = doc.value("cleaner", cfg.cleaner);
    cfg.rasterizer = doc.value("rasterizer", cfg.rasterizer);
    cfg.rasterizer_shade = doc.value("rasterizer_shade", cfg.rasterizer_shade);
    cfg.model = doc.value("model", cfg.model);
    cfg.src_lang = doc.value("src_lang", cfg.src_lang);
    cfg.dst_lang = doc.value("dst_lang", cfg.dst_lang);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.workers = doc.value("workers", cfg.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  validate_pipeline_config(cfg);
  return cfg;
}

void validate_pipeline_config(const PipelineConfig& cfg) {
  if (cfg.volume_dir.empty()) throw ConfigError("pipeline config: \"volume\" is required");
  if (cfg.out_dir.empty()) throw ConfigError("pipeline config: \"out_dir\" is required");
  if (cfg.detector != "fixture") {
    throw ConfigError("unknown detector engine \"" + cfg.detector + "\"");
  }
  if (cfg.ocr != "fixture") throw ConfigError("unknown OCR engine \"" + cfg.ocr + "\"");
  if (cfg.tagger != "fixture" && cfg.tagger != "constant" && cfg.tagger != "none") {
    throw ConfigError("unknown tagger engine \"" + cfg.tagger + "\"");
  }
  if (cfg.translator != "echo" && cfg.translator != "dict") {
    throw ConfigError("unknown translator engine \"" + cfg.translator + "\"");
  }
  if (cfg.cleaner != "median") throw ConfigError("unknown cleaner engine \"" + cfg.cleaner + "\"");
  if (cfg.rasterizer != "box") {
    throw ConfigError("unknown rasterizer engine \"" + cfg.rasterizer + "\"");
  }
  if (cfg.model != "sentence" && cfg.model != "2+2" && cfg.model != "scene" &&
      cfg.model != "scene+visual") {
    throw ConfigError("unknown context model \"" + cfg.model + "\"");
  }
  if (cfg.detector_jitter < 0) throw ConfigError("detector_jitter must be non-negative");
  if (cfg.rasterizer_shade < 0 || cfg.rasterizer_shade > 255) {
    throw ConfigError("rasterizer_shade must be in [0, 255]");
  }
  if (cfg.workers < 0) throw ConfigError("workers must be non-negative");
}

std::string report_to_json(const RunReport& report, bool include_volatile) {
  json j;
  j["version"] = report.version;
  j["model"] = report.model;
  j["failures"] = report.failures;
  if (include_volatile) j["total_ms"] = report.total_ms;
  j["warnings"] = report.warnings;
  json pages = json::array();
  for (const PageRunReport& p : report.pages) {
    json jp;
    jp["id"] = p.id;
    jp["index"] = p.index;
    jp["failed"] = p.failed;
    jp["irregular"] = p.irregular;
    jp["texts"] = p.texts;
    jp["overflows"] = p.overflows;
    jp["error"] = p.error;
    jp["warnings"] = p.warnings;
    json stages;
    for (const auto& [name, s] : p.stages) {
      json js;
      js["key"] = s.key;
      if (include_volatile) {
        js["cached"] = s.cached;
        js["ms"] = s.ms;
      }
      stages[name] = std::move(js);
    }
    jp["stages"] = std::move(stages);
    pages.push_back(std::move(jp));
  }
  j["pages"] = std::move(pages);
  return j.dump(2) + "\n";
}

RunOutput run_pipeline(const PipelineConfig& config) {
  validate_pipeline_config(config);
  const auto t0 = Clock::now();

  Engines engines = build_engines(config);
  const FixtureVolume volume = load_volume(config.volume_dir);
  if (volume.src.images.size() != volume.src.pages.size()) {
    throw ConfigError("volume images and annotations are not aligned");
  }

  RunContext ctx;
  ctx.cfg = &config;
  ctx.volume = &volume;
  ctx.engines = &engines;

  const char* env_cache = std::getenv("MANGA_LAYOUT_CACHE");
  if (env_cache && *env_cache) {
    ctx.cache_dir = env_cache;
  } else if (!config.cache_dir.empty()) {
    ctx.cache_dir = config.cache_dir;
  } else {
    ctx.cache_dir = config.out_dir + "/.cache";
  }
  std::filesystem::create_directories(ctx.cache_dir);
  std::filesystem::create_directories(config.out_dir);

  {
    std::ostringstream s;
    char jitter[32];
    std::snprintf(jitter, sizeof jitter, "%.17g", config.detector_jitter);
    s << "layout|v1|" << config.detector << "|" << jitter << "|" << config.seed;
    ctx.layout_cfg = fnv1a(s.str());
  }
  ctx.segment_cfg = fnv1a("segment|v1|" + config.ocr);
  ctx.prep_cfg = fnv1a("prep|v1|" + config.model + "|" + config.tagger + "|" +
                       join_tags(config.constant_tags));
  ctx.translate_cfg = fnv1a("translate|v1|" + config.translator + "|" + config.model + "|" +
                            key_hex(fnv1a(engines.dict_content)));
  ctx.clean_cfg = fnv1a("clean|v1|" + config.cleaner);
  {
    std::ostringstream s;
    s << "letter|v1|" << config.rasterizer << "|" << config.rasterizer_shade;
    ctx.letter_cfg = fnv1a(s.str());
  }

  const int page_count = int(volume.src.images.size());
  std::vector<PageOutcome> outcomes(std::size_t(page_count));

  int worker_count = config.workers;
  if (worker_count <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    worker_count = hw > 0 ? int(hw) : 1;
  }
  worker_count = std::max(1, std::min(worker_count, page_count > 0 ? page_count : 1));

  if (worker_count <= 1 || page_count <= 1) {
    for (int i = 0; i < page_count; ++i) outcomes[std::size_t(i)] = process_page(ctx, i);
  } else {
    std::atomic<int> next{0};
    auto work = [&] {
      for (int i; (i = next.fetch_add(1)) < page_count;) {
        outcomes[std::size_t(i)] = process_page(ctx, i);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  RunOutput out;
  out.report.model = config.model;
  for (int i = 0; i < page_count; ++i) {
    PageOutcome& o = outcomes[std::size_t(i)];
    if (o.report.failed) {
      ++out.report.failures;
    } else if (o.have_image) {
      write_png(o.image, config.out_dir + "/" + o.report.id + ".png");
      out.page_names.push_back(o.report.id);
      out.images.push_back(std::move(o.image));
    }
    out.report.pages.push_back(std::move(o.report));
  }
  out.report.total_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

  std::ofstream report_file(config.out_dir + "/report.json", std::ios::binary);
  if (!report_file) throw IoError("cannot write run report in " + config.out_dir);
  report_file << report_to_json(out.report, true);
  return out;
}

}  // namespace manga
