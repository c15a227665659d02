#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "manga/image.hpp"

namespace manga {

// Configuration for a full translation run. Engines are named; unknown names
// are rejected up front, before any page is touched. The volume directory is
// one produced by write_volume (or anything with the same manifest layout).
struct PipelineConfig {
  std::string volume_dir;  // required: input volume directory
  std::string out_dir;     // required: rendered pages + report.json land here
  std::string cache_dir;   // empty → <out_dir>/.cache; MANGA_LAYOUT_CACHE wins over both

  std::string detector = "fixture";  // {"fixture"}
  double detector_jitter = 0.0;      // box jitter in pixels, fixture detector
  std::string ocr = "fixture";       // {"fixture"}
  std::string tagger = "fixture";    // {"fixture", "constant", "none"}
  std::vector<std::string> constant_tags;  // tag set for the constant tagger
  std::string translator = "echo";   // {"echo", "dict"}
  std::string dict_path;             // dict translator table; empty → <volume>/dict.tsv
  std::string cleaner = "median";    // {"median"}
  std::string rasterizer = "box";    // {"box"}
  int rasterizer_shade = 0;          // ink value for the box rasterizer

  std::string model = "scene";  // {"sentence", "2+2", "scene", "scene+visual"}
  std::string src_lang = "ja";
  std::string dst_lang = "en";

  std::uint64_t seed = 0;  // engine seed (detector jitter streams derive from it)
  int workers = 0;         // page worker threads; 0 → logical CPUs
};

// Parses the JSON config document. Unknown keys, malformed values, and
// unknown engine or model names all throw ConfigError (malformed JSON throws
// ParseError); nothing is processed.
PipelineConfig pipeline_config_from_json(const std::string& text);

// Engine-name and model validation used by the parser and by run_pipeline.
void validate_pipeline_config(const PipelineConfig& config);

struct StageReport {
  bool cached = false;  // output came from the content-addressed cache
  double ms = 0.0;      // wall time spent on the stage (0 when cached)
  std::string key;      // 16-hex-digit content address of the stage output
};

struct PageRunReport {
  std::string id;
  int index = 0;
  bool failed = false;     // the page produced no output at all
  bool irregular = false;  // frame order needed the fallback rule
  int texts = 0;           // regions recognized on the page
  int overflows = 0;       // regions whose translation did not fit
  std::string error;       // failure reason when failed
  std::vector<std::string> warnings;
  std::map<std::string, StageReport> stages;
};

struct RunReport {
  int version = 1;
  std::string model;
  int failures = 0;
  double total_ms = 0.0;
  std::vector<PageRunReport> pages;  // input order, one entry per page
  std::vector<std::string> warnings;
};

// Serializes the report. include_volatile=false drops wall times and cache
// flags — everything that may differ between two runs over identical content
// — so equal runs serialize byte-identically.
std::string report_to_json(const RunReport& report, bool include_volatile = true);

struct RunOutput {
  std::vector<std::string> page_names;  // ids of successfully rendered pages
  std::vector<GrayImage> images;        // aligned with page_names
  RunReport report;
};

// Translates a whole volume: per page layout-order → region segmentation and
// recognition → translation-input preparation (model from config) → translate
// → clean → letter. Rendered pages and report.json are written to out_dir and
// returned. Per-stage outputs are cached under the cache directory keyed by
// (stage name, stage config hash, input content hash); a later run reuses
// byte-identical work and re-executes only stages whose key changed. Pages
// run on a bounded worker pool; page errors are contained (the page is
// reported failed, the run continues).
RunOutput run_pipeline(const PipelineConfig& config);

}  // namespace manga
