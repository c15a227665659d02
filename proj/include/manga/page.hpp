#pragma once

#include <optional>
#include <string>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"

namespace manga {

// One panel (frame) of a page.
struct FrameBox {
  BoundingBox box;
  std::optional<int> order;        // reading order, filled by the layout pass
  std::vector<std::string> tags;   // annotated semantic tags, may be empty
};

// One text unit: a bubble region with its recognized content and line boxes.
struct TextUnit {
  BoundingBox box;
  std::string content;
  std::vector<BoundingBox> lines;
  std::optional<int> order;   // reading order within the page
  std::optional<int> scene;   // index of the owning frame
  std::optional<BinaryMask> mask;  // runtime-only; never serialized
};

// Semantic tags attached to one scene (frame).
struct SceneTagSet {
  int scene = 0;
  std::vector<std::string> tags;  // sorted, unique
};

// An annotated page. Immutable by convention: pipeline stages copy and fill.
struct Page {
  std::string id;
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<FrameBox> frames;
  std::vector<TextUnit> texts;
  std::vector<std::string> warnings;  // load-time notes; never serialized
};

// JSON annotation schema, one document per page:
//   {"schema":1, "id":..., "image":..., "size":[w,h],
//    "frames":[{"box":[x,y,w,h], "order":..., "tags":[...]}, ...],
//    "texts":[{"box":[...], "content":..., "lines":[[...]], "order":..., "scene":...}, ...]}
// Optional fields are omitted when absent; coordinates are integer pixels.
Page load_page_annotations(const std::string& path, bool strict = false);
void save_page_annotations(const Page& page, const std::string& path);

// The canonical serialized form (byte-stable for equal Pages).
std::string page_to_json_string(const Page& page);
Page page_from_json_string(const std::string& text, bool strict = false);

// Equality over the serialized fields (warnings and runtime masks ignored).
bool structurally_equal(const Page& a, const Page& b);

// One-way convenience importer for Manga109-style book XML: reads <page>
// elements with width/height/index attributes containing <frame> and <text>
// elements with xmin/ymin/xmax/ymax. Image paths are left empty.
std::vector<Page> import_manga109_xml(const std::string& path);

// A volume: ordered pages of one language.
struct ManifestEntry {
  std::string id;
  std::string image;       // path relative to the manifest file
  std::string annotation;  // optional, empty when the volume is image-only
};

struct VolumeManifest {
  std::string volume;  // volume identifier
  std::vector<ManifestEntry> pages;
  std::string base_dir;  // directory of the manifest file, set on load

  std::string image_path(std::size_t i) const;
  std::string annotation_path(std::size_t i) const;
};

VolumeManifest load_volume_manifest(const std::string& path);
void save_volume_manifest(const VolumeManifest& manifest, const std::string& path);

}  // namespace manga
