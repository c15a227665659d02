#include "manga/page.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace manga {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json box_to_json(const BoundingBox& b) {
  return ordered_json::array({std::lround(b.x), std::lround(b.y), std::lround(b.w), std::lround(b.h)});
}

BoundingBox box_from_json(const ordered_json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("box must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

// Clamps a box into [0,w]x[0,h]; reports whether anything moved.
bool clamp_box(BoundingBox& b, int width, int height) {
  const BoundingBox before = b;
  b.x = std::clamp(b.x, 0.0, double(width));
  b.y = std::clamp(b.y, 0.0, double(height));
  b.w = std::clamp(b.w, 0.0, double(width) - b.x);
  b.h = std::clamp(b.h, 0.0, double(height) - b.y);
  return b.x != before.x || b.y != before.y || b.w != before.w || b.h != before.h;
}

}  // namespace

std::string page_to_json_string(const Page& page) {
  ordered_json doc;
  doc["schema"] = 1;
  doc["id"] = page.id;
  doc["image"] = page.image_path;
  doc["size"] = ordered_json::array({page.width, page.height});
  doc["frames"] = ordered_json::array();
  for (const FrameBox& f : page.frames) {
    ordered_json jf;
    jf["box"] = box_to_json(f.box);
    if (f.order) jf["order"] = *f.order;
    if (!f.tags.empty()) jf["tags"] = f.tags;
    doc["frames"].push_back(std::move(jf));
  }
  doc["texts"] = ordered_json::array();
  for (const TextUnit& t : page.texts) {
    ordered_json jt;
    jt["box"] = box_to_json(t.box);
    if (!t.content.empty()) jt["content"] = t.content;
    if (!t.lines.empty()) {
      jt["lines"] = ordered_json::array();
      for (const BoundingBox& l : t.lines) jt["lines"].push_back(box_to_json(l));
    }
    if (t.order) jt["order"] = *t.order;
    if (t.scene) jt["scene"] = *t.scene;
    doc["texts"].push_back(std::move(jt));
  }
  return doc.dump(2) + "\n";
}

Page page_from_json_string(const std::string& text, bool strict) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid annotation JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ParseError("annotation root must be an object");
    if (doc.value("schema", 0) != 1) throw ParseError("unsupported annotation schema version");
    Page page;
    page.id = doc.value("id", "");
    page.image_path = doc.value("image", "");
    if (!doc.contains("size") || !doc["size"].is_array() || doc["size"].size() != 2) {
      throw ParseError("annotation missing size [w, h]");
    }
    page.width = doc["size"][0].get<int>();
    page.height = doc["size"][1].get<int>();
    if (page.width <= 0 || page.height <= 0) throw ParseError("non-positive page size");

    int index = 0;
    for (const auto& jf : doc.value("frames", ordered_json::array())) {
      FrameBox f;
      f.box = box_from_json(jf.at("box"));
      if (clamp_box(f.box, page.width, page.height)) {
        page.warnings.push_back("frame " + std::to_string(index) + ": box clamped to page bounds");
      }
      if (jf.contains("order")) f.order = jf["order"].get<int>();
      if (jf.contains("tags")) f.tags = jf["tags"].get<std::vector<std::string>>();
      page.frames.push_back(std::move(f));
      ++index;
    }
    index = 0;
    for (const auto& jt : doc.value("texts", ordered_json::array())) {
      TextUnit t;
      t.box = box_from_json(jt.at("box"));
      if (clamp_box(t.box, page.width, page.height)) {
        page.warnings.push_back("text " + std::to_string(index) + ": box clamped to page bounds");
      }
      t.content = jt.value("content", "");
      for (const auto& jl : jt.value("lines", ordered_json::array())) {
        BoundingBox l = box_from_json(jl);
        if (clamp_box(l, page.width, page.height)) {
          page.warnings.push_back("text " + std::to_string(index) + ": line box clamped");
        }
        t.lines.push_back(l);
      }
      if (jt.contains("order")) t.order = jt["order"].get<int>();
      if (jt.contains("scene")) t.scene = jt["scene"].get<int>();
      page.texts.push_back(std::move(t));
      ++index;
    }
    if (strict && page.frames.empty()) throw NoFrames("page has zero frames: " + page.id);
    return page;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid annotation structure: ") + e.what());
  }
}

Page load_page_annotations(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotation file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return page_from_json_string(text, strict);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " (" + path + ")");
  }
}

void save_page_annotations(const Page& page, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open annotation file for writing: " + path);
  out << page_to_json_string(page);
  if (!out) throw IoError("write failed: " + path);
}

bool structurally_equal(const Page& a, const Page& b) {
  return page_to_json_string(a) == page_to_json_string(b);
}

// --- Manga109 XML import ------------------------------------------------------

namespace {

std::string decode_entities(std::string s) {
  static const std::pair<const char*, const char*> table[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : table) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, std::string(from).size(), to);
      pos += 1;
    }
  }
  return s;
}

// Parses name="value" attributes from the inside of a tag.
std::string attr_value(const std::string& tag, const std::string& name) {
  const std::string needle = name + "=\"";
  const std::size_t start = tag.find(needle);
  if (start == std::string::npos) return "";
  const std::size_t vstart = start + needle.size();
  const std::size_t vend = tag.find('"', vstart);
  if (vend == std::string::npos) throw ParseError("unterminated attribute in XML tag");
  return decode_entities(tag.substr(vstart, vend - vstart));
}

int attr_int(const std::string& tag, const std::string& name) {
  const std::string v = attr_value(tag, name);
  if (v.empty()) throw ParseError("missing XML attribute: " + name);
  try {
    return std::stoi(v);
  } catch (const std::logic_error&) {
    throw ParseError("non-numeric XML attribute: " + name);
  }
}

BoundingBox box_from_xml_tag(const std::string& tag) {
  const int xmin = attr_int(tag, "xmin"), ymin = attr_int(tag, "ymin");
  const int xmax = attr_int(tag, "xmax"), ymax = attr_int(tag, "ymax");
  return {double(xmin), double(ymin), double(xmax - xmin), double(ymax - ymin)};
}

}  // namespace

std::vector<Page> import_manga109_xml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open XML file: " + path);
  const std::string xml((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<Page> pages;
  std::size_t pos = 0;
  while ((pos = xml.find("<page", pos)) != std::string::npos) {
    const char after = pos + 5 < xml.size() ? xml[pos + 5] : '\0';
    if (after != ' ' && after != '\t' && after != '\n' && after != '\r' && after != '>' &&
        after != '/') {
      pos += 5;  // a longer tag name such as <pages>
      continue;
    }
    const std::size_t tag_end = xml.find('>', pos);
    if (tag_end == std::string::npos) throw ParseError("unterminated <page> tag");
    const std::string page_tag = xml.substr(pos, tag_end - pos);
    const bool self_closed = xml[tag_end - 1] == '/';

    Page page;
    page.id = attr_value(page_tag, "index");
    page.width = attr_int(page_tag, "width");
    page.height = attr_int(page_tag, "height");

    std::size_t body_end = tag_end + 1;
    if (!self_closed) {
      body_end = xml.find("</page>", tag_end);
      if (body_end == std::string::npos) throw ParseError("missing </page>");
      const std::string body = xml.substr(tag_end + 1, body_end - tag_end - 1);

      std::size_t fpos = 0;
      while ((fpos = body.find("<frame", fpos)) != std::string::npos) {
        const std::size_t fend = body.find('>', fpos);
        if (fend == std::string::npos) throw ParseError("unterminated <frame> tag");
        FrameBox f;
        f.box = box_from_xml_tag(body.substr(fpos, fend - fpos));
        clamp_box(f.box, page.width, page.height);
        page.frames.push_back(std::move(f));
        fpos = fend;
      }
      std::size_t tpos = 0;
      while ((tpos = body.find("<text", tpos)) != std::string::npos) {
        const std::size_t tend = body.find('>', tpos);
        if (tend == std::string::npos) throw ParseError("unterminated <text> tag");
        TextUnit t;
        t.box = box_from_xml_tag(body.substr(tpos, tend - tpos));
        clamp_box(t.box, page.width, page.height);
        if (body[tend - 1] != '/') {
          const std::size_t close = body.find("</text>", tend);
          if (close == std::string::npos) throw ParseError("missing </text>");
          t.content = decode_entities(body.substr(tend + 1, close - tend - 1));
        }
        page.texts.push_back(std::move(t));
        tpos = tend;
      }
      body_end += 7;  // past "</page>"
    }
    pages.push_back(std::move(page));
    pos = body_end;
  }
  return pages;
}

// --- Volume manifest -----------------------------------------------------------

namespace {

std::string join_relative(const std::string& base, const std::string& rel) {
  if (rel.empty()) return "";
  const std::filesystem::path p(rel);
  if (p.is_absolute() || base.empty()) return rel;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace

std::string VolumeManifest::image_path(std::size_t i) const {
  return join_relative(base_dir, pages.at(i).image);
}

std::string VolumeManifest::annotation_path(std::size_t i) const {
  return join_relative(base_dir, pages.at(i).annotation);
}

VolumeManifest load_volume_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid manifest JSON: ") + e.what() + " (" + path + ")");
  }
  try {
    if (doc.value("schema", 0) != 1) throw ParseError("unsupported manifest schema: " + path);
    VolumeManifest m;
    m.volume = doc.value("volume", "");
    for (const auto& jp : doc.value("pages", ordered_json::array())) {
      ManifestEntry e;
      e.id = jp.value("id", "");
      e.image = jp.value("image", "");
      e.annotation = jp.value("annotation", "");
      if (e.image.empty()) throw ParseError("manifest page without image path: " + path);
      m.pages.push_back(std::move(e));
    }
    m.base_dir = std::filesystem::path(path).parent_path().string();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid manifest structure: ") + e.what() + " (" + path + ")");
  }
}

void save_volume_manifest(const VolumeManifest& manifest, const std::string& path) {
  ordered_json doc;
  doc["schema"] = 1;
  doc["volume"] = manifest.volume;
  doc["pages"] = ordered_json::array();
  for (const ManifestEntry& e : manifest.pages) {
    ordered_json jp;
    jp["id"] = e.id;
    jp["image"] = e.image;
    if (!e.annotation.empty()) jp["annotation"] = e.annotation;
    doc["pages"].push_back(std::move(jp));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest for writing: " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace manga
