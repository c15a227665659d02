#include "manga/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "manga/errors.hpp"

namespace manga {
namespace {

constexpr double kMinGapWidth = 1.0;

struct Segment {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> members;
};

// Projects the chosen frames onto one axis and merges their extents; gaps
// narrower than kMinGapWidth (including overlaps) are absorbed. Segments come
// back sorted ascending, each holding the frames whose extent it swallowed.
std::vector<Segment> merge_extents(const std::vector<FrameBox>& frames,
                                   const std::vector<int>& members, bool along_y) {
  struct Extent {
    double lo, hi;
    int idx;
  };
  std::vector<Extent> extents;
  extents.reserve(members.size());
  for (int idx : members) {
    const BoundingBox& b = frames[idx].box;
    extents.push_back(along_y ? Extent{b.y, b.bottom(), idx} : Extent{b.x, b.right(), idx});
  }
  std::sort(extents.begin(), extents.end(), [](const Extent& a, const Extent& b) {
    return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
  });

  std::vector<Segment> segments;
  for (const Extent& e : extents) {
    if (segments.empty() || e.lo - segments.back().hi >= kMinGapWidth) {
      segments.push_back({e.lo, e.hi, {e.idx}});
    } else {
      segments.back().hi = std::max(segments.back().hi, e.hi);
      segments.back().members.push_back(e.idx);
    }
  }
  return segments;
}

LayoutNode build_tree(const std::vector<FrameBox>& frames, std::vector<int> members,
                      bool& any_irregular) {
  if (members.size() == 1) return {LayoutNode::Kind::Leaf, members[0], false, {}};

  std::vector<Segment> rows = merge_extents(frames, members, true);
  if (rows.size() > 1) {
    LayoutNode node{LayoutNode::Kind::RowSplit, -1, false, {}};
    for (Segment& seg : rows) {  // ascending y = top to bottom
      node.children.push_back(build_tree(frames, std::move(seg.members), any_irregular));
    }
    return node;
  }

  std::vector<Segment> cols = merge_extents(frames, members, false);
  if (cols.size() > 1) {
    LayoutNode node{LayoutNode::Kind::ColumnSplit, -1, false, {}};
    for (auto it = cols.rbegin(); it != cols.rend(); ++it) {  // descending x = right to left
      node.children.push_back(build_tree(frames, std::move(it->members), any_irregular));
    }
    return node;
  }

  // No usable gap along either axis: order by the fallback rule and flag it.
  std::sort(members.begin(), members.end(), [&frames](int a, int b) {
    const BoundingBox& ba = frames[a].box;
    const BoundingBox& bb = frames[b].box;
    if (ba.y != bb.y) return ba.y < bb.y;
    if (ba.right() != bb.right()) return ba.right() > bb.right();
    return a < b;
  });
  LayoutNode node{LayoutNode::Kind::RowSplit, -1, true, {}};
  for (int idx : members) node.children.push_back({LayoutNode::Kind::Leaf, idx, false, {}});
  any_irregular = true;
  return node;
}

void collect_order(const LayoutNode& node, std::vector<int>& order) {
  if (node.kind == LayoutNode::Kind::Leaf) {
    order.push_back(node.frame);
    return;
  }
  for (const LayoutNode& child : node.children) collect_order(child, order);
}

double effective_order(const std::vector<FrameBox>& frames, int index) {
  return frames[index].order.has_value() ? double(*frames[index].order) : double(index);
}

// True when frame a comes before frame b in the tie-break ranking.
bool earlier_frame(const std::vector<FrameBox>& frames, int a, int b) {
  const double oa = effective_order(frames, a);
  const double ob = effective_order(frames, b);
  if (oa != ob) return oa < ob;
  return a < b;
}

}  // namespace

LayoutResult order_frames(const Page& page) {
  if (page.frames.empty()) throw NoFrames("order_frames: page has no frames");
  std::vector<int> members(page.frames.size());
  std::iota(members.begin(), members.end(), 0);

  LayoutResult result;
  bool any_irregular = false;
  result.tree = build_tree(page.frames, std::move(members), any_irregular);
  result.irregular = any_irregular;
  collect_order(result.tree, result.order);
  return result;
}

Page apply_frame_order(Page page, const LayoutResult& layout) {
  for (std::size_t rank = 0; rank < layout.order.size(); ++rank) {
    page.frames[layout.order[rank]].order = int(rank);
  }
  return page;
}

Page assign_scenes(Page page) {
  if (page.frames.empty()) throw NoFrames("assign_scenes: page has no frames");
  for (TextUnit& text : page.texts) {
    int best = 0;
    double best_iou = -1.0;
    for (std::size_t i = 0; i < page.frames.size(); ++i) {
      const double v = iou(text.box, page.frames[i].box);
      if (v > best_iou || (v == best_iou && earlier_frame(page.frames, int(i), best))) {
        best_iou = v;
        best = int(i);
      }
    }
    if (best_iou <= 0.0) {
      // The text overlaps nothing; fall back to the nearest frame center.
      best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < page.frames.size(); ++i) {
        const double d = distance(text.box.center(), page.frames[i].box.center());
        if (d < best_dist || (d == best_dist && earlier_frame(page.frames, int(i), best))) {
          best_dist = d;
          best = int(i);
        }
      }
    }
    text.scene = best;
  }
  return page;
}

Page order_texts(Page page) {
  struct Key {
    double frame_order;
    double dist;
    double y;
    double x;
    std::size_t idx;
  };
  std::vector<Key> keys;
  keys.reserve(page.texts.size());
  for (std::size_t i = 0; i < page.texts.size(); ++i) {
    const TextUnit& t = page.texts[i];
    if (!t.scene.has_value() || *t.scene < 0 || *t.scene >= int(page.frames.size())) {
      throw UnassignedScene("order_texts: text " + std::to_string(i) + " has no valid scene");
    }
    const FrameBox& frame = page.frames[*t.scene];
    const Point2 corner = t.box.top_right();
    keys.push_back({effective_order(page.frames, *t.scene),
                    distance(corner, frame.box.top_right()), corner.y, corner.x, i});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.frame_order != b.frame_order) return a.frame_order < b.frame_order;
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x > b.x;
    return a.idx < b.idx;
  });
  for (std::size_t rank = 0; rank < keys.size(); ++rank) {
    page.texts[keys[rank].idx].order = int(rank);
  }
  return page;
}

Page annotate_layout(Page page) {
  const LayoutResult layout = order_frames(page);
  page = apply_frame_order(std::move(page), layout);
  page = assign_scenes(std::move(page));
  return order_texts(std::move(page));
}

std::vector<std::string> TaggerInterface::frame_tags(const GrayImage& page_image,
                                                     const FrameBox& frame) {
  const int x = int(std::lround(frame.box.x));
  const int y = int(std::lround(frame.box.y));
  const int w = std::max(1, int(std::lround(frame.box.w)));
  const int h = std::max(1, int(std::lround(frame.box.h)));
  return tags(crop(page_image, x, y, w, h));
}

std::vector<std::string> FixtureTagger::tags(const GrayImage&) {
  throw TaggerUnavailable("fixture tagger reads tags from annotations, not pixels");
}

std::vector<std::string> FixtureTagger::frame_tags(const GrayImage&, const FrameBox& frame) {
  return frame.tags;
}

SceneTagSet predict_scene_tags(TaggerInterface& tagger, const GrayImage& page_image,
                               const FrameBox& frame, int scene_index) {
  SceneTagSet result;
  result.scene = scene_index;
  result.tags = tagger.frame_tags(page_image, frame);
  std::sort(result.tags.begin(), result.tags.end());
  result.tags.erase(std::unique(result.tags.begin(), result.tags.end()), result.tags.end());
  return result;
}

}  // namespace manga
