#pragma once

#include <string>
#include <vector>

#include "manga/geometry.hpp"
#include "manga/image.hpp"
#include "manga/page.hpp"

namespace manga {

// Node of the recursive row/column decomposition of a page.
//
// Rows are read top to bottom and columns right to left, so the children of a
// split are stored in reading order. A region whose frames admit no clean gap
// is ordered by the fallback rule (top ascending, then right edge descending)
// and carries irregular = true, with its frames as direct leaf children.
struct LayoutNode {
  enum class Kind { RowSplit, ColumnSplit, Leaf };

  Kind kind = Kind::Leaf;
  int frame = -1;  // frame index when kind == Leaf
  bool irregular = false;
  std::vector<LayoutNode> children;
};

// order_frames output: the decomposition tree plus the flattened reading order.
struct LayoutResult {
  LayoutNode tree;
  std::vector<int> order;  // frame indices in reading order
  bool irregular = false;  // true when any region needed the fallback rule
};

// Recursive XY-cut over the frame bounding boxes. Horizontal gaps (at least
// one pixel wide) split a region into rows read top to bottom; failing that,
// vertical gaps split it into columns read right to left; a multi-frame
// region with neither is ordered by the fallback rule and marked irregular.
// Throws NoFrames on a page without frames.
LayoutResult order_frames(const Page& page);

// Writes the reading order produced by order_frames into frame.order.
Page apply_frame_order(Page page, const LayoutResult& layout);

// Assigns every text to the frame with maximal IoU against its box; ties go
// to the earlier frame in reading order, then the lower frame index. A text
// overlapping no frame at all goes to the frame with the nearest center.
// Throws NoFrames on a page without frames.
Page assign_scenes(Page page);

// Fills text.order: texts sort by their frame's reading order, then within a
// frame by the distance from the text box's top-right corner to the frame
// box's top-right corner, ties going to the smaller corner y and then the
// larger corner x. Throws UnassignedScene when a text lacks a valid scene.
Page order_texts(Page page);

// order_frames + apply_frame_order + assign_scenes + order_texts in one call.
Page annotate_layout(Page page);

// A tagger maps a frame crop to tags drawn from its vocabulary.
class TaggerInterface {
 public:
  virtual ~TaggerInterface() = default;

  // Tags for a frame crop.
  virtual std::vector<std::string> tags(const GrayImage& crop) = 0;

  // Tags for one frame of a full page image; the default crops and delegates.
  virtual std::vector<std::string> frame_tags(const GrayImage& page_image, const FrameBox& frame);
};

// Returns a fixed tag set regardless of pixels.
class ConstantTagger final : public TaggerInterface {
 public:
  explicit ConstantTagger(std::vector<std::string> tags) : tags_(std::move(tags)) {}

  std::vector<std::string> tags(const GrayImage&) override { return tags_; }

 private:
  std::vector<std::string> tags_;
};

// Replays the tags recorded in the frame annotations. It needs the frame
// identity, so the crop-only entry point throws TaggerUnavailable.
class FixtureTagger final : public TaggerInterface {
 public:
  std::vector<std::string> tags(const GrayImage&) override;
  std::vector<std::string> frame_tags(const GrayImage&, const FrameBox& frame) override;
};

// Runs the tagger on the frame and canonicalizes the result (sorted and
// deduplicated). scene_index is recorded in the returned set as-is.
SceneTagSet predict_scene_tags(TaggerInterface& tagger, const GrayImage& page_image,
                               const FrameBox& frame, int scene_index = -1);

}  // namespace manga
