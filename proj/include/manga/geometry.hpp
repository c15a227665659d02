#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "manga/errors.hpp"
#include "manga/rng.hpp"

namespace manga {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

double distance(Point2 a, Point2 b);

// Axis-aligned box, origin at the top-left corner, y growing downwards.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  Point2 center() const { return {x + w / 2.0, y + h / 2.0}; }
  Point2 top_right() const { return {x + w, y}; }
  bool contains(Point2 p) const {
    return p.x >= x && p.x < right() && p.y >= y && p.y < bottom();
  }
};

// Intersection-over-union of two boxes. Degenerate (zero-area) inputs yield 0
// unless both are empty and identical in extent, which still yields 0 because
// the union is empty; callers pass positive-area boxes in practice.
double iou(const BoundingBox& a, const BoundingBox& b);

// Smallest box containing both inputs.
BoundingBox box_union(const BoundingBox& a, const BoundingBox& b);

// Intersection box; zero-size box at (0,0) when the inputs do not overlap.
std::optional<BoundingBox> box_intersection(const BoundingBox& a, const BoundingBox& b);

// 3x3 projective transform, row-major. m[8] is kept at 1 by the estimators.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return Homography{}; }
  static Homography translation(double tx, double ty) {
    return Homography{{1, 0, tx, 0, 1, ty, 0, 0, 1}};
  }

  Homography inverse() const;  // throws DegenerateConfiguration if singular
};

Homography compose(const Homography& a, const Homography& b);  // a after b

// Applies h to p. Throws PointAtInfinity when |w| falls below 1e-12.
Point2 apply_homography(const Homography& h, Point2 p);

// Non-throwing variant used in inner loops; nullopt instead of throwing.
std::optional<Point2> try_apply_homography(const Homography& h, Point2 p);

// Axis-aligned bounding box of the transformed corners of `b`.
BoundingBox apply_homography(const Homography& h, const BoundingBox& b);

struct Correspondence {
  Point2 src;
  Point2 dst;
};

// Direct linear transform with coordinate normalization (points are centered
// and scaled to mean distance sqrt(2) before solving; the estimate is
// denormalized afterwards). Requires >= 4 correspondences; throws
// DegenerateConfiguration when they do not determine a unique homography.
Homography estimate_homography_dlt(std::span<const Correspondence> corrs);

struct RansacParams {
  int iterations = 1000;       // upper bound on sampling rounds
  double inlier_threshold = 1.5;  // max reprojection error in pixels
  int min_inliers = 50;        // an accepted model needs strictly more
  double confidence = 0.999;   // early-exit confidence for adaptive stopping
};

struct RansacResult {
  Homography h;
  std::vector<int> inliers;  // indices into the correspondence list, ascending
};

// Robust homography fit. Returns nullopt when no sampled model ends up with
// more than params.min_inliers supporting correspondences. On success the
// model is refit on the full inlier set with the plain DLT.
std::optional<RansacResult> ransac_homography(std::span<const Correspondence> corrs,
                                              const RansacParams& params, Rng& rng);

}  // namespace manga
