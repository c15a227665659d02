#include "manga/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace manga {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  const double inter = std::max(0.0, ix) * std::max(0.0, iy);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::min(a.x, b.x);
  const double y0 = std::min(a.y, b.y);
  const double x1 = std::max(a.right(), b.right());
  const double y1 = std::max(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

std::optional<BoundingBox> box_intersection(const BoundingBox& a, const BoundingBox& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.right(), b.right());
  const double y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

namespace {

Eigen::Matrix3d to_matrix(const Homography& h) {
  Eigen::Matrix3d m;
  m << h.m[0], h.m[1], h.m[2], h.m[3], h.m[4], h.m[5], h.m[6], h.m[7], h.m[8];
  return m;
}

Homography from_matrix(const Eigen::Matrix3d& m) {
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.m[r * 3 + c] = m(r, c);
  return h;
}

// Rescales so the bottom-right entry is 1 whenever that is numerically safe.
Homography normalized(Eigen::Matrix3d m) {
  if (std::abs(m(2, 2)) > 1e-12) m /= m(2, 2);
  return from_matrix(m);
}

}  // namespace

Homography Homography::inverse() const {
  const Eigen::Matrix3d m = to_matrix(*this);
  if (std::abs(m.determinant()) < 1e-15) {
    throw DegenerateConfiguration("homography is not invertible");
  }
  return normalized(m.inverse());
}

Homography compose(const Homography& a, const Homography& b) {
  return normalized(to_matrix(a) * to_matrix(b));
}

Point2 apply_homography(const Homography& h, Point2 p) {
  const auto q = try_apply_homography(h, p);
  if (!q) throw PointAtInfinity("homography maps point to infinity");
  return *q;
}

std::optional<Point2> try_apply_homography(const Homography& h, Point2 p) {
  const double w = h.m[6] * p.x + h.m[7] * p.y + h.m[8];
  if (std::abs(w) < 1e-12) return std::nullopt;
  const double x = (h.m[0] * p.x + h.m[1] * p.y + h.m[2]) / w;
  const double y = (h.m[3] * p.x + h.m[4] * p.y + h.m[5]) / w;
  return Point2{x, y};
}

BoundingBox apply_homography(const Homography& h, const BoundingBox& b) {
  const Point2 corners[4] = {{b.x, b.y}, {b.right(), b.y}, {b.x, b.bottom()}, {b.right(), b.bottom()}};
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool first = true;
  for (const Point2& c : corners) {
    const Point2 q = apply_homography(h, c);
    if (first) {
      x0 = x1 = q.x;
      y0 = y1 = q.y;
      first = false;
    } else {
      x0 = std::min(x0, q.x);
      y0 = std::min(y0, q.y);
      x1 = std::max(x1, q.x);
      y1 = std::max(y1, q.y);
    }
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

namespace {

// Similarity transform taking the points to zero centroid and mean distance
// sqrt(2). Conditioning step for the DLT system.
Eigen::Matrix3d hartley_normalization(std::span<const Correspondence> corrs, bool src_side) {
  double cx = 0, cy = 0;
  for (const auto& c : corrs) {
    const Point2 p = src_side ? c.src : c.dst;
    cx += p.x;
    cy += p.y;
  }
  const double n = static_cast<double>(corrs.size());
  cx /= n;
  cy /= n;
  double mean_dist = 0;
  for (const auto& c : corrs) {
    const Point2 p = src_side ? c.src : c.dst;
    mean_dist += std::hypot(p.x - cx, p.y - cy);
  }
  mean_dist /= n;
  if (mean_dist < 1e-12) {
    throw DegenerateConfiguration("correspondences are coincident");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

}  // namespace

Homography estimate_homography_dlt(std::span<const Correspondence> corrs) {
  const int n = static_cast<int>(corrs.size());
  if (n < 4) throw DegenerateConfiguration("homography estimation needs 4 correspondences");

  const Eigen::Matrix3d t_src = hartley_normalization(corrs, true);
  const Eigen::Matrix3d t_dst = hartley_normalization(corrs, false);

  Eigen::MatrixXd a(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d ps = t_src * Eigen::Vector3d(corrs[i].src.x, corrs[i].src.y, 1.0);
    const Eigen::Vector3d pd = t_dst * Eigen::Vector3d(corrs[i].dst.x, corrs[i].dst.y, 1.0);
    const double x = ps(0), y = ps(1), u = pd(0), v = pd(1);
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // The solution is the null vector. A second near-zero singular value (index
  // 7) means the null space has dimension >= 2: the data does not pin down a
  // unique homography (collinear or repeated points).
  if (sv(7) <= 1e-9 * sv(0)) {
    throw DegenerateConfiguration("correspondences do not determine a unique homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Eigen::Matrix3d result = t_dst.inverse() * hn * t_src;
  if (std::abs(result(2, 2)) < 1e-12) {
    throw DegenerateConfiguration("estimated homography cannot be normalized");
  }
  return from_matrix(result / result(2, 2));
}

std::optional<RansacResult> ransac_homography(std::span<const Correspondence> corrs,
                                              const RansacParams& params, Rng& rng) {
  const int n = static_cast<int>(corrs.size());
  if (n < 4) return std::nullopt;

  std::vector<int> best_inliers;
  Homography best_h;
  int rounds = params.iterations;

  auto collect_inliers = [&](const Homography& h) {
    std::vector<int> in;
    for (int i = 0; i < n; ++i) {
      const auto q = try_apply_homography(h, corrs[i].src);
      if (q && distance(*q, corrs[i].dst) < params.inlier_threshold) in.push_back(i);
    }
    return in;
  };

  for (int it = 0; it < rounds; ++it) {
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh = false;
      while (!fresh) {
        idx[k] = rng.uniform_int(0, n - 1);
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      }
    }
    const Correspondence sample[4] = {corrs[idx[0]], corrs[idx[1]], corrs[idx[2]], corrs[idx[3]]};

    Homography h;
    try {
      h = estimate_homography_dlt(sample);
    } catch (const DegenerateConfiguration&) {
      continue;
    }

    std::vector<int> in = collect_inliers(h);
    if (in.size() > best_inliers.size()) {
      best_inliers = std::move(in);
      best_h = h;
      // Adaptive stopping: with inlier ratio w, a 4-point sample is clean
      // with probability w^4; stop once the chance of having missed a clean
      // sample drops below 1 - confidence.
      const double w = static_cast<double>(best_inliers.size()) / n;
      const double p_all_bad = 1.0 - w * w * w * w;
      int needed = params.iterations;
      if (p_all_bad <= 0.0) {
        needed = 0;
      } else if (p_all_bad < 1.0) {
        const double est = std::log(1.0 - params.confidence) / std::log(p_all_bad);
        if (est < static_cast<double>(params.iterations)) needed = static_cast<int>(std::ceil(est));
      }
      rounds = std::min(rounds, it + 1 + needed);
    }
  }

  if (static_cast<int>(best_inliers.size()) <= params.min_inliers) return std::nullopt;

  // Refit on the full consensus set; keep the sample model if the refit
  // degenerates or loses too much support.
  std::vector<Correspondence> support;
  support.reserve(best_inliers.size());
  for (int i : best_inliers) support.push_back(corrs[i]);
  try {
    const Homography refit = estimate_homography_dlt(support);
    std::vector<int> refit_inliers = collect_inliers(refit);
    if (static_cast<int>(refit_inliers.size()) > params.min_inliers) {
      return RansacResult{refit, std::move(refit_inliers)};
    }
  } catch (const DegenerateConfiguration&) {
  }
  return RansacResult{best_h, std::move(best_inliers)};
}

}  // namespace manga
