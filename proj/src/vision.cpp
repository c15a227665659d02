#include "manga/vision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "manga/errors.hpp"

namespace manga {

namespace {

constexpr double kGaussianSigma = 1.4;
constexpr int kGaussianRadius = 2;  // 5x5 window

const std::array<float, 25>& gaussian_kernel() {
  static const std::array<float, 25> kernel = [] {
    std::array<float, 25> k{};
    double sum = 0.0;
    for (int dy = -kGaussianRadius; dy <= kGaussianRadius; ++dy) {
      for (int dx = -kGaussianRadius; dx <= kGaussianRadius; ++dx) {
        const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * kGaussianSigma * kGaussianSigma));
        k[(dy + kGaussianRadius) * 5 + (dx + kGaussianRadius)] = static_cast<float>(w);
        sum += w;
      }
    }
    for (auto& w : k) w = static_cast<float>(w / sum);
    return k;
  }();
  return kernel;
}

int clamp_coord(int v, int hi) { return std::clamp(v, 0, hi - 1); }

// 5x5 Gaussian blur with replicated borders, float output.
std::vector<float> gaussian_smooth(const GrayImage& img) {
  const auto& k = gaussian_kernel();
  std::vector<float> out(static_cast<std::size_t>(img.width) * img.height, 0.0f);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      float acc = 0.0f;
      for (int dy = -kGaussianRadius; dy <= kGaussianRadius; ++dy) {
        const int sy = clamp_coord(y + dy, img.height);
        for (int dx = -kGaussianRadius; dx <= kGaussianRadius; ++dx) {
          const int sx = clamp_coord(x + dx, img.width);
          acc += k[(dy + kGaussianRadius) * 5 + (dx + kGaussianRadius)] * img.at(sx, sy);
        }
      }
      out[static_cast<std::size_t>(y) * img.width + x] = acc;
    }
  }
  return out;
}

struct Gradients {
  std::vector<float> gx;
  std::vector<float> gy;
};

// 3x3 Sobel on a float field, replicated borders.
Gradients sobel(const std::vector<float>& f, int w, int h) {
  Gradients g;
  g.gx.assign(f.size(), 0.0f);
  g.gy.assign(f.size(), 0.0f);
  auto v = [&](int x, int y) { return f[static_cast<std::size_t>(clamp_coord(y, h)) * w + clamp_coord(x, w)]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.gx[i] = (v(x + 1, y - 1) + 2 * v(x + 1, y) + v(x + 1, y + 1)) -
                (v(x - 1, y - 1) + 2 * v(x - 1, y) + v(x - 1, y + 1));
      g.gy[i] = (v(x - 1, y + 1) + 2 * v(x, y + 1) + v(x + 1, y + 1)) -
                (v(x - 1, y - 1) + 2 * v(x, y - 1) + v(x + 1, y - 1));
    }
  }
  return g;
}

}  // namespace

BinaryMask canny_edges(const GrayImage& img, const CannyParams& params) {
  if (img.empty()) return BinaryMask::zeros(img.width, img.height);
  if (params.low < 0 || params.high < params.low) {
    throw ConfigError("canny thresholds must satisfy 0 <= low <= high");
  }
  const int w = img.width, h = img.height;
  const std::vector<float> smooth = gaussian_smooth(img);
  const Gradients g = sobel(smooth, w, h);

  std::vector<float> mag(smooth.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(g.gx[i], g.gy[i]);

  auto mag_at = [&](int x, int y) -> double {
    if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };
  auto mag_interp = [&](double x, double y) -> double {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * mag_at(x0, y0) + fx * (1 - fy) * mag_at(x0 + 1, y0) +
           (1 - fx) * fy * mag_at(x0, y0 + 1) + fx * fy * mag_at(x0 + 1, y0 + 1);
  };

  // Non-maximum suppression with sub-pixel sampling: compare against the
  // interpolated magnitude one pixel away along the exact gradient direction
  // (L-inf normalized so the samples sit on the neighbor ring). ">" on one
  // side and ">=" on the other keeps a single pixel per ridge plateau.
  BinaryMask strong = BinaryMask::zeros(w, h);
  BinaryMask weak = BinaryMask::zeros(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m < params.low) continue;
      const double gx = g.gx[i], gy = g.gy[i];
      const double norm = std::max(std::abs(gx), std::abs(gy));
      if (norm < 1e-9) continue;
      const double ux = gx / norm, uy = gy / norm;
      if (m >= mag_interp(x + ux, y + uy) && m > mag_interp(x - ux, y - uy)) {
        weak.set(x, y, true);
        if (m >= params.high) strong.set(x, y, true);
      }
    }
  }

  // Hysteresis: flood from strong pixels through 8-connected weak ones.
  BinaryMask out = BinaryMask::zeros(w, h);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!strong.at(x, y) || out.at(x, y)) continue;
      out.set(x, y, true);
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (weak.at(nx, ny) && !out.at(nx, ny)) {
              out.set(nx, ny, true);
              stack.push_back({nx, ny});
            }
          }
        }
      }
    }
  }
  return out;
}

ComponentMap connected_components(const BinaryMask& mask, Connectivity conn) {
  ComponentMap cm;
  cm.width = mask.width;
  cm.height = mask.height;
  cm.labels.assign(static_cast<std::size_t>(mask.width) * mask.height, 0);

  static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int neighbor_count = conn == Connectivity::Four ? 4 : 8;

  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y) || cm.labels[static_cast<std::size_t>(y) * mask.width + x] != 0) continue;
      const std::int32_t label = ++cm.count;
      std::int64_t area = 0;
      int bx0 = x, by0 = y, bx1 = x, by1 = y;
      cm.labels[static_cast<std::size_t>(y) * mask.width + x] = label;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        bx0 = std::min(bx0, cx);
        by0 = std::min(by0, cy);
        bx1 = std::max(bx1, cx);
        by1 = std::max(by1, cy);
        for (int k = 0; k < neighbor_count; ++k) {
          const int nx = cx + dx8[k], ny = cy + dy8[k];
          if (nx < 0 || nx >= mask.width || ny < 0 || ny >= mask.height) continue;
          auto& l = cm.labels[static_cast<std::size_t>(ny) * mask.width + nx];
          if (l == 0 && mask.at(nx, ny)) {
            l = label;
            stack.push_back({nx, ny});
          }
        }
      }
      cm.areas.push_back(area);
      cm.boxes.push_back({double(bx0), double(by0), double(bx1 - bx0 + 1), double(by1 - by0 + 1)});
    }
  }
  return cm;
}

std::vector<int> meanshift_1d(const std::vector<double>& points, double bandwidth) {
  if (bandwidth <= 0) throw ConfigError("meanshift bandwidth must be positive");
  const int n = static_cast<int>(points.size());
  if (n == 0) return {};

  std::vector<double> modes(n);
  std::vector<int> members, prev;
  for (int i = 0; i < n; ++i) {
    double x = points[i];
    prev.clear();
    for (int iter = 0; iter < 200; ++iter) {
      members.clear();
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        if (std::abs(points[j] - x) <= bandwidth) {
          members.push_back(j);
          sum += points[j];
        }
      }
      if (members.empty()) break;  // cannot happen: the window tracks its own mean
      x = sum / static_cast<double>(members.size());
      if (members == prev) break;
      prev = members;
    }
    modes[i] = x;
  }

  // Modes closer than bandwidth/2 belong to one cluster (transitively), and
  // clusters are numbered left to right.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return modes[a] != modes[b] ? modes[a] < modes[b] : a < b;
  });
  std::vector<int> assign(n, 0);
  int cluster = 0;
  for (int k = 0; k < n; ++k) {
    if (k > 0 && modes[order[k]] - modes[order[k - 1]] > bandwidth / 2.0) ++cluster;
    assign[order[k]] = cluster;
  }
  return assign;
}

int cluster_count(const std::vector<int>& assignment) {
  int m = -1;
  for (int a : assignment) m = std::max(m, a);
  return m + 1;
}

namespace {

constexpr int kPatch = 16;
constexpr int kPatchHalf = 8;  // patch spans [-8, 7] around the keypoint

bool patch_fits(int x, int y, int w, int h) {
  return x - kPatchHalf >= 0 && x + kPatchHalf - 1 < w && y - kPatchHalf >= 0 && y + kPatchHalf - 1 < h;
}

// Mean/variance normalized then L2-normalized 16x16 patch. Returns an empty
// vector for featureless patches (zero variance).
std::vector<float> patch_descriptor(const GrayImage& img, int cx, int cy) {
  std::array<double, kPatch * kPatch> vals{};
  double mean = 0.0;
  int k = 0;
  for (int dy = -kPatchHalf; dy < kPatchHalf; ++dy) {
    for (int dx = -kPatchHalf; dx < kPatchHalf; ++dx) {
      vals[k] = img.at(cx + dx, cy + dy);
      mean += vals[k];
      ++k;
    }
  }
  mean /= vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= vals.size();
  if (var < 1e-9) return {};
  const double inv_std = 1.0 / std::sqrt(var);
  double norm_sq = 0.0;
  std::vector<float> d(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    d[i] = static_cast<float>((vals[i] - mean) * inv_std);
    norm_sq += static_cast<double>(d[i]) * d[i];
  }
  const float inv_norm = static_cast<float>(1.0 / std::sqrt(norm_sq));
  for (auto& v : d) v *= inv_norm;
  return d;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const GrayImage& img, int max_keypoints) {
  if (max_keypoints <= 0) throw ConfigError("max_keypoints must be positive");
  if (img.width < kPatch + 2 || img.height < kPatch + 2) return {};

  const int w = img.width, h = img.height;
  const std::vector<float> smooth = gaussian_smooth(img);
  const Gradients g = sobel(smooth, w, h);

  // Harris structure tensor, window-averaged with the same Gaussian.
  std::vector<float> ixx(smooth.size()), iyy(smooth.size()), ixy(smooth.size());
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    ixx[i] = g.gx[i] * g.gx[i];
    iyy[i] = g.gy[i] * g.gy[i];
    ixy[i] = g.gx[i] * g.gy[i];
  }
  const auto& kern = gaussian_kernel();
  auto window = [&](const std::vector<float>& f, int x, int y) {
    float acc = 0.0f;
    for (int dy = -kGaussianRadius; dy <= kGaussianRadius; ++dy) {
      const int sy = clamp_coord(y + dy, h);
      for (int dx = -kGaussianRadius; dx <= kGaussianRadius; ++dx) {
        const int sx = clamp_coord(x + dx, w);
        acc += kern[(dy + kGaussianRadius) * 5 + (dx + kGaussianRadius)] * f[static_cast<std::size_t>(sy) * w + sx];
      }
    }
    return acc;
  };

  std::vector<double> response(smooth.size(), 0.0);
  double max_response = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = window(ixx, x, y);
      const double b = window(iyy, x, y);
      const double c = window(ixy, x, y);
      const double r = (a * b - c * c) - 0.04 * (a + b) * (a + b);
      response[static_cast<std::size_t>(y) * w + x] = r;
      max_response = std::max(max_response, r);
    }
  }
  if (max_response <= 0.0) return {};
  const double threshold = 1e-4 * max_response;

  struct Candidate {
    double r;
    int x, y;
  };
  std::vector<Candidate> candidates;
  auto resp = [&](int x, int y) -> double {
    if (x < 0 || x >= w || y < 0 || y >= h) return -1e300;
    return response[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!patch_fits(x, y, w, h)) continue;
      const double r = resp(x, y);
      if (r < threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (resp(x + dx, y + dy) > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({r, x, y});
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.r != b.r) return a.r > b.r;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<Keypoint> out;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(out.size()) >= max_keypoints) break;
    std::vector<float> d = patch_descriptor(img, c.x, c.y);
    if (d.empty()) continue;
    out.push_back({{double(c.x), double(c.y)}, c.r, std::move(d)});
  }
  return out;
}

std::vector<Correspondence> match_descriptors(const std::vector<Keypoint>& a,
                                              const std::vector<Keypoint>& b,
                                              double ratio) {
  if (ratio <= 0 || ratio >= 1) throw ConfigError("match ratio must be in (0, 1)");
  std::vector<Correspondence> out;
  if (a.empty() || b.empty()) return out;

  for (const Keypoint& ka : a) {
    double best = 1e300, second = 1e300;
    int best_j = -1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto& db = b[j].descriptor;
      double dist = 0.0;
      for (std::size_t k = 0; k < ka.descriptor.size(); ++k) {
        const double diff = static_cast<double>(ka.descriptor[k]) - db[k];
        dist += diff * diff;
      }
      if (dist < best) {
        second = best;
        best = dist;
        best_j = static_cast<int>(j);
      } else if (dist < second) {
        second = dist;
      }
    }
    // Squared-distance form of the ratio test: d1 < ratio * d2.
    if (best_j >= 0 && best < ratio * ratio * second) {
      out.push_back({ka.pos, b[best_j].pos});
    }
  }
  return out;
}

}  // namespace manga
