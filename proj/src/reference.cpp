#include "editforge/reference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace editforge::ref {

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return 0.0;
  if (q <= 0.0) return values.front();
  if (q >= 1.0) return values.back();
  double h = q * static_cast<double>(n - 1);
  size_t lo = static_cast<size_t>(h);
  size_t hi = std::min(lo + 1, n - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

std::optional<double> otsu_from_histogram(const std::array<std::uint64_t, 256>& h) {
  int occupied = 0;
  for (auto c : h)
    if (c > 0) ++occupied;
  if (occupied < 2) return std::nullopt;

  // Bin centers as representative values; split k puts bins [0..k] in class 0
  // and [k+1..255] in class 1.
  double best = -1.0;
  int best_k = -1;
  for (int k = 0; k + 1 < 256; ++k) {
    std::uint64_t n0 = 0, n1 = 0;
    double s0 = 0.0, s1 = 0.0;
    for (int b = 0; b < 256; ++b) {
      double center = (b + 0.5) / 256.0;
      if (b <= k) {
        n0 += h[b];
        s0 += static_cast<double>(h[b]) * center;
      } else {
        n1 += h[b];
        s1 += static_cast<double>(h[b]) * center;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    double w0 = static_cast<double>(n0), w1 = static_cast<double>(n1);
    double mu0 = s0 / w0, mu1 = s1 / w1;
    double between = w0 * w1 * (mu1 - mu0) * (mu1 - mu0);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  if (best_k < 0) return std::nullopt;
  return (best_k + 1) / 256.0;
}

namespace {

inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

std::vector<std::vector<double>> gaussian2d_11() {
  const int R = 5;
  const double sigma = 1.5;
  std::vector<std::vector<double>> w(11, std::vector<double>(11));
  double total = 0.0;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      double g = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
      w[i + R][j + R] = g;
      total += g;
    }
  for (auto& row : w)
    for (double& x : row) x /= total;
  return w;
}

}  // namespace

GridF ssim_map(const GridF& ya, const GridF& yb) {
  static const auto W = gaussian2d_11();
  const int R = 5;
  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
  GridF out(ya.width, ya.height);
  for (int r = 0; r < ya.height; ++r) {
    for (int c = 0; c < ya.width; ++c) {
      double mx = 0.0, my = 0.0;
      for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j) {
          double w = W[i + R][j + R];
          mx += w * ya.at(reflect(r + i, ya.height), reflect(c + j, ya.width));
          my += w * yb.at(reflect(r + i, yb.height), reflect(c + j, yb.width));
        }
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j) {
          double w = W[i + R][j + R];
          double dx = ya.at(reflect(r + i, ya.height), reflect(c + j, ya.width)) - mx;
          double dy = yb.at(reflect(r + i, yb.height), reflect(c + j, yb.width)) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cov += w * dx * dy;
        }
      out.at(r, c) = ((2 * mx * my + C1) * (2 * cov + C2)) /
                     ((mx * mx + my * my + C1) * (vx + vy + C2));
    }
  }
  return out;
}

MaskGrid erode(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      bool all = true;
      for (int i = -radius; i <= radius && all; ++i)
        for (int j = -radius; j <= radius && all; ++j) {
          int rr = r + i, cc = c + j;
          bool inside = rr >= 0 && rr < m.height && cc >= 0 && cc < m.width;
          if (!inside || m.at(rr, cc) == 0) all = false;
        }
      out.at(r, c) = all ? 1 : 0;
    }
  return out;
}

MaskGrid dilate(const MaskGrid& m, int radius) {
  MaskGrid out(m.width, m.height, 0);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      bool any = false;
      for (int i = -radius; i <= radius && !any; ++i)
        for (int j = -radius; j <= radius && !any; ++j) {
          int rr = r + i, cc = c + j;
          if (rr >= 0 && rr < m.height && cc >= 0 && cc < m.width &&
              m.at(rr, cc) != 0)
            any = true;
        }
      out.at(r, c) = any ? 1 : 0;
    }
  return out;
}

MaskGrid open(const MaskGrid& m, int radius) { return dilate(erode(m, radius), radius); }

std::vector<size_t> component_sizes(const MaskGrid& m) {
  std::vector<size_t> sizes;
  std::vector<std::uint8_t> seen(m.v.size(), 0);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      size_t idx = size_t(r) * m.width + c;
      if (m.v[idx] == 0 || seen[idx]) continue;
      size_t count = 0;
      std::deque<std::pair<int, int>> q{{r, c}};
      seen[idx] = 1;
      while (!q.empty()) {
        auto [cr, cc] = q.front();
        q.pop_front();
        ++count;
        for (int i = -1; i <= 1; ++i)
          for (int j = -1; j <= 1; ++j) {
            if (i == 0 && j == 0) continue;
            int nr = cr + i, nc = cc + j;
            if (nr < 0 || nr >= m.height || nc < 0 || nc >= m.width) continue;
            size_t nidx = size_t(nr) * m.width + nc;
            if (m.v[nidx] && !seen[nidx]) {
              seen[nidx] = 1;
              q.push_back({nr, nc});
            }
          }
      }
      sizes.push_back(count);
    }
  return sizes;
}

double compactness(const MaskGrid& m) {
  size_t area = m.count();
  if (area == 0) return 0.0;
  int rmin = m.height, rmax = -1, cmin = m.width, cmax = -1;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.at(r, c)) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
  double bbox = double(rmax - rmin + 1) * double(cmax - cmin + 1);
  auto sizes = component_sizes(m);
  size_t largest = *std::max_element(sizes.begin(), sizes.end());
  double fill = static_cast<double>(area) / bbox;
  double dominance = static_cast<double>(largest) / static_cast<double>(area);
  return std::sqrt(fill * dominance);
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const size_t n = x.size();
  if (n == 0 || n != y.size()) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

inline double srgb_lin(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  const double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

void rgb_to_lab(const std::uint8_t* p, double lab[3]) {
  double r = srgb_lin(p[0] / 255.0);
  double g = srgb_lin(p[1] / 255.0);
  double b = srgb_lin(p[2] / 255.0);
  double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  double fx = lab_f(X / 0.95047), fy = lab_f(Y / 1.0), fz = lab_f(Z / 1.08883);
  lab[0] = 116.0 * fy - 16.0;
  lab[1] = 500.0 * (fx - fy);
  lab[2] = 200.0 * (fy - fz);
}

}  // namespace

GridF lab_distance_map(const ImageU8& a, const ImageU8& b) {
  GridF out(a.width, a.height);
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      double la[3], lb[3];
      rgb_to_lab(a.px(r, c), la);
      rgb_to_lab(b.px(r, c), lb);
      double d0 = la[0] - lb[0], d1 = la[1] - lb[1], d2 = la[2] - lb[2];
      out.at(r, c) = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
    }
  return out;
}

double grid_mean(const GridF& g) {
  double s = 0.0;
  for (double v : g.v) s += v;
  return g.v.empty() ? 0.0 : s / static_cast<double>(g.v.size());
}

}  // namespace editforge::ref
