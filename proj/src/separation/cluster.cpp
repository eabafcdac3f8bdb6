#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "audionav/errors.hpp"
#include "audionav/separation.hpp"

namespace audionav::separation {

namespace {

struct Point {
  double ipd;
  double log_ild;
};

double dist2(const Point& a, const Point& b) {
  const double di = a.ipd - b.ipd;
  const double dl = a.log_ild - b.log_ild;
  return di * di + dl * dl;
}

std::size_t nearest(const Point& p, const std::vector<Point>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = dist2(p, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

// k-means++ seeding.
std::vector<Point> seed_centroids(const std::vector<Point>& pts, std::size_t k, std::mt19937_64& rng) {
  std::vector<Point> c;
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  c.push_back(pts[pick(rng)]);
  std::vector<double> d(pts.size());
  while (c.size() < k) {
    for (std::size_t i = 0; i < pts.size(); ++i) d[i] = dist2(pts[i], c[nearest(pts[i], c)]);
    const double total = std::accumulate(d.begin(), d.end(), 0.0);
    if (total <= 0.0) {
      c.push_back(pts[pick(rng)]);
      continue;
    }
    std::discrete_distribution<std::size_t> weighted(d.begin(), d.end());
    c.push_back(pts[weighted(rng)]);
  }
  return c;
}

struct Fit {
  std::vector<Point> centroids;
  double inertia = std::numeric_limits<double>::infinity();
};

Fit lloyd(const std::vector<Point>& pts, std::vector<Point> centroids, int max_iterations) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> label(pts.size(), k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t l = nearest(pts[i], centroids);
      if (l != label[i]) {
        label[i] = l;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Point> sum(k, Point{0.0, 0.0});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum[label[i]].ipd += pts[i].ipd;
      sum[label[i]].log_ild += pts[i].log_ild;
      ++count[label[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // keep an emptied centroid where it was
      centroids[c] = {sum[c].ipd / static_cast<double>(count[c]), sum[c].log_ild / static_cast<double>(count[c])};
    }
  }
  Fit fit{std::move(centroids), 0.0};
  for (const auto& p : pts) fit.inertia += dist2(p, fit.centroids[nearest(p, fit.centroids)]);
  return fit;
}

std::size_t distinct_points(std::vector<Point> pts, std::size_t cap) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.ipd != b.ipd ? a.ipd < b.ipd : a.log_ild < b.log_ild;
  });
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size() && n < cap; ++i) {
    if (i == 0 || pts[i].ipd != pts[i - 1].ipd || pts[i].log_ild != pts[i - 1].log_ild) ++n;
  }
  return n;
}

} // namespace

dsp::MaskSet cluster_baseline(const dsp::TfGrid& ipd, const dsp::TfGrid& ild, int sources,
                              const ClusterOptions& options, const dsp::TfGrid* magnitude) {
  if (sources < 1) throw DomainError("cluster_baseline: need at least one source");
  if (ipd.frames != ild.frames || ipd.bins != ild.bins || ipd.size() != ild.size()) {
    throw DomainError("cluster_baseline: ipd and ild grids differ in shape");
  }
  if (magnitude && magnitude->size() != ipd.size()) throw DomainError("cluster_baseline: magnitude shape mismatch");
  if (options.restarts < 1 || options.max_iterations < 1) throw DomainError("cluster_baseline: bad options");

  const std::size_t n = ipd.size();
  const auto k = static_cast<std::size_t>(sources);
  std::vector<Point> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = {ipd.values[i], std::log(std::max(ild.values[i], dsp::kIldEpsilon))};
  }

  dsp::MaskSet masks;
  masks.sources = k;
  masks.frames = ipd.frames;
  masks.bins = ipd.bins;
  masks.values.assign(k * n, 0.0);
  if (k == 1) {
    std::fill(masks.values.begin(), masks.values.end(), 1.0);
    return masks;
  }

  std::vector<Point> fit_pts;
  if (magnitude) {
    const double peak = *std::max_element(magnitude->values.begin(), magnitude->values.end());
    const double floor = peak * std::pow(10.0, -options.floor_db / 20.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (peak > 0.0 && magnitude->values[i] >= floor) fit_pts.push_back(all[i]);
    }
    if (distinct_points(fit_pts, k) < k) fit_pts.clear();
  }
  if (fit_pts.empty()) fit_pts = all;
  if (distinct_points(fit_pts, k) < k) {
    throw DomainError("cluster_baseline: fewer distinct points than clusters");
  }

  std::mt19937_64 rng(options.seed);
  Fit best;
  for (int r = 0; r < options.restarts; ++r) {
    Fit fit = lloyd(fit_pts, seed_centroids(fit_pts, k, rng), options.max_iterations);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }
  // Order clusters by centroid so labels do not depend on seeding.
  std::sort(best.centroids.begin(), best.centroids.end(), [](const Point& a, const Point& b) {
    return a.ipd != b.ipd ? a.ipd < b.ipd : a.log_ild < b.log_ild;
  });
  for (std::size_t i = 0; i < n; ++i) masks.values[nearest(all[i], best.centroids) * n + i] = 1.0;
  return masks;
}

} // namespace audionav::separation
