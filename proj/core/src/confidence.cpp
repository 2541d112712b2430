#include "adt/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace adt {

std::string proxy_name(ProxyKind kind) {
  switch (kind) {
    case ProxyKind::topk_mass: return "topk_mass";
    case ProxyKind::entropy: return "entropy";
    case ProxyKind::peak_value: return "peak_value";
  }
  return "unknown";
}

ProxyKind proxy_from_name(const std::string& name) {
  if (name == "topk_mass") return ProxyKind::topk_mass;
  if (name == "entropy") return ProxyKind::entropy;
  if (name == "peak_value") return ProxyKind::peak_value;
  throw std::invalid_argument("unknown proxy kind: " + name);
}

Tensor normalize(const Tensor& heatmap) {
  if (heatmap.numel() == 0) throw std::invalid_argument("normalize: empty heatmap");
  for (double v : heatmap.data)
    if (!std::isfinite(v)) throw std::invalid_argument("normalize: non-finite heatmap value");
  Tensor out = heatmap;
  double mx = *std::max_element(out.data.begin(), out.data.end());
  double z = 0.0;
  for (auto& v : out.data) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : out.data) v /= z;
  return out;
}

CornerHeatmaps normalized(const CornerHeatmaps& heatmaps) {
  if (heatmaps.normalized) return heatmaps;
  CornerHeatmaps out;
  out.top_left = normalize(heatmaps.top_left);
  out.bottom_right = normalize(heatmaps.bottom_right);
  out.normalized = true;
  return out;
}

namespace {

double topk_sum(const Tensor& map, int k) {
  std::vector<double> vals = map.data;
  std::partial_sort(vals.begin(), vals.begin() + k, vals.end(), std::greater<>());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += vals[i];
  return s;
}

double corner_mean(const CornerHeatmaps& maps, const std::function<double(const Tensor&)>& f) {
  return 0.5 * (f(maps.top_left) + f(maps.bottom_right));
}

}  // namespace

ConfidenceScore confidence_score(const CornerHeatmaps& heatmaps, int k) {
  CornerHeatmaps p = normalized(heatmaps);
  int n = static_cast<int>(p.top_left.numel());
  if (k < 1 || k > n)
    throw std::invalid_argument("confidence_score: k=" + std::to_string(k) +
                                " out of range for " + std::to_string(n) + " cells");
  ConfidenceScore c;
  c.proxy_kind = ProxyKind::topk_mass;
  c.k = k;
  c.value = corner_mean(p, [k](const Tensor& m) { return topk_sum(m, k); });
  return c;
}

ConfidenceScore proxy_score(const CornerHeatmaps& heatmaps, ProxyKind kind, int k) {
  if (kind == ProxyKind::topk_mass) return confidence_score(heatmaps, k);
  CornerHeatmaps p = normalized(heatmaps);
  ConfidenceScore c;
  c.proxy_kind = kind;
  if (kind == ProxyKind::peak_value) {
    c.value = corner_mean(
        p, [](const Tensor& m) { return *std::max_element(m.data.begin(), m.data.end()); });
  } else {
    double hmax = std::log(static_cast<double>(p.top_left.numel()));
    c.value = corner_mean(p, [hmax](const Tensor& m) {
      double h = 0.0;
      for (double v : m.data)
        if (v > 0.0) h -= v * std::log(v);
      return 1.0 - h / hmax;
    });
  }
  return c;
}

}  // namespace adt
