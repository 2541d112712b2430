#include "adt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "adt/flops.hpp"

namespace adt {

double iou(const Box& a, const Box& b) {
  double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double mean_iou(const std::vector<std::vector<double>>& per_sequence_ious) {
  if (per_sequence_ious.empty()) throw std::invalid_argument("mean_iou: no sequences");
  double total = 0.0;
  for (const auto& seq : per_sequence_ious) {
    if (seq.empty()) throw std::invalid_argument("mean_iou: empty sequence");
    double s = 0.0;
    for (double v : seq) s += v;
    total += s / seq.size();
  }
  return total / per_sequence_ious.size();
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two equal-length lists of size >= 2");
  size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

double ece(const std::vector<double>& confidences, const std::vector<double>& qualities,
           int n_bins) {
  if (confidences.size() != qualities.size() || confidences.empty())
    throw std::invalid_argument("ece: need equal-length nonempty lists");
  if (n_bins < 1) throw std::invalid_argument("ece: n_bins must be >= 1");
  std::vector<double> conf_sum(n_bins, 0.0), qual_sum(n_bins, 0.0);
  std::vector<int> count(n_bins, 0);
  for (size_t i = 0; i < confidences.size(); ++i) {
    int b = std::min(n_bins - 1, static_cast<int>(confidences[i] * n_bins));
    b = std::max(b, 0);
    conf_sum[b] += confidences[i];
    qual_sum[b] += qualities[i];
    count[b]++;
  }
  double e = 0.0;
  for (int b = 0; b < n_bins; ++b)
    if (count[b] > 0)
      e += (static_cast<double>(count[b]) / confidences.size()) *
           std::fabs(conf_sum[b] / count[b] - qual_sum[b] / count[b]);
  return e;
}

double success_auc(const std::vector<double>& frame_ious) {
  if (frame_ious.empty()) throw std::invalid_argument("success_auc: empty input");
  double sum = 0.0;
  for (int i = 0; i <= 20; ++i) {
    double thr = i / 20.0;
    int succ = 0;
    for (double v : frame_ious)
      if (v >= thr) succ++;
    sum += static_cast<double>(succ) / frame_ious.size();
  }
  return sum / 21.0;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points,
                                         bool minimize_cost) {
  if (points.empty()) throw std::invalid_argument("pareto_frontier: empty input");
  auto better_cost = [&](double a, double b) { return minimize_cost ? a < b : a > b; };
  std::vector<ParetoPoint> out;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      bool q_ge = q.primary >= p.primary && !better_cost(p.cost, q.cost);
      bool q_strict = q.primary > p.primary || better_cost(q.cost, p.cost);
      if (q_ge && q_strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(p);
  }
  return out;
}

EvalReport evaluate(const Model& model, const std::vector<TrackSequence>& dataset,
                    const PolicySpec& policy, const std::optional<PolicyThresholds>& thresholds,
                    int k, uint64_t policy_seed, ProxyKind proxy, int jobs) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<SequenceResult> results(dataset.size());

  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      uint64_t seq_seed = policy_seed * 1000003ULL + i;
      results[i] = run_policy(model, dataset[i], policy, thresholds, k, seq_seed, proxy);
    }
  };
  if (jobs <= 1) {
    work(0, dataset.size());
  } else {
    std::vector<std::thread> pool;
    size_t per = (dataset.size() + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      size_t b = j * per, e = std::min(dataset.size(), b + per);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  EvalReport rep;
  DepthConfig full{model.config.n_enc - 1, model.config.n_dec - 1};
  rep.full_flops = flops(model.config, full).total;
  std::vector<std::vector<double>> seq_ious;
  std::map<std::pair<int, int>, int> hist;
  size_t n_frames = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::vector<double> ious;
    for (const auto& f : r.frames) {
      ious.push_back(f.iou);
      rep.frame_confidences.push_back(f.confidence);
      rep.frame_ious.push_back(f.iou);
      rep.total_flops += f.flops;
      hist[{f.depth_used.e, f.depth_used.d}]++;
      rep.frame_ao += f.iou;
      ++n_frames;
    }
    seq_ious.push_back(std::move(ious));
    rep.per_sequence.push_back({dataset[i].spec.seed, static_cast<int>(r.frames.size()),
                                r.mean_iou, r.mean_flops});
  }
  rep.mean_iou = mean_iou(seq_ious);
  rep.frame_ao /= n_frames;
  rep.auc = success_auc(rep.frame_ious);
  rep.mean_flops = rep.total_flops / n_frames;
  rep.flops_savings_pct = 100.0 * (1.0 - rep.mean_flops / rep.full_flops);
  for (const auto& [depth, count] : hist)
    rep.depth_histogram.push_back({DepthConfig{depth.first, depth.second}, count});
  return rep;
}

}  // namespace adt
