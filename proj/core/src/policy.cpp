#include "adt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "adt/flops.hpp"
#include "adt/metrics.hpp"
#include "adt/rng.hpp"

namespace adt {

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::threshold: return "threshold";
    case PolicyKind::random: return "random";
    case PolicyKind::fixed: return "fixed";
    case PolicyKind::full_depth: return "full";
  }
  return "unknown";
}

std::pair<double, double> calibrate_thresholds(const std::vector<double>& confidences,
                                               double p_low, double p_high) {
  if (confidences.empty()) throw std::invalid_argument("calibrate_thresholds: empty list");
  if (!(0.0 < p_low && p_low < p_high && p_high < 100.0))
    throw std::invalid_argument("calibrate_thresholds: need 0 < p_low < p_high < 100");
  std::vector<double> sorted = confidences;
  std::sort(sorted.begin(), sorted.end());
  auto nearest_rank = [&](double p) {
    size_t rank = static_cast<size_t>(std::ceil(p * sorted.size() / 100.0));
    rank = std::max<size_t>(rank, 1);
    return sorted[rank - 1];
  };
  double lo = nearest_rank(p_low);
  double hi = nearest_rank(p_high);
  if (!(hi > lo))
    throw std::runtime_error(
        "calibrate_thresholds: degenerate confidence distribution, percentiles coincide");
  return {lo, hi};
}

DepthConfig select_depth(const ConfidenceScore& c, const PolicyThresholds& thresholds) {
  if (c.value >= thresholds.tau_high) return thresholds.easy;
  if (c.value >= thresholds.tau_low) return thresholds.medium;
  return thresholds.hard;
}

void SequenceResult::finalize() {
  mean_iou = 0.0;
  mean_flops = 0.0;
  std::map<std::pair<int, int>, int> hist;
  for (const auto& r : frames) {
    mean_iou += r.iou;
    mean_flops += r.flops;
    hist[{r.depth_used.e, r.depth_used.d}]++;
  }
  if (!frames.empty()) {
    mean_iou /= frames.size();
    mean_flops /= frames.size();
  }
  depth_histogram.clear();
  for (const auto& [depth, count] : hist)
    depth_histogram.push_back({DepthConfig{depth.first, depth.second}, count});
}

SequenceResult run_policy(const Model& model, const TrackSequence& sequence,
                          const PolicySpec& policy,
                          const std::optional<PolicyThresholds>& thresholds, int k,
                          uint64_t seed, ProxyKind proxy, double search_scale) {
  if (policy.kind == PolicyKind::threshold && !thresholds)
    throw std::invalid_argument("run_policy: threshold policy requires calibrated thresholds");
  if (sequence.frames.empty()) throw std::invalid_argument("run_policy: empty sequence");

  const ModelConfig& cfg = model.config;
  DepthConfig full{cfg.n_enc - 1, cfg.n_dec - 1};
  DepthConfig fixed = policy.kind == PolicyKind::fixed ? policy.fixed_depth : full;
  check_depth(cfg, fixed);

  Rng rng(seed);
  const Tensor& template_img = sequence.template_img;

  SequenceResult result;
  Box prev_box = sequence.gt_boxes[0];
  double prev_conf = 0.0;
  for (size_t t = 0; t < sequence.frames.size(); ++t) {
    DepthConfig depth = full;  // frame 0 initializes at full depth
    if (t >= 1) {
      switch (policy.kind) {
        case PolicyKind::full_depth: depth = full; break;
        case PolicyKind::fixed: depth = fixed; break;
        case PolicyKind::random: {
          const DepthConfig choices[3] = {thresholds ? thresholds->easy : DepthConfig{2, 2},
                                          thresholds ? thresholds->medium : DepthConfig{3, 3},
                                          thresholds ? thresholds->hard : full};
          depth = choices[rng.next_below(3)];
          break;
        }
        case PolicyKind::threshold: {
          ConfidenceScore c{prev_conf, proxy, k};
          depth = select_depth(c, *thresholds);
          break;
        }
      }
    }

    SearchCrop crop = crop_search_region(sequence.frames[t], prev_box, search_scale,
                                         cfg.search_size);
    Prediction pred = model.forward(template_img, crop.image, depth, /*track_grad=*/false);
    Box frame_box = crop.transform.to_frame(pred.box);
    prev_conf = proxy_score(pred.heatmaps, proxy, k).value;

    FrameRecord rec;
    rec.frame = static_cast<int>(t);
    rec.depth_used = depth;
    rec.confidence = prev_conf;
    rec.iou = iou(frame_box, sequence.gt_boxes[t]);
    rec.flops = flops(cfg, depth).total;
    result.frames.push_back(rec);

    // keep the crop well-defined even when the prediction collapses
    double min_side = 4.0;
    if (frame_box.width() < min_side) {
      double c = 0.5 * (frame_box.x1 + frame_box.x2);
      frame_box.x1 = c - min_side / 2;
      frame_box.x2 = c + min_side / 2;
    }
    if (frame_box.height() < min_side) {
      double c = 0.5 * (frame_box.y1 + frame_box.y2);
      frame_box.y1 = c - min_side / 2;
      frame_box.y2 = c + min_side / 2;
    }
    prev_box = frame_box;
  }
  result.finalize();
  return result;
}

}  // namespace adt
