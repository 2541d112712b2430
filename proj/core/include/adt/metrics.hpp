#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adt/model.hpp"
#include "adt/policy.hpp"

namespace adt {

// Intersection-over-union of axis-aligned boxes; 0 for disjoint boxes.
// Units only need to be consistent between the two boxes.
double iou(const Box& a, const Box& b);

// Two-level average: per-frame IoU averaged within each sequence, then
// across sequences (equal sequence weighting).
double mean_iou(const std::vector<std::vector<double>>& per_sequence_ious);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Equal-width bins over [0,1]; quality is the per-frame IoU, so this is
// regression-style calibration error.
double ece(const std::vector<double>& confidences, const std::vector<double>& qualities,
           int n_bins = 10);

// 21-point success-rate AUC over IoU thresholds 0, 0.05, ..., 1.
double success_auc(const std::vector<double>& frame_ious);

struct ParetoPoint {
  double primary = 0.0;  // maximized (correlation, IoU, ...)
  double cost = 0.0;     // optimized per `minimize_cost`
  int tag = 0;           // caller-owned identifier

  bool operator==(const ParetoPoint&) const = default;
};

// Non-dominated subset; primary is always maximized, cost direction is a
// parameter (minimize ECE, maximize savings).
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points,
                                         bool minimize_cost = true);

struct SequenceRow {
  uint64_t seed = 0;
  int n_frames = 0;
  double mean_iou = 0.0;
  double mean_flops = 0.0;
};

struct EvalReport {
  double mean_iou = 0.0;   // sequence-averaged
  double frame_ao = 0.0;   // frame-pooled average overlap
  double auc = 0.0;
  double mean_flops = 0.0;
  double total_flops = 0.0;
  double full_flops = 0.0;
  double flops_savings_pct = 0.0;  // 100 * (1 - mean_flops / full_flops)
  std::vector<DepthUsage> depth_histogram;
  std::vector<SequenceRow> per_sequence;
  std::vector<double> frame_confidences;  // flattened, frame order within sequence order
  std::vector<double> frame_ious;
};

// Aggregates run_policy over all sequences. Per-sequence policy seeds are
// derived from `policy_seed` and the sequence index, so results do not depend
// on evaluation order or worker count.
EvalReport evaluate(const Model& model, const std::vector<TrackSequence>& dataset,
                    const PolicySpec& policy, const std::optional<PolicyThresholds>& thresholds,
                    int k, uint64_t policy_seed, ProxyKind proxy = ProxyKind::topk_mass,
                    int jobs = 1);

}  // namespace adt
