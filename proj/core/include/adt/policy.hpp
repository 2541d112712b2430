#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adt/confidence.hpp"
#include "adt/model.hpp"
#include "adt/synth.hpp"

namespace adt {

struct PolicyThresholds {
  double tau_low = 0.0;
  double tau_high = 0.0;
  DepthConfig easy{2, 2};
  DepthConfig medium{3, 3};
  DepthConfig hard{5, 5};
};

enum class PolicyKind { threshold, random, fixed, full_depth };

std::string policy_name(PolicyKind kind);

struct PolicySpec {
  PolicyKind kind = PolicyKind::full_depth;
  DepthConfig fixed_depth{};  // fixed kind only
};

// Nearest-rank percentiles (index ceil(p*n/100) of the ascending-sorted list).
// Throws if the resulting tau_low and tau_high coincide.
std::pair<double, double> calibrate_thresholds(const std::vector<double>& confidences,
                                               double p_low = 10.0, double p_high = 85.0);

// c >= tau_high -> easy; tau_low <= c < tau_high -> medium; else hard.
DepthConfig select_depth(const ConfidenceScore& c, const PolicyThresholds& thresholds);

struct FrameRecord {
  int frame = 0;
  DepthConfig depth_used;
  double confidence = 0.0;
  double iou = 0.0;
  double flops = 0.0;
};

struct DepthUsage {
  DepthConfig depth;
  int count = 0;
};

struct SequenceResult {
  std::vector<FrameRecord> frames;
  double mean_iou = 0.0;
  double mean_flops = 0.0;
  std::vector<DepthUsage> depth_histogram;

  void finalize();  // recompute aggregates from the per-frame records
};

// Runs the tracker over one sequence under the given policy. Frame 0 always
// runs at full depth; for t >= 1 the depth comes from the confidence of
// frame t-1 (threshold), an independent uniform draw over the policy's three
// configurations (random), or a constant (fixed / full_depth).
SequenceResult run_policy(const Model& model, const TrackSequence& sequence,
                          const PolicySpec& policy,
                          const std::optional<PolicyThresholds>& thresholds, int k,
                          uint64_t seed, ProxyKind proxy = ProxyKind::topk_mass,
                          double search_scale = 3.0);

}  // namespace adt
