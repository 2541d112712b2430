#pragma once

#include <string>

#include "adt/model.hpp"
#include "adt/tensor.hpp"

namespace adt {

enum class ProxyKind { topk_mass, entropy, peak_value };

std::string proxy_name(ProxyKind kind);
ProxyKind proxy_from_name(const std::string& name);

struct ConfidenceScore {
  double value = 0.0;  // in [0, 1]
  ProxyKind proxy_kind = ProxyKind::topk_mass;
  int k = 0;  // topk_mass only
};

// Spatial softmax of a raw heatmap: P_ij = exp(H_ij) / sum exp(H_uv).
Tensor normalize(const Tensor& heatmap);

// Applies normalize to both maps unless already flagged normalized.
CornerHeatmaps normalized(const CornerHeatmaps& heatmaps);

// Mean over the two corners of the summed k largest probabilities.
ConfidenceScore confidence_score(const CornerHeatmaps& heatmaps, int k = 3);

// topk_mass delegates to confidence_score; peak_value is the mean per-corner
// max probability; entropy is mean per-corner 1 - H/log(HW).
ConfidenceScore proxy_score(const CornerHeatmaps& heatmaps, ProxyKind kind, int k = 3);

}  // namespace adt
