#pragma once

#include "adt/model.hpp"

namespace adt {

// Analytic cost model. Counts matrix-multiply multiply-accumulates, reported
// as FLOPs = 2 * MACs. Total is an affine function of the executed layer
// counts: constant (backbone + head) + per-layer terms * (E+1) and (D+1).
struct FlopsReport {
  double backbone = 0;
  double head = 0;
  double per_enc_layer = 0;
  double per_dec_layer = 0;
  double encoder_total = 0;  // per_enc_layer * (E+1)
  double decoder_total = 0;  // per_dec_layer * (D+1)
  double total = 0;

  double constant() const { return backbone + head; }
};

FlopsReport flops(const ModelConfig& cfg, const DepthConfig& depth);

}  // namespace adt
