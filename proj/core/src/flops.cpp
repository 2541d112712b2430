#include "adt/flops.hpp"

namespace adt {

FlopsReport flops(const ModelConfig& cfg, const DepthConfig& depth) {
  check_depth(cfg, depth);
  const double t = cfg.n_tokens();
  const double ts = cfg.n_search_tokens();
  const double nq = cfg.n_queries;
  const double d = cfg.d_model;
  const double ff = cfg.ffn_dim;
  const double p2 = static_cast<double>(cfg.patch_size) * cfg.patch_size;

  FlopsReport r;
  // linear patch embedding over all tokens
  r.backbone = t * p2 * d;
  // query projection, similarity, corner linears
  r.head = d * d + ts * d + 2.0 * ts * d;
  // self-attention (qkv + out projections, scores, weighted sum) + FFN
  r.per_enc_layer = 4.0 * t * d * d + 2.0 * t * t * d + 2.0 * t * d * ff;
  // query self-attention + cross-attention to the full token memory + FFN
  r.per_dec_layer = 4.0 * nq * d * d + 2.0 * nq * nq * d   // self
                    + 2.0 * nq * d * d + 2.0 * t * d * d   // cross q/out + k/v
                    + 2.0 * nq * t * d                     // cross scores + sum
                    + 2.0 * nq * d * ff;
  r.encoder_total = r.per_enc_layer * (depth.e + 1);
  r.decoder_total = r.per_dec_layer * (depth.d + 1);
  const double macs = r.backbone + r.head + r.encoder_total + r.decoder_total;
  // report everything as FLOPs (2 per MAC)
  r.backbone *= 2.0;
  r.head *= 2.0;
  r.per_enc_layer *= 2.0;
  r.per_dec_layer *= 2.0;
  r.encoder_total *= 2.0;
  r.decoder_total *= 2.0;
  r.total = 2.0 * macs;
  return r;
}

}  // namespace adt
