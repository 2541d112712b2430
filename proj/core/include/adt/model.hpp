#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "adt/autograd.hpp"
#include "adt/tensor.hpp"

namespace adt {

struct ModelConfig {
  int n_enc = 6;
  int n_dec = 6;
  int d_model = 64;
  int n_heads = 4;
  int n_queries = 1;
  int ffn_dim = 256;
  int min_enc = 1;
  int min_dec = 1;
  int template_size = 32;
  int search_size = 64;
  int patch_size = 8;
  int heatmap_h = 8;
  int heatmap_w = 8;

  int n_template_tokens() const {
    int s = template_size / patch_size;
    return s * s;
  }
  int n_search_tokens() const {
    int s = search_size / patch_size;
    return s * s;
  }
  int n_tokens() const { return n_template_tokens() + n_search_tokens(); }

  void validate() const;
};

// Last executed encoder / decoder layer indices (0-based). Layer 0 is always
// executed; (n_enc-1, n_dec-1) is full depth.
struct DepthConfig {
  int e = 0;
  int d = 0;

  bool operator==(const DepthConfig&) const = default;
};

void check_depth(const ModelConfig& cfg, const DepthConfig& depth);

// Normalized corner coordinates in [0,1].
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

struct CornerHeatmaps {
  Tensor top_left;      // (H, W)
  Tensor bottom_right;  // (H, W)
  bool normalized = false;
};

struct Prediction {
  CornerHeatmaps heatmaps;
  Box box;
  DepthConfig depth_used;
};

// Graph handles kept alive for loss construction during training.
struct ForwardVars {
  Var memory;   // (T, d) encoder output at the selected depth
  Var query;    // (n_queries, d) decoder output at the selected depth
  Var tl_prob;  // (1, H*W) spatial softmax of the top-left logits
  Var br_prob;  // (1, H*W)
};

struct AttnParams {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};
struct LnParams {
  Var gamma, beta;
};
struct FfnParams {
  Var w1, b1, w2, b2;
};
struct EncoderLayerParams {
  AttnParams attn;
  LnParams ln1, ln2;
  FfnParams ffn;
};
struct DecoderLayerParams {
  AttnParams self_attn, cross_attn;
  LnParams ln1, ln2, ln3;
  FfnParams ffn;
};
struct HeadParams {
  Var w_query;       // (d, d) query projection for similarity re-weighting
  Var w_tl, b_tl;    // (d, 1), (1)
  Var w_br, b_br;
};

// Encoder-decoder tracker with depth-selectable layers. Template and search
// patches are jointly encoded; every decoder layer cross-attends to the
// selected encoder memory; one corner-heatmap head serves all depths.
class Model {
 public:
  ModelConfig config;
  uint64_t seed = 0;

  // backbone: linear patch embedding + positional encodings
  Var patch_w, patch_b;
  Var pos_template, pos_search;
  Var query_pos;  // learned query embedding; the initial query itself is zero

  std::vector<EncoderLayerParams> enc;
  std::vector<DecoderLayerParams> dec;
  HeadParams head;

  static Model build(const ModelConfig& cfg, uint64_t seed);

  std::vector<Var> params() const;
  std::vector<Var> backbone_params() const;
  std::vector<Var> trainable_params(bool freeze_backbone) const;

  // Building blocks, exposed so a monolithic full-depth forward can be
  // composed externally without any truncation logic.
  Var embed(const Tensor& template_img, const Tensor& search_img) const;
  Var encoder_layer(int i, const Var& x) const;
  Var decoder_layer(int i, const Var& q, const Var& memory) const;
  std::pair<Var, Var> head_logits(const Var& memory, const Var& query) const;

  ForwardVars forward_vars(const Tensor& template_img, const Tensor& search_img,
                           const DepthConfig& depth) const;
  Prediction forward(const Tensor& template_img, const Tensor& search_img,
                     const DepthConfig& depth, bool track_grad = false) const;
};

// Probability-weighted soft-argmax corner decoding. Grid cell (i, j) maps to
// (j/(W-1), i/(H-1)); corners are clamped so x1<=x2 and y1<=y2.
Box decode_box(const CornerHeatmaps& heatmaps);

// Differentiable variant used by the task loss: returns (x1, y1, x2, y2)
// scalar graph nodes built from the normalized heatmap rows.
struct BoxVars {
  Var x1, y1, x2, y2;
};
BoxVars decode_box_vars(const Var& tl_prob, const Var& br_prob, int h, int w);

Prediction prediction_from_probs(const ModelConfig& cfg, const Tensor& tl_prob,
                                 const Tensor& br_prob, const DepthConfig& depth);

}  // namespace adt
