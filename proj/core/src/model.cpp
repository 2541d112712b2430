#include "adt/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "adt/rng.hpp"

namespace adt {

void ModelConfig::validate() const {
  if (n_enc < 2 || n_dec < 2) throw std::invalid_argument("ModelConfig: need at least 2 layers");
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
    throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
  if (n_queries <= 0) throw std::invalid_argument("ModelConfig: n_queries must be positive");
  if (min_enc < 1 || min_enc > n_enc - 1)
    throw std::invalid_argument("ModelConfig: min_enc out of range");
  if (min_dec < 1 || min_dec > n_dec - 1)
    throw std::invalid_argument("ModelConfig: min_dec out of range");
  if (template_size % patch_size != 0 || search_size % patch_size != 0)
    throw std::invalid_argument("ModelConfig: image sizes must be multiples of patch_size");
  if (heatmap_h * heatmap_w != n_search_tokens())
    throw std::invalid_argument("ModelConfig: heatmap grid must match the search token grid");
}

void check_depth(const ModelConfig& cfg, const DepthConfig& depth) {
  if (depth.e < cfg.min_enc || depth.e > cfg.n_enc - 1 || depth.d < cfg.min_dec ||
      depth.d > cfg.n_dec - 1)
    throw std::invalid_argument("depth (" + std::to_string(depth.e) + "," +
                                std::to_string(depth.d) + ") out of bounds");
}

namespace {

Var init_matrix(Rng& rng, int rows, int cols, double stddev) {
  Tensor t = Tensor::zeros({rows, cols});
  for (auto& v : t.data) v = rng.gaussian(0.0, stddev);
  return leaf(std::move(t));
}

Var init_vector(Rng& rng, int n, double value, bool random = false, double stddev = 0.0) {
  Tensor t = Tensor::full({n}, value);
  if (random)
    for (auto& v : t.data) v = rng.gaussian(0.0, stddev);
  return leaf(std::move(t));
}

AttnParams init_attn(Rng& rng, int d, double stddev) {
  AttnParams p;
  p.wq = init_matrix(rng, d, d, stddev);
  p.bq = init_vector(rng, d, 0.0);
  p.wk = init_matrix(rng, d, d, stddev);
  p.bk = init_vector(rng, d, 0.0);
  p.wv = init_matrix(rng, d, d, stddev);
  p.bv = init_vector(rng, d, 0.0);
  p.wo = init_matrix(rng, d, d, stddev);
  p.bo = init_vector(rng, d, 0.0);
  return p;
}

LnParams init_ln(int d) {
  LnParams p;
  p.gamma = leaf(Tensor::full({d}, 1.0));
  p.beta = leaf(Tensor::full({d}, 0.0));
  return p;
}

FfnParams init_ffn(Rng& rng, int d, int ff, double stddev) {
  FfnParams p;
  p.w1 = init_matrix(rng, d, ff, stddev);
  p.b1 = init_vector(rng, ff, 0.0);
  p.w2 = init_matrix(rng, ff, d, stddev);
  p.b2 = init_vector(rng, d, 0.0);
  return p;
}

void collect_attn(const AttnParams& p, std::vector<Var>& out) {
  out.insert(out.end(), {p.wq, p.bq, p.wk, p.bk, p.wv, p.bv, p.wo, p.bo});
}
void collect_ln(const LnParams& p, std::vector<Var>& out) {
  out.insert(out.end(), {p.gamma, p.beta});
}
void collect_ffn(const FfnParams& p, std::vector<Var>& out) {
  out.insert(out.end(), {p.w1, p.b1, p.w2, p.b2});
}

// Multi-head scaled dot-product attention; q_pos added to queries/keys of the
// attending side only (DETR-style positional conditioning).
Var attention(const AttnParams& p, const Var& queries, const Var& keys_values, int n_heads) {
  int d = queries->value.cols();
  int dh = d / n_heads;
  Var q = add_bcast_row(matmul(queries, p.wq), p.bq);
  Var k = add_bcast_row(matmul(keys_values, p.wk), p.bk);
  Var v = add_bcast_row(matmul(keys_values, p.wv), p.bv);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    Var qh = slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    Var weights = softmax_last(scores);
    heads.push_back(matmul(weights, vh));
  }
  Var cat = n_heads == 1 ? heads[0] : concat_cols(heads);
  return add_bcast_row(matmul(cat, p.wo), p.bo);
}

Var ln_affine(const LnParams& p, const Var& x) {
  return add_bcast_row(mul_bcast_row(layer_norm_last(x), p.gamma), p.beta);
}

Var ffn_apply(const FfnParams& p, const Var& x) {
  return add_bcast_row(matmul(gelu(add_bcast_row(matmul(x, p.w1), p.b1)), p.w2), p.b2);
}

Tensor extract_patches(const Tensor& img, int patch) {
  int h = img.shape[0], w = img.shape[1];
  int gh = h / patch, gw = w / patch;
  Tensor out = Tensor::zeros({gh * gw, patch * patch});
  for (int gi = 0; gi < gh; ++gi)
    for (int gj = 0; gj < gw; ++gj) {
      int row = gi * gw + gj;
      for (int pi = 0; pi < patch; ++pi)
        for (int pj = 0; pj < patch; ++pj)
          out.at(row, pi * patch + pj) = img.at(gi * patch + pi, gj * patch + pj);
    }
  return out;
}

}  // namespace

Model Model::build(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.config = cfg;
  m.seed = seed;
  Rng rng(seed);
  const double stddev = 0.05;

  m.patch_w = init_matrix(rng, cfg.patch_size * cfg.patch_size, cfg.d_model, stddev);
  m.patch_b = init_vector(rng, cfg.d_model, 0.0);
  m.pos_template = init_matrix(rng, cfg.n_template_tokens(), cfg.d_model, stddev);
  m.pos_search = init_matrix(rng, cfg.n_search_tokens(), cfg.d_model, stddev);
  m.query_pos = init_matrix(rng, cfg.n_queries, cfg.d_model, stddev);

  for (int i = 0; i < cfg.n_enc; ++i) {
    EncoderLayerParams l;
    l.attn = init_attn(rng, cfg.d_model, stddev);
    l.ln1 = init_ln(cfg.d_model);
    l.ln2 = init_ln(cfg.d_model);
    l.ffn = init_ffn(rng, cfg.d_model, cfg.ffn_dim, stddev);
    m.enc.push_back(std::move(l));
  }
  for (int i = 0; i < cfg.n_dec; ++i) {
    DecoderLayerParams l;
    l.self_attn = init_attn(rng, cfg.d_model, stddev);
    l.cross_attn = init_attn(rng, cfg.d_model, stddev);
    l.ln1 = init_ln(cfg.d_model);
    l.ln2 = init_ln(cfg.d_model);
    l.ln3 = init_ln(cfg.d_model);
    l.ffn = init_ffn(rng, cfg.d_model, cfg.ffn_dim, stddev);
    m.dec.push_back(std::move(l));
  }
  m.head.w_query = init_matrix(rng, cfg.d_model, cfg.d_model, stddev);
  m.head.w_tl = init_matrix(rng, cfg.d_model, 1, stddev);
  m.head.b_tl = init_vector(rng, 1, 0.0);
  m.head.w_br = init_matrix(rng, cfg.d_model, 1, stddev);
  m.head.b_br = init_vector(rng, 1, 0.0);
  return m;
}

std::vector<Var> Model::backbone_params() const {
  return {patch_w, patch_b, pos_template, pos_search};
}

std::vector<Var> Model::params() const {
  std::vector<Var> out = backbone_params();
  out.push_back(query_pos);
  for (const auto& l : enc) {
    collect_attn(l.attn, out);
    collect_ln(l.ln1, out);
    collect_ln(l.ln2, out);
    collect_ffn(l.ffn, out);
  }
  for (const auto& l : dec) {
    collect_attn(l.self_attn, out);
    collect_attn(l.cross_attn, out);
    collect_ln(l.ln1, out);
    collect_ln(l.ln2, out);
    collect_ln(l.ln3, out);
    collect_ffn(l.ffn, out);
  }
  out.insert(out.end(), {head.w_query, head.w_tl, head.b_tl, head.w_br, head.b_br});
  return out;
}

std::vector<Var> Model::trainable_params(bool freeze_backbone) const {
  if (!freeze_backbone) return params();
  std::vector<Var> all = params();
  std::vector<Var> frozen = backbone_params();
  std::vector<Var> out;
  for (const auto& p : all) {
    bool is_frozen = false;
    for (const auto& f : frozen) is_frozen = is_frozen || (f == p);
    if (!is_frozen) out.push_back(p);
  }
  return out;
}

Var Model::embed(const Tensor& template_img, const Tensor& search_img) const {
  if (template_img.shape != std::vector<int>{config.template_size, config.template_size})
    throw std::invalid_argument("forward: template size mismatch, got " +
                                template_img.shape_str());
  if (search_img.shape != std::vector<int>{config.search_size, config.search_size})
    throw std::invalid_argument("forward: search size mismatch, got " + search_img.shape_str());
  Var tp = constant(extract_patches(template_img, config.patch_size));
  Var sp = constant(extract_patches(search_img, config.patch_size));
  Var tt = add(add_bcast_row(matmul(tp, patch_w), patch_b), pos_template);
  Var st = add(add_bcast_row(matmul(sp, patch_w), patch_b), pos_search);
  return concat_rows({tt, st});
}

Var Model::encoder_layer(int i, const Var& x) const {
  const auto& l = enc[i];
  Var y = ln_affine(l.ln1, add(x, attention(l.attn, x, x, config.n_heads)));
  return ln_affine(l.ln2, add(y, ffn_apply(l.ffn, y)));
}

Var Model::decoder_layer(int i, const Var& q, const Var& memory) const {
  const auto& l = dec[i];
  Var qp = add(q, query_pos);
  // self-attention: positional query/key, raw value
  Var sa = [&] {
    const auto& p = l.self_attn;
    int d = config.d_model, nh = config.n_heads, dh = d / nh;
    Var qq = add_bcast_row(matmul(qp, p.wq), p.bq);
    Var kk = add_bcast_row(matmul(qp, p.wk), p.bk);
    Var vv = add_bcast_row(matmul(q, p.wv), p.bv);
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> heads;
    for (int h = 0; h < nh; ++h) {
      Var qh = slice_cols(qq, h * dh, (h + 1) * dh);
      Var kh = slice_cols(kk, h * dh, (h + 1) * dh);
      Var vh = slice_cols(vv, h * dh, (h + 1) * dh);
      heads.push_back(matmul(softmax_last(scale(matmul(qh, transpose(kh)), inv_sqrt)), vh));
    }
    Var cat = nh == 1 ? heads[0] : concat_cols(heads);
    return add_bcast_row(matmul(cat, p.wo), p.bo);
  }();
  Var x = ln_affine(l.ln1, add(q, sa));
  Var ca = attention(l.cross_attn, add(x, query_pos), memory, config.n_heads);
  x = ln_affine(l.ln2, add(x, ca));
  return ln_affine(l.ln3, add(x, ffn_apply(l.ffn, x)));
}

std::pair<Var, Var> Model::head_logits(const Var& memory, const Var& query) const {
  int nt = config.n_template_tokens();
  int ns = config.n_search_tokens();
  Var search_mem = slice_rows(memory, nt, nt + ns);
  // similarity re-weighting of search tokens by the (first) decoder query
  Var q0 = slice_rows(query, 0, 1);
  Var qp = matmul(q0, head.w_query);  // (1, d)
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  Var sim = scale(matmul(qp, transpose(search_mem)), inv_sqrt);  // (1, ns)
  Var att = softmax_last(sim);
  Var modulated = add(search_mem, row_scale(search_mem, reshape(att, {ns})));
  Var tl = transpose(add_bcast_row(matmul(modulated, head.w_tl), head.b_tl));  // (1, ns)
  Var br = transpose(add_bcast_row(matmul(modulated, head.w_br), head.b_br));
  return {tl, br};
}

ForwardVars Model::forward_vars(const Tensor& template_img, const Tensor& search_img,
                                const DepthConfig& depth) const {
  check_depth(config, depth);
  ForwardVars out;
  Var x = embed(template_img, search_img);
  for (int i = 0; i <= depth.e; ++i) x = encoder_layer(i, x);
  out.memory = x;
  Var q = constant(Tensor::zeros({config.n_queries, config.d_model}));  // q_0 = 0
  for (int i = 0; i <= depth.d; ++i) q = decoder_layer(i, q, out.memory);
  out.query = q;
  auto [tl, br] = head_logits(out.memory, out.query);
  out.tl_prob = softmax_last(tl);
  out.br_prob = softmax_last(br);
  return out;
}

Prediction prediction_from_probs(const ModelConfig& cfg, const Tensor& tl_prob,
                                 const Tensor& br_prob, const DepthConfig& depth) {
  Prediction pred;
  pred.heatmaps.top_left = Tensor({cfg.heatmap_h, cfg.heatmap_w}, tl_prob.data);
  pred.heatmaps.bottom_right = Tensor({cfg.heatmap_h, cfg.heatmap_w}, br_prob.data);
  pred.heatmaps.normalized = true;
  pred.box = decode_box(pred.heatmaps);
  pred.depth_used = depth;
  return pred;
}

Prediction Model::forward(const Tensor& template_img, const Tensor& search_img,
                          const DepthConfig& depth, bool track_grad) const {
  ForwardVars fv;
  if (track_grad) {
    fv = forward_vars(template_img, search_img, depth);
  } else {
    NoGradGuard guard;
    fv = forward_vars(template_img, search_img, depth);
  }
  return prediction_from_probs(config, fv.tl_prob->value, fv.br_prob->value, depth);
}

Box decode_box(const CornerHeatmaps& heatmaps) {
  if (!heatmaps.normalized)
    throw std::invalid_argument("decode_box: heatmaps must be normalized");
  auto expect = [](const Tensor& map, double& x, double& y) {
    int h = map.shape[0], w = map.shape[1];
    double ex = 0.0, ey = 0.0;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double p = map.at(i, j);
        ex += p * (w > 1 ? static_cast<double>(j) / (w - 1) : 0.5);
        ey += p * (h > 1 ? static_cast<double>(i) / (h - 1) : 0.5);
      }
    x = ex;
    y = ey;
  };
  double xt, yt, xb, yb;
  expect(heatmaps.top_left, xt, yt);
  expect(heatmaps.bottom_right, xb, yb);
  Box b;
  b.x1 = std::min(xt, xb);
  b.x2 = std::max(xt, xb);
  b.y1 = std::min(yt, yb);
  b.y2 = std::max(yt, yb);
  return b;
}

BoxVars decode_box_vars(const Var& tl_prob, const Var& br_prob, int h, int w) {
  Tensor xs = Tensor::zeros({w * h, 1});
  Tensor ys = Tensor::zeros({w * h, 1});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      xs.data[static_cast<size_t>(i) * w + j] = w > 1 ? static_cast<double>(j) / (w - 1) : 0.5;
      ys.data[static_cast<size_t>(i) * w + j] = h > 1 ? static_cast<double>(i) / (h - 1) : 0.5;
    }
  Var cx = constant(std::move(xs));
  Var cy = constant(std::move(ys));
  Var xt = matmul(tl_prob, cx);
  Var yt = matmul(tl_prob, cy);
  Var xb = matmul(br_prob, cx);
  Var yb = matmul(br_prob, cy);
  BoxVars bv;
  bv.x1 = minimum(xt, xb);
  bv.x2 = maximum(xt, xb);
  bv.y1 = minimum(yt, yb);
  bv.y2 = maximum(yt, yb);
  return bv;
}

}  // namespace adt
