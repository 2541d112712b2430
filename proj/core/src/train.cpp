#include "adt/train.hpp"

#include <cmath>
#include <stdexcept>

#include "adt/rng.hpp"

namespace adt {

std::vector<TrainPair> make_train_pairs(const std::vector<TrackSequence>& sequences,
                                        const ModelConfig& cfg, double search_scale,
                                        uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainPair> pairs;
  for (const auto& seq : sequences) {
    SearchCrop tmpl = crop_search_region(seq.frames[0], seq.gt_boxes[0], seq.spec.template_scale,
                                         cfg.template_size);
    for (size_t f = 1; f < seq.frames.size(); ++f) {
      const Box& gt = seq.gt_boxes[f];
      // jitter the crop center/size the way an imperfect previous prediction would
      double jx = rng.gaussian(0.0, 0.08 * gt.width());
      double jy = rng.gaussian(0.0, 0.08 * gt.height());
      double js = std::exp(rng.gaussian(0.0, 0.1));
      double cx = 0.5 * (gt.x1 + gt.x2) + jx, cy = 0.5 * (gt.y1 + gt.y2) + jy;
      double hw = 0.5 * gt.width() * js, hh = 0.5 * gt.height() * js;
      Box crop_box{cx - hw, cy - hh, cx + hw, cy + hh};
      SearchCrop sc = crop_search_region(seq.frames[f], crop_box, search_scale, cfg.search_size);
      TrainPair p;
      p.template_img = tmpl.image;
      p.search_img = sc.image;
      p.gt = sc.transform.to_crop(gt);
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

Var task_loss(const ForwardVars& pred, const Box& gt, const ModelConfig& cfg, double w_l1,
              double w_giou) {
  if (gt.area() <= 0.0) throw std::invalid_argument("task_loss: degenerate ground-truth box");
  BoxVars b = decode_box_vars(pred.tl_prob, pred.br_prob, cfg.heatmap_h, cfg.heatmap_w);
  auto c = [](double v) { return constant(Tensor::full({1, 1}, v)); };

  Var l1 = add(add(abs(sub(b.x1, c(gt.x1))), abs(sub(b.y1, c(gt.y1)))),
               add(abs(sub(b.x2, c(gt.x2))), abs(sub(b.y2, c(gt.y2)))));

  // generalized overlap of the predicted and ground-truth boxes
  Var zero = c(0.0);
  Var iw = maximum(sub(minimum(b.x2, c(gt.x2)), maximum(b.x1, c(gt.x1))), zero);
  Var ih = maximum(sub(minimum(b.y2, c(gt.y2)), maximum(b.y1, c(gt.y1))), zero);
  Var inter = mul(iw, ih);
  Var area_p = mul(sub(b.x2, b.x1), sub(b.y2, b.y1));
  Var uni = sub(add(area_p, c(gt.area())), inter);
  Var eps = c(1e-9);
  Var overlap = div(inter, add(uni, eps));
  // enclosing-box penalty
  Var cw = sub(maximum(b.x2, c(gt.x2)), minimum(b.x1, c(gt.x1)));
  Var ch = sub(maximum(b.y2, c(gt.y2)), minimum(b.y1, c(gt.y1)));
  Var enclose = mul(cw, ch);
  Var giou = sub(overlap, div(sub(enclose, uni), add(enclose, eps)));

  Var loss = add(scale(l1, w_l1), scale(sub(c(1.0), giou), w_giou));
  return reshape(loss, {1});
}

Var kd_loss(const ForwardVars& student, const ForwardVars& teacher) {
  auto kl = [](const Var& t_prob, const Var& s_prob) {
    // KL(p || q) = sum p log p - sum p log q, teacher p as constant
    Tensor p = t_prob->value;
    double plogp = 0.0;
    for (double v : p.data)
      if (v > 0.0) plogp += v * std::log(v);
    Var cross = sum_all(mul(constant(p), log(s_prob)));
    return add_scalar(scale(cross, -1.0), plogp);
  };
  Var total = add(kl(teacher.tl_prob, student.tl_prob), kl(teacher.br_prob, student.br_prob));
  return scale(total, 0.5);
}

DepthConfig sample_student_depth(const std::vector<DepthConfig>& omega, Rng& rng) {
  if (omega.empty()) throw std::invalid_argument("sample_student_depth: empty depth domain");
  return omega[rng.next_below(omega.size())];
}

std::vector<DepthConfig> full_depth_domain(const ModelConfig& cfg) {
  std::vector<DepthConfig> omega;
  for (int e = cfg.min_enc; e <= cfg.n_enc - 1; ++e)
    for (int d = cfg.min_dec; d <= cfg.n_dec - 1; ++d) omega.push_back({e, d});
  return omega;
}

namespace {

TrainLog run_training(Model& model, const std::vector<TrainPair>& dataset, const TrainConfig& cfg,
                      bool distill) {
  if (dataset.empty()) throw std::invalid_argument("training: empty dataset");
  const ModelConfig& mc = model.config;
  DepthConfig full{mc.n_enc - 1, mc.n_dec - 1};
  std::vector<DepthConfig> omega =
      cfg.depth_domain.empty() ? std::vector<DepthConfig>{full} : cfg.depth_domain;
  for (const auto& d : omega) check_depth(mc, d);

  std::vector<Var> params = model.trainable_params(cfg.freeze_backbone);
  Rng rng(cfg.seed);
  TrainLog log;

  for (int it = 0; it < cfg.iterations; ++it) {
    DepthConfig student_depth = sample_student_depth(omega, rng);

    std::vector<const TrainPair*> batch;
    for (int b = 0; b < cfg.batch_size; ++b)
      batch.push_back(&dataset[rng.next_below(dataset.size())]);

    Var task_sum, kd_sum;
    for (const TrainPair* p : batch) {
      ForwardVars teacher;
      if (distill) {
        NoGradGuard guard;
        teacher = model.forward_vars(p->template_img, p->search_img, full);
      }
      ForwardVars student = model.forward_vars(p->template_img, p->search_img, student_depth);
      Var lt = task_loss(student, p->gt, mc);
      task_sum = task_sum ? add(task_sum, lt) : lt;
      if (distill) {
        Var lk = kd_loss(student, teacher);
        kd_sum = kd_sum ? add(kd_sum, lk) : lk;
      }
    }
    Var task_mean = scale(task_sum, 1.0 / cfg.batch_size);
    Var total = task_mean;
    double kd_value = 0.0;
    if (distill) {
      Var kd_mean = scale(kd_sum, 1.0 / cfg.batch_size);
      kd_value = kd_mean->value.data[0];
      total = add(task_mean, scale(kd_mean, cfg.lambda_kd));
    }

    double total_value = total->value.data[0];
    if (!std::isfinite(total_value))
      throw std::runtime_error("training diverged: non-finite loss at iteration " +
                               std::to_string(it));

    backward(total);
    // Layers above the sampled truncation depth take no part in the student
    // forward pass and carry no gradient this iteration; step only the
    // parameters that do.
    std::vector<Var> touched;
    for (const auto& p : params)
      if (!p->grad.empty()) touched.push_back(p);
    sgd_step(touched, cfg.learning_rate);
    clear_grads(params);

    log.push_back({it, student_depth, task_mean->value.data[0], kd_value, total_value});
  }
  return log;
}

}  // namespace

TrainLog pretrain(Model& model, const std::vector<TrainPair>& dataset, const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.depth_domain = {{model.config.n_enc - 1, model.config.n_dec - 1}};
  return run_training(model, dataset, c, /*distill=*/false);
}

TrainLog finetune(Model& model, const std::vector<TrainPair>& dataset, const TrainConfig& cfg) {
  return run_training(model, dataset, cfg, /*distill=*/true);
}

}  // namespace adt
