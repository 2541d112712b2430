#pragma once

#include <cstdint>
#include <vector>

#include "adt/autograd.hpp"
#include "adt/model.hpp"
#include "adt/synth.hpp"

namespace adt {

// One supervised example: template + search crop + target box in normalized
// crop coordinates.
struct TrainPair {
  Tensor template_img;
  Tensor search_img;
  Box gt;  // normalized to the search crop
};

// Builds (template, search, box) pairs from whole sequences by cropping
// around the jittered ground-truth box of each frame.
std::vector<TrainPair> make_train_pairs(const std::vector<TrackSequence>& sequences,
                                        const ModelConfig& cfg, double search_scale,
                                        uint64_t seed);

struct TrainConfig {
  double lambda_kd = 1.0;
  double learning_rate = 1e-2;
  int batch_size = 8;
  int iterations = 200;
  std::vector<DepthConfig> depth_domain;  // legal (E, D) student set
  uint64_t seed = 0;
  bool freeze_backbone = true;
};

struct TrainRecord {
  int iteration = 0;
  DepthConfig student_depth;
  double task_loss = 0.0;
  double kd_loss = 0.0;
  double total_loss = 0.0;
};

using TrainLog = std::vector<TrainRecord>;

// L1 + generalized-overlap loss on the soft-argmax decoded box.
Var task_loss(const ForwardVars& pred, const Box& gt, const ModelConfig& cfg,
              double w_l1 = 5.0, double w_giou = 2.0);

// Mean over both corners of KL(teacher || student) on normalized heatmaps.
// The teacher maps enter as constants (no gradient).
Var kd_loss(const ForwardVars& student, const ForwardVars& teacher);

// Uniform draw from the depth domain.
DepthConfig sample_student_depth(const std::vector<DepthConfig>& omega, class Rng& rng);

// All symmetric and asymmetric legal pairs for cfg.
std::vector<DepthConfig> full_depth_domain(const ModelConfig& cfg);

// Plain task-loss training at full depth, standing in for pretrained weights.
TrainLog pretrain(Model& model, const std::vector<TrainPair>& dataset, const TrainConfig& cfg);

// Random-depth fine-tuning with teacher-student distillation: per iteration,
// sample a batch and a student depth, run the teacher at full depth without
// gradients, and minimize task + lambda * kd with SGD.
TrainLog finetune(Model& model, const std::vector<TrainPair>& dataset, const TrainConfig& cfg);

}  // namespace adt
