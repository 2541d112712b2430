#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "adt/rng.hpp"
#include "adt/train.hpp"
#include "fd_check.hpp"

using namespace adt;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.n_enc = 3;
  c.n_dec = 3;
  c.d_model = 16;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.template_size = 16;
  c.search_size = 32;
  c.patch_size = 8;
  c.heatmap_h = 4;
  c.heatmap_w = 4;
  return c;
}

// ForwardVars with heatmap distributions built straight from logit leaves.
ForwardVars probs_from_logits(const Var& tl_logits, const Var& br_logits) {
  ForwardVars fv;
  fv.tl_prob = softmax_last(tl_logits);
  fv.br_prob = softmax_last(br_logits);
  return fv;
}

std::vector<TrainPair> tiny_dataset(const ModelConfig& cfg, int n_sequences, uint64_t seed) {
  std::vector<TrackSequence> seqs;
  for (int i = 0; i < n_sequences; ++i) {
    SequenceSpec spec;
    spec.seed = seed + i;
    spec.n_frames = 4;
    spec.template_size = cfg.template_size;
    seqs.push_back(generate_sequence(spec));
  }
  return make_train_pairs(seqs, cfg, 3.0, seed * 7 + 1);
}

std::vector<double> flatten_params(const Model& m) {
  std::vector<double> out;
  for (const auto& p : m.params())
    out.insert(out.end(), p->value.data.begin(), p->value.data.end());
  return out;
}

}  // namespace

TEST_CASE("task_loss vanishes when the decoded box matches the target") {
  ModelConfig cfg = tiny_config();
  Var tl = constant(Tensor({1, 16}, [] {
    std::vector<double> v(16, -1e6);
    v[0] = 0.0;  // one-hot at (0,0)
    return v;
  }()));
  Var br = constant(Tensor({1, 16}, [] {
    std::vector<double> v(16, -1e6);
    v[15] = 0.0;  // one-hot at (3,3)
    return v;
  }()));
  ForwardVars fv = probs_from_logits(tl, br);
  Var loss = task_loss(fv, {0, 0, 1, 1}, cfg);
  CHECK(loss->value.data[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("task_loss is nonnegative and rejects degenerate targets") {
  ModelConfig cfg = tiny_config();
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor tl = Tensor::zeros({1, 16}), br = Tensor::zeros({1, 16});
    for (auto& v : tl.data) v = rng.uniform(-2, 2);
    for (auto& v : br.data) v = rng.uniform(-2, 2);
    ForwardVars fv = probs_from_logits(constant(tl), constant(br));
    Box gt{rng.uniform(0, 0.4), rng.uniform(0, 0.4), rng.uniform(0.5, 1), rng.uniform(0.5, 1)};
    CHECK(task_loss(fv, gt, cfg)->value.data[0] >= 0.0);
  }
  ForwardVars fv = probs_from_logits(constant(Tensor::zeros({1, 16})),
                                     constant(Tensor::zeros({1, 16})));
  CHECK_THROWS_AS(task_loss(fv, {0.5, 0.5, 0.5, 0.9}, cfg), std::invalid_argument);
}

TEST_CASE("task_loss gradient w.r.t. heatmap logits matches finite differences") {
  ModelConfig cfg = tiny_config();
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor tl = Tensor::zeros({1, 16}), br = Tensor::zeros({1, 16});
    for (auto& v : tl.data) v = rng.uniform(-1, 1);
    for (auto& v : br.data) v = rng.uniform(-1, 1);
    Var tl_leaf = leaf(tl), br_leaf = leaf(br);
    Box gt{0.1, 0.2, 0.6, 0.7};
    auto build = [&]() -> Var {
      ForwardVars fv = probs_from_logits(tl_leaf, br_leaf);
      return task_loss(fv, gt, cfg);
    };
    CHECK(adt::test::fd_max_rel_error({tl_leaf, br_leaf}, build) < 1e-3);
  }
}

TEST_CASE("kd_loss is zero at the self-distillation fixed point") {
  ModelConfig cfg = tiny_config();
  Model m = Model::build(cfg, 5);
  Rng rng(2);
  Tensor tmpl = Tensor::zeros({16, 16}), search = Tensor::zeros({32, 32});
  for (auto& v : tmpl.data) v = rng.next_double();
  for (auto& v : search.data) v = rng.next_double();
  DepthConfig full{cfg.n_enc - 1, cfg.n_dec - 1};
  ForwardVars teacher;
  {
    NoGradGuard guard;
    teacher = m.forward_vars(tmpl, search, full);
  }
  ForwardVars student = m.forward_vars(tmpl, search, full);
  CHECK(std::fabs(kd_loss(student, teacher)->value.data[0]) < 1e-12);
}

TEST_CASE("kd_loss uniform-vs-uniform is zero; one-hot-vs-uniform matches direct KL") {
  Var uniform = constant(Tensor::full({1, 64}, 1.0 / 64));
  ForwardVars u1{nullptr, nullptr, uniform, uniform};
  ForwardVars u2{nullptr, nullptr, uniform, uniform};
  CHECK(std::fabs(kd_loss(u1, u2)->value.data[0]) < 1e-12);

  // teacher one-hot clamped at 1-1e-6, student uniform on 8x8
  double big = 1.0 - 1e-6, small = 1e-6 / 63;
  Tensor t = Tensor::full({1, 64}, small);
  t.data[0] = big;
  ForwardVars teacher{nullptr, nullptr, constant(t), constant(t)};
  ForwardVars student{nullptr, nullptr, uniform, uniform};
  // oracle: direct sum p log(p/q)
  double expected = big * std::log(big / (1.0 / 64));
  for (int i = 1; i < 64; ++i) expected += small * std::log(small / (1.0 / 64));
  CHECK(kd_loss(student, teacher)->value.data[0] ==
        doctest::Approx(expected).epsilon(1e-9));
  CHECK(kd_loss(student, teacher)->value.data[0] >= 0.0);
}

TEST_CASE("sample_student_depth uniformity and determinism") {
  std::vector<DepthConfig> omega = {{1, 1}, {2, 2}, {1, 2}, {2, 1}};
  Rng rng(9);
  std::map<std::pair<int, int>, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    DepthConfig d = sample_student_depth(omega, rng);
    counts[{d.e, d.d}]++;
  }
  // 3 sigma of a binomial with p = 1/4
  double expect = n / 4.0;
  double sigma = std::sqrt(n * 0.25 * 0.75);
  for (const auto& [k, c] : counts) CHECK(std::fabs(c - expect) <= 3 * sigma);

  Rng r1(4), r2(4);
  for (int i = 0; i < 50; ++i)
    CHECK(sample_student_depth(omega, r1) == sample_student_depth(omega, r2));

  std::vector<DepthConfig> single = {{2, 2}};
  CHECK(sample_student_depth(single, rng) == DepthConfig{2, 2});
  CHECK_THROWS_AS(sample_student_depth({}, rng), std::invalid_argument);
}

TEST_CASE("finetune log satisfies the loss decomposition identity") {
  ModelConfig mc = tiny_config();
  Model m = Model::build(mc, 1);
  TrainConfig tc;
  tc.iterations = 4;
  tc.batch_size = 2;
  tc.lambda_kd = 0.7;
  tc.depth_domain = full_depth_domain(mc);
  tc.seed = 3;
  TrainLog log = finetune(m, tiny_dataset(mc, 2, 10), tc);
  REQUIRE(log.size() == 4);
  for (const auto& r : log)
    CHECK(r.total_loss ==
          doctest::Approx(r.task_loss + tc.lambda_kd * r.kd_loss).epsilon(1e-9));
}

TEST_CASE("lambda = 0 finetune equals plain random-depth training") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.lambda_kd = 0.0;
  tc.depth_domain = full_depth_domain(mc);
  tc.seed = 8;
  auto data = tiny_dataset(mc, 2, 20);

  Model a = Model::build(mc, 2);
  TrainLog la = finetune(a, data, tc);
  for (const auto& r : la) CHECK(r.total_loss == doctest::Approx(r.task_loss));
}

TEST_CASE("teacher path receives zero gradient") {
  ModelConfig mc = tiny_config();
  Model m = Model::build(mc, 4);
  Rng rng(6);
  Tensor tmpl = Tensor::zeros({16, 16}), search = Tensor::zeros({32, 32});
  for (auto& v : search.data) v = rng.next_double();
  DepthConfig full{mc.n_enc - 1, mc.n_dec - 1};
  ForwardVars teacher;
  {
    NoGradGuard guard;
    teacher = m.forward_vars(tmpl, search, full);
  }
  ForwardVars student = m.forward_vars(tmpl, search, {1, 1});
  Var loss = add(task_loss(student, {0.2, 0.2, 0.7, 0.7}, mc), kd_loss(student, teacher));
  backward(loss);
  CHECK_FALSE(teacher.tl_prob->requires_grad);
  CHECK(teacher.tl_prob->grad.empty());
  CHECK(teacher.memory->grad.empty());
  bool some_param_grad = false;
  for (const auto& p : m.params()) some_param_grad = some_param_grad || !p->grad.empty();
  CHECK(some_param_grad);
  clear_grads(m.params());
}

TEST_CASE("seeded training reproducibility is bit-exact") {
  ModelConfig mc = tiny_config();
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.depth_domain = full_depth_domain(mc);
  tc.seed = 12;
  auto data = tiny_dataset(mc, 2, 30);

  Model a = Model::build(mc, 9);
  Model b = Model::build(mc, 9);
  finetune(a, data, tc);
  finetune(b, data, tc);
  CHECK(flatten_params(a) == flatten_params(b));
}

TEST_CASE("pretrain restricted to full depth reduces to standard fine-tuning") {
  ModelConfig mc = tiny_config();
  Model m = Model::build(mc, 7);
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.seed = 5;
  TrainLog log = pretrain(m, tiny_dataset(mc, 2, 40), tc);
  REQUIRE(log.size() == 3);
  DepthConfig full{mc.n_enc - 1, mc.n_dec - 1};
  for (const auto& r : log) {
    CHECK(r.student_depth == full);
    CHECK(r.kd_loss == 0.0);
  }
}

TEST_CASE("frozen backbone parameters do not move during finetune") {
  ModelConfig mc = tiny_config();
  Model m = Model::build(mc, 3);
  std::vector<double> before;
  for (const auto& p : m.backbone_params())
    before.insert(before.end(), p->value.data.begin(), p->value.data.end());
  TrainConfig tc;
  tc.iterations = 3;
  tc.batch_size = 2;
  tc.freeze_backbone = true;
  tc.depth_domain = full_depth_domain(mc);
  finetune(m, tiny_dataset(mc, 2, 50), tc);
  std::vector<double> after;
  for (const auto& p : m.backbone_params())
    after.insert(after.end(), p->value.data.begin(), p->value.data.end());
  CHECK(before == after);
}
