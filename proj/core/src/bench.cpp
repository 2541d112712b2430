#include "adt/bench.hpp"

#include "adt/rng.hpp"

namespace adt {

SequenceSpec benchmark_sequence_spec(Difficulty d, uint64_t seed) {
  SequenceSpec s;
  s.seed = seed;
  s.n_frames = 16;
  s.image_size = 96;
  s.template_size = 32;
  switch (d) {
    case Difficulty::easy:
      s.motion = MotionModel::linear;
      s.speed = 2.0;
      s.occlusion_prob = 0.0;
      s.distractor_count = 0;
      s.noise_sigma = 0.005;
      break;
    case Difficulty::medium:
      s.motion = MotionModel::random_walk;
      s.speed = 2.5;
      s.occlusion_prob = 0.2;
      s.occlusion_cover = 0.6;
      s.distractor_count = 1;
      s.noise_sigma = 0.015;
      break;
    case Difficulty::hard:
      s.motion = MotionModel::random_walk;
      s.speed = 3.5;
      s.occlusion_prob = 0.5;
      s.occlusion_cover = 0.7;
      s.distractor_count = 2;
      s.noise_sigma = 0.03;
      break;
    case Difficulty::extreme:
      s.motion = MotionModel::random_walk;
      s.speed = 5.0;
      s.occlusion_prob = 0.7;
      s.occlusion_cover = 0.85;
      s.occlusion_span = 6;
      s.distractor_count = 3;
      s.noise_sigma = 0.05;
      break;
  }
  return s;
}

namespace {

void add_split(BenchmarkPlan& plan, Rng& rng, const std::string& name, int n_easy, int n_medium,
               int n_hard, int n_extreme = 0) {
  std::vector<int> ids;
  auto push = [&](Difficulty d, int count) {
    for (int i = 0; i < count; ++i) {
      ids.push_back(static_cast<int>(plan.specs.size()));
      plan.specs.push_back(benchmark_sequence_spec(d, rng.next_u64()));
    }
  };
  push(Difficulty::easy, n_easy);
  push(Difficulty::medium, n_medium);
  push(Difficulty::hard, n_hard);
  push(Difficulty::extreme, n_extreme);
  plan.splits[name] = ids;
}

}  // namespace

BenchmarkPlan default_benchmark(uint64_t seed_data) {
  BenchmarkPlan plan;
  // each split gets its own stream so its contents do not depend on the
  // other splits' sizes
  Rng root(seed_data);
  Rng r_train = root.fork(1), r_val = root.fork(2), r_test = root.fork(3),
      r_stress = root.fork(4);
  add_split(plan, r_train, "train", 14, 14, 8);
  add_split(plan, r_val, "val", 18, 22, 8);
  add_split(plan, r_test, "test", 18, 22, 8);
  add_split(plan, r_stress, "stress", 0, 116, 12, 64);
  return plan;
}

std::vector<TrackSequence> generate_benchmark(const BenchmarkPlan& plan) {
  std::vector<TrackSequence> out;
  out.reserve(plan.specs.size());
  for (const auto& spec : plan.specs) out.push_back(generate_sequence(spec));
  return out;
}

}  // namespace adt
