#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adt/synth.hpp"

namespace adt {

// Difficulty tiers for the default synthetic benchmark. Harder tiers add
// occlusion, distractors, pixel noise and faster, less predictable motion.
enum class Difficulty { easy, medium, hard, extreme };

SequenceSpec benchmark_sequence_spec(Difficulty d, uint64_t seed);

// The default benchmark: sequence specs plus named splits over them.
//   train  - fine-tuning pairs
//   val    - threshold calibration
//   test   - held-out evaluation, same difficulty mix as val
//   stress - harder mix for policy comparisons under pressure
struct BenchmarkPlan {
  std::vector<SequenceSpec> specs;
  std::map<std::string, std::vector<int>> splits;
};

BenchmarkPlan default_benchmark(uint64_t seed_data);

std::vector<TrackSequence> generate_benchmark(const BenchmarkPlan& plan);

}  // namespace adt
