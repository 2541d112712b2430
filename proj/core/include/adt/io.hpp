#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adt/metrics.hpp"
#include "adt/model.hpp"
#include "adt/policy.hpp"
#include "adt/synth.hpp"
#include "adt/train.hpp"

namespace adt {

// Versioned checkpoint: config, seed and all parameter tensors. Parameters
// are stored by name in build order; shapes are validated on load.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

std::vector<std::string> param_names(const ModelConfig& cfg);

// Dataset layout: one directory per sequence holding frames.bin (raw 64-bit
// doubles, frame-major) and manifest.json (spec, boxes, visibility), plus a
// top-level splits.json index.
void save_dataset(const std::vector<TrackSequence>& sequences,
                  const std::map<std::string, std::vector<int>>& splits,
                  const std::filesystem::path& dir);
std::vector<TrackSequence> load_split(const std::filesystem::path& dir,
                                      const std::string& split);

void save_thresholds(const PolicyThresholds& thresholds, double p_low, double p_high,
                     const std::filesystem::path& path);
PolicyThresholds load_thresholds(const std::filesystem::path& path);

void save_eval_report(const EvalReport& report, const std::string& policy_label,
                      const std::filesystem::path& json_path);
void save_eval_csv(const EvalReport& report, const std::filesystem::path& csv_path);

void save_sequence_result_csv(const SequenceResult& result, const std::filesystem::path& path);
void save_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

// Run manifest: command, config snapshot, seeds, paths, timestamp. Exactly
// one per artifact directory.
void save_manifest(const std::string& command,
                   const std::map<std::string, std::string>& entries,
                   const std::filesystem::path& dir);

}  // namespace adt
