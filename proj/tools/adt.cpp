// adt: synthetic tracking benchmark harness for the depth-adaptive tracker.
//
// Subcommands: gen-data, pretrain, finetune, calibrate, eval, ablate, report.
// All randomness flows from three seeds (--seed-data, --seed-model,
// --seed-policy). Outputs land under --out, defaulting to $ADT_OUT_ROOT or
// ./runs, one manifest per artifact directory.
//
// Exit codes: 0 success, 2 usage error, 3 configuration error (bad values or
// missing referenced files), 4 runtime failure.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adt/bench.hpp"
#include "adt/flops.hpp"
#include "adt/io.hpp"
#include "adt/metrics.hpp"
#include "adt/model.hpp"
#include "adt/policy.hpp"
#include "adt/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path out_root() {
  if (const char* env = std::getenv("ADT_OUT_ROOT")) return fs::path(env);
  return fs::path("runs");
}

adt::PolicySpec parse_policy(const std::string& s) {
  if (s == "full") return {adt::PolicyKind::full_depth, {}};
  if (s == "random") return {adt::PolicyKind::random, {}};
  if (s == "threshold") return {adt::PolicyKind::threshold, {}};
  if (s.rfind("fixed:", 0) == 0) {
    int e = 0, d = 0;
    char comma = 0;
    std::istringstream in(s.substr(6));
    if (!(in >> e >> comma >> d) || comma != ',')
      throw std::invalid_argument("--policy: expected fixed:E,D, got '" + s + "'");
    return {adt::PolicyKind::fixed, adt::DepthConfig{e, d}};
  }
  throw std::invalid_argument("--policy: unknown value '" + s +
                              "' (expected full, fixed:E,D, random, threshold)");
}

std::string policy_dir_name(const std::string& s) {
  std::string n = s;
  for (char& c : n)
    if (c == ':' || c == ',') c = '-';
  return n;
}

std::vector<adt::TrackSequence> load_split_checked(const fs::path& data, const std::string& split) {
  if (!fs::exists(data / "splits.json"))
    throw std::invalid_argument("--data: no dataset at " + data.string() +
                                " (run gen-data first)");
  return adt::load_split(data, split);
}

adt::Model load_checkpoint_checked(const fs::path& path, const char* flag) {
  if (!fs::exists(path))
    throw std::invalid_argument(std::string(flag) + ": no checkpoint at " + path.string());
  return adt::load_checkpoint(path);
}

adt::PolicyThresholds load_thresholds_checked(const fs::path& path) {
  if (!fs::exists(path))
    throw std::invalid_argument("--thresholds: no thresholds file at " + path.string() +
                                " (run calibrate first)");
  return adt::load_thresholds(path);
}

std::map<std::string, std::string> base_manifest(const std::string& dataset,
                                                 const std::string& checkpoint) {
  std::map<std::string, std::string> m;
  m["version"] = "1.0.0";
  if (!dataset.empty()) m["input_dataset"] = dataset;
  if (!checkpoint.empty()) m["input_checkpoint"] = checkpoint;
  return m;
}

struct EvalRunResult {
  adt::EvalReport report;
  double latency_ms_per_frame = 0.0;
};

EvalRunResult timed_evaluate(const adt::Model& model,
                             const std::vector<adt::TrackSequence>& seqs,
                             const adt::PolicySpec& policy,
                             const std::optional<adt::PolicyThresholds>& thresholds, int k,
                             uint64_t seed_policy, adt::ProxyKind proxy, int jobs) {
  auto t0 = std::chrono::steady_clock::now();
  EvalRunResult r;
  r.report = adt::evaluate(model, seqs, policy, thresholds, k, seed_policy, proxy, jobs);
  auto t1 = std::chrono::steady_clock::now();
  double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  size_t frames = r.report.frame_ious.size();
  r.latency_ms_per_frame = frames ? ms / frames : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// ablate grids
// ---------------------------------------------------------------------------

void write_table(const fs::path& dir, const std::string& header,
                 const std::vector<std::string>& rows, const json& combined) {
  fs::create_directories(dir);
  std::string csv = header + "\n";
  for (const auto& r : rows) csv += r + "\n";
  std::ofstream(dir / "table.csv") << csv;
  std::ofstream(dir / "table.json") << combined.dump(2) << "\n";
}

json report_row(const adt::EvalReport& r) {
  json j;
  j["mean_iou"] = r.mean_iou;
  j["frame_ao"] = r.frame_ao;
  j["auc"] = r.auc;
  j["mean_flops"] = r.mean_flops;
  j["flops_savings_pct"] = r.flops_savings_pct;
  return j;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void ablate_depth_sweep(const adt::Model& model, const std::vector<adt::TrackSequence>& seqs,
                        int k, uint64_t seed_policy, int jobs, const fs::path& dir) {
  const adt::ModelConfig& cfg = model.config;
  std::vector<std::string> rows;
  json combined = json::array();
  for (int e = 1; e < cfg.n_enc; ++e) {
    adt::PolicySpec p{adt::PolicyKind::fixed, adt::DepthConfig{e, e}};
    adt::EvalReport r = adt::evaluate(model, seqs, p, std::nullopt, k, seed_policy,
                                      adt::ProxyKind::topk_mass, jobs);
    rows.push_back(std::to_string(e) + "," + std::to_string(e) + "," + fmt(r.mean_iou) + "," +
                   fmt(r.frame_ao) + "," + fmt(r.mean_flops));
    json j = report_row(r);
    j["e"] = e;
    j["d"] = e;
    combined.push_back(j);
  }
  write_table(dir, "E,D,mean_iou,frame_ao,mean_flops", rows, combined);
}

void ablate_policy(const adt::Model& model, const std::vector<adt::TrackSequence>& seqs,
                   const adt::PolicyThresholds& thr, int k, uint64_t seed_policy, int jobs,
                   const fs::path& dir) {
  std::vector<std::pair<std::string, adt::PolicySpec>> grid = {
      {"full", {adt::PolicyKind::full_depth, {}}},
      {"fixed:3,3", {adt::PolicyKind::fixed, adt::DepthConfig{3, 3}}},
      {"random", {adt::PolicyKind::random, {}}},
      {"threshold", {adt::PolicyKind::threshold, {}}},
  };
  std::vector<std::string> rows;
  json combined = json::array();
  for (const auto& [label, spec] : grid) {
    adt::EvalReport r =
        adt::evaluate(model, seqs, spec, thr, k, seed_policy, adt::ProxyKind::topk_mass, jobs);
    rows.push_back(label + "," + fmt(r.mean_iou) + "," + fmt(r.frame_ao) + "," + fmt(r.auc) +
                   "," + fmt(r.mean_flops) + "," + fmt(r.flops_savings_pct));
    json j = report_row(r);
    j["policy"] = label;
    combined.push_back(j);
  }
  write_table(dir, "policy,mean_iou,frame_ao,auc,mean_flops,flops_savings_pct", rows, combined);
}

void ablate_random_vs_threshold(const adt::Model& model,
                                const std::vector<adt::TrackSequence>& seqs,
                                const adt::PolicyThresholds& thr, int k, uint64_t seed_policy,
                                int jobs, const fs::path& dir) {
  std::vector<std::string> rows;
  json combined = json::array();
  for (uint64_t s = 0; s < 5; ++s) {
    for (adt::PolicyKind kind : {adt::PolicyKind::threshold, adt::PolicyKind::random}) {
      adt::EvalReport r = adt::evaluate(model, seqs, {kind, {}}, thr, k, seed_policy + s,
                                        adt::ProxyKind::topk_mass, jobs);
      rows.push_back(std::to_string(seed_policy + s) + "," + adt::policy_name(kind) + "," +
                     fmt(r.mean_iou) + "," + fmt(r.mean_flops));
      json j = report_row(r);
      j["seed"] = seed_policy + s;
      j["policy"] = adt::policy_name(kind);
      combined.push_back(j);
    }
  }
  write_table(dir, "seed,policy,mean_iou,mean_flops", rows, combined);
}

void ablate_proxy_sweep(const adt::Model& model, const std::vector<adt::TrackSequence>& calib,
                        const std::vector<adt::TrackSequence>& seqs, int k, double p_low,
                        double p_high, uint64_t seed_policy, int jobs, const fs::path& dir) {
  std::vector<std::string> rows;
  json combined = json::array();
  std::vector<adt::ParetoPoint> points;
  std::vector<adt::ProxyKind> kinds = {adt::ProxyKind::topk_mass, adt::ProxyKind::entropy,
                                       adt::ProxyKind::peak_value};
  std::vector<json> entries;
  for (size_t i = 0; i < kinds.size(); ++i) {
    adt::ProxyKind proxy = kinds[i];
    // each proxy lives on its own scale, so thresholds are re-calibrated on
    // the calibration split per proxy
    adt::EvalReport cal = adt::evaluate(model, calib, {adt::PolicyKind::full_depth, {}},
                                        std::nullopt, k, seed_policy, proxy, jobs);
    auto [lo, hi] = adt::calibrate_thresholds(cal.frame_confidences, p_low, p_high);
    adt::PolicyThresholds thr;
    thr.tau_low = lo;
    thr.tau_high = hi;
    adt::EvalReport r = adt::evaluate(model, seqs, {adt::PolicyKind::threshold, {}}, thr, k,
                                      seed_policy, proxy, jobs);
    double corr = adt::pearson(r.frame_confidences, r.frame_ious);
    double cal_err = adt::ece(r.frame_confidences, r.frame_ious, 10);
    json j = report_row(r);
    j["proxy"] = adt::proxy_name(proxy);
    j["pearson"] = corr;
    j["ece_10bin"] = cal_err;
    entries.push_back(j);
    points.push_back({corr, cal_err, static_cast<int>(i)});
  }
  auto frontier = adt::pareto_frontier(points, true);
  for (size_t i = 0; i < kinds.size(); ++i) {
    bool on_front = std::any_of(frontier.begin(), frontier.end(),
                                [&](const adt::ParetoPoint& p) { return p.tag == (int)i; });
    entries[i]["pareto"] = on_front;
    rows.push_back(std::string(adt::proxy_name(kinds[i])) + "," +
                   fmt(entries[i]["pearson"].get<double>()) + "," +
                   fmt(entries[i]["ece_10bin"].get<double>()) + "," +
                   fmt(entries[i]["mean_iou"].get<double>()) + "," +
                   fmt(entries[i]["mean_flops"].get<double>()) + "," +
                   (on_front ? "1" : "0"));
    combined.push_back(entries[i]);
  }
  write_table(dir, "proxy,pearson,ece_10bin,mean_iou,mean_flops,pareto", rows, combined);
}

void ablate_rd_kd(const adt::Model& tuned, const adt::Model& baseline,
                  const std::vector<adt::TrackSequence>& seqs, int k, uint64_t seed_policy,
                  int jobs, const fs::path& dir) {
  const adt::ModelConfig& cfg = tuned.config;
  std::vector<std::string> rows;
  json combined = json::array();
  for (int e = 1; e < cfg.n_enc; ++e) {
    adt::PolicySpec p{adt::PolicyKind::fixed, adt::DepthConfig{e, e}};
    adt::EvalReport rt = adt::evaluate(tuned, seqs, p, std::nullopt, k, seed_policy,
                                       adt::ProxyKind::topk_mass, jobs);
    adt::EvalReport rb = adt::evaluate(baseline, seqs, p, std::nullopt, k, seed_policy,
                                       adt::ProxyKind::topk_mass, jobs);
    rows.push_back(std::to_string(e) + "," + std::to_string(e) + "," + fmt(rb.mean_iou) + "," +
                   fmt(rt.mean_iou) + "," + fmt(rt.mean_iou - rb.mean_iou));
    json j;
    j["e"] = e;
    j["d"] = e;
    j["baseline_mean_iou"] = rb.mean_iou;
    j["finetuned_mean_iou"] = rt.mean_iou;
    combined.push_back(j);
  }
  write_table(dir, "E,D,baseline_mean_iou,finetuned_mean_iou,delta", rows, combined);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-adaptive tracker harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key-value config file; flags override file values");

  // shared option storage; each subcommand registers the flags it uses
  uint64_t seed_data = 1, seed_model = 2, seed_policy = 3;
  int k = 3, jobs = 1, iterations = 200, batch_size = 8;
  double p_low = 10.0, p_high = 85.0, lr = 1e-2, lambda_kd = 1.0;
  std::string out, data_dir, checkpoint, baseline_ckpt, thresholds_path, split, policy_str = "full",
                                                                                proxy_str =
                                                                                    "topk_mass",
                                                                                grid, report_in;

  auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "artifact directory"); };
  auto add_data = [&](CLI::App* c) {
    c->add_option("--data", data_dir, "dataset directory (from gen-data)");
  };
  auto add_jobs = [&](CLI::App* c) {
    c->add_option("--jobs", jobs, "worker threads for evaluation")->check(CLI::PositiveNumber);
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic benchmark dataset");
  gen->add_option("--seed-data", seed_data, "dataset seed");
  add_out(gen);

  CLI::App* pre = app.add_subcommand("pretrain", "task-only training at full depth");
  add_data(pre);
  pre->add_option("--seed-data", seed_data, "dataset seed (crop jitter)");
  pre->add_option("--seed-model", seed_model, "model init / batch-sampling seed");
  pre->add_option("--iterations", iterations, "SGD iterations")->check(CLI::PositiveNumber);
  pre->add_option("--batch-size", batch_size, "batch size")->check(CLI::PositiveNumber);
  pre->add_option("--lr", lr, "learning rate");
  add_out(pre);

  CLI::App* fin = app.add_subcommand("finetune", "random-depth fine-tuning with distillation");
  add_data(fin);
  fin->add_option("--init", checkpoint, "checkpoint to start from");
  fin->add_option("--seed-data", seed_data, "dataset seed (crop jitter)");
  fin->add_option("--seed-model", seed_model, "depth/batch sampling seed");
  fin->add_option("--iterations", iterations, "SGD iterations")->check(CLI::PositiveNumber);
  fin->add_option("--batch-size", batch_size, "batch size")->check(CLI::PositiveNumber);
  fin->add_option("--lr", lr, "learning rate");
  fin->add_option("--lambda-kd", lambda_kd, "distillation weight");
  add_out(fin);

  CLI::App* cal = app.add_subcommand("calibrate", "percentile thresholds from a split");
  add_data(cal);
  cal->add_option("--checkpoint", checkpoint, "model checkpoint");
  cal->add_option("--split", split, "calibration split (default val)");
  cal->add_option("--k", k, "top-k mass k")->check(CLI::PositiveNumber);
  cal->add_option("--p-low", p_low, "low percentile");
  cal->add_option("--p-high", p_high, "high percentile");
  cal->add_option("--seed-policy", seed_policy, "policy seed");
  add_jobs(cal);
  add_out(cal);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a policy on a split");
  add_data(ev);
  ev->add_option("--checkpoint", checkpoint, "model checkpoint");
  ev->add_option("--split", split, "evaluation split (default test)");
  ev->add_option("--policy", policy_str, "full, fixed:E,D, random, threshold");
  ev->add_option("--thresholds", thresholds_path, "thresholds JSON (threshold/random policy)");
  ev->add_option("--k", k, "top-k mass k")->check(CLI::PositiveNumber);
  ev->add_option("--proxy", proxy_str, "confidence proxy: topk_mass, entropy, peak_value");
  ev->add_option("--seed-policy", seed_policy, "policy seed");
  add_jobs(ev);
  add_out(ev);

  CLI::App* ab = app.add_subcommand("ablate", "run a comparison grid");
  ab->add_option("--grid", grid,
                 "depth-sweep, policy, random-vs-threshold, proxy-sweep, rd-kd")
      ->required();
  add_data(ab);
  ab->add_option("--checkpoint", checkpoint, "model checkpoint");
  ab->add_option("--baseline", baseline_ckpt, "pre-finetune checkpoint (rd-kd grid)");
  ab->add_option("--thresholds", thresholds_path, "thresholds JSON");
  ab->add_option("--split", split, "evaluation split");
  ab->add_option("--k", k, "top-k mass k")->check(CLI::PositiveNumber);
  ab->add_option("--p-low", p_low, "low percentile (proxy-sweep)");
  ab->add_option("--p-high", p_high, "high percentile (proxy-sweep)");
  ab->add_option("--seed-policy", seed_policy, "policy seed");
  add_jobs(ab);
  add_out(ab);

  CLI::App* rep = app.add_subcommand("report", "summarize eval reports under a directory");
  rep->add_option("--in", report_in, "directory to scan for report.json files");
  add_out(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const fs::path root = out_root();
  if (data_dir.empty()) data_dir = (root / "dataset").string();

  try {
    if (*gen) {
      fs::path dir = out.empty() ? root / "dataset" : fs::path(out);
      adt::BenchmarkPlan plan = adt::default_benchmark(seed_data);
      std::vector<adt::TrackSequence> seqs = adt::generate_benchmark(plan);
      adt::save_dataset(seqs, plan.splits, dir);
      auto m = base_manifest("", "");
      m["seed_data"] = std::to_string(seed_data);
      m["n_sequences"] = std::to_string(seqs.size());
      for (const auto& [name, ids] : plan.splits)
        m["split_" + name] = std::to_string(ids.size());
      adt::save_manifest("gen-data", m, dir);
      std::cout << "dataset: " << seqs.size() << " sequences -> " << dir.string() << "\n";
    } else if (*pre || *fin) {
      bool is_pre = static_cast<bool>(*pre);
      fs::path dir = out.empty() ? root / (is_pre ? "pretrain" : "finetune") : fs::path(out);
      std::vector<adt::TrackSequence> seqs = load_split_checked(data_dir, "train");
      adt::ModelConfig cfg;
      adt::Model model =
          is_pre ? adt::Model::build(cfg, seed_model)
                 : load_checkpoint_checked(
                       checkpoint.empty() ? root / "pretrain" / "checkpoint.json" : fs::path(checkpoint),
                       "--init");
      cfg = model.config;
      std::vector<adt::TrainPair> pairs = adt::make_train_pairs(seqs, cfg, 3.0, seed_data);
      adt::TrainConfig tc;
      tc.iterations = iterations;
      tc.batch_size = batch_size;
      tc.learning_rate = lr;
      tc.lambda_kd = lambda_kd;
      tc.seed = seed_model;
      tc.depth_domain = adt::full_depth_domain(cfg);
      adt::TrainLog log = is_pre ? adt::pretrain(model, pairs, tc) : adt::finetune(model, pairs, tc);
      fs::create_directories(dir);
      adt::save_checkpoint(model, dir / "checkpoint.json");
      adt::save_train_log_csv(log, dir / "train_log.csv");
      auto m = base_manifest(data_dir, is_pre ? "" : checkpoint);
      m["seed_data"] = std::to_string(seed_data);
      m["seed_model"] = std::to_string(seed_model);
      m["iterations"] = std::to_string(iterations);
      m["batch_size"] = std::to_string(batch_size);
      m["learning_rate"] = fmt(lr);
      if (!is_pre) m["lambda_kd"] = fmt(lambda_kd);
      m["final_loss"] = fmt(log.empty() ? 0.0 : log.back().total_loss);
      adt::save_manifest(is_pre ? "pretrain" : "finetune", m, dir);
      std::cout << (is_pre ? "pretrain" : "finetune") << ": " << log.size()
                << " iterations, final loss "
                << (log.empty() ? 0.0 : log.back().total_loss) << " -> " << dir.string() << "\n";
    } else if (*cal) {
      fs::path dir = out.empty() ? root / "calibrate" : fs::path(out);
      if (split.empty()) split = "val";
      if (checkpoint.empty()) checkpoint = (root / "finetune" / "checkpoint.json").string();
      adt::Model model = load_checkpoint_checked(checkpoint, "--checkpoint");
      std::vector<adt::TrackSequence> seqs = load_split_checked(data_dir, split);
      adt::EvalReport r = adt::evaluate(model, seqs, {adt::PolicyKind::full_depth, {}},
                                        std::nullopt, k, seed_policy,
                                        adt::ProxyKind::topk_mass, jobs);
      auto [lo, hi] = adt::calibrate_thresholds(r.frame_confidences, p_low, p_high);
      adt::PolicyThresholds thr;
      thr.tau_low = lo;
      thr.tau_high = hi;
      fs::create_directories(dir);
      adt::save_thresholds(thr, p_low, p_high, dir / "thresholds.json");
      auto m = base_manifest(data_dir, checkpoint);
      m["split"] = split;
      m["k"] = std::to_string(k);
      m["p_low"] = fmt(p_low);
      m["p_high"] = fmt(p_high);
      m["seed_policy"] = std::to_string(seed_policy);
      m["tau_low"] = fmt(lo);
      m["tau_high"] = fmt(hi);
      adt::save_manifest("calibrate", m, dir);
      std::cout << "calibrate: tau_low " << lo << ", tau_high " << hi << " -> " << dir.string()
                << "\n";
    } else if (*ev) {
      if (split.empty()) split = "test";
      if (checkpoint.empty()) checkpoint = (root / "finetune" / "checkpoint.json").string();
      fs::path dir = out.empty() ? root / ("eval-" + policy_dir_name(policy_str) + "-" + split)
                                 : fs::path(out);
      adt::PolicySpec spec = parse_policy(policy_str);
      adt::ProxyKind proxy = adt::proxy_from_name(proxy_str);
      std::optional<adt::PolicyThresholds> thr;
      if (spec.kind == adt::PolicyKind::threshold || spec.kind == adt::PolicyKind::random)
        thr = load_thresholds_checked(
            thresholds_path.empty() ? root / "calibrate" / "thresholds.json" : fs::path(thresholds_path));
      adt::Model model = load_checkpoint_checked(checkpoint, "--checkpoint");
      std::vector<adt::TrackSequence> seqs = load_split_checked(data_dir, split);
      EvalRunResult res = timed_evaluate(model, seqs, spec, thr, k, seed_policy, proxy, jobs);
      fs::create_directories(dir);
      adt::save_eval_report(res.report, policy_str, dir / "report.json");
      adt::save_eval_csv(res.report, dir / "report.csv");
      auto m = base_manifest(data_dir, checkpoint);
      m["split"] = split;
      m["policy"] = policy_str;
      m["proxy"] = proxy_str;
      m["k"] = std::to_string(k);
      m["seed_policy"] = std::to_string(seed_policy);
      m["jobs"] = std::to_string(jobs);
      m["latency_ms_per_frame"] = fmt(res.latency_ms_per_frame);
      adt::save_manifest("eval", m, dir);
      std::cout << "eval " << policy_str << " on " << split << ": mean IoU "
                << res.report.mean_iou << ", FLOPs savings " << res.report.flops_savings_pct
                << "% -> " << dir.string() << "\n";
    } else if (*ab) {
      fs::path dir = out.empty() ? root / ("ablate-" + grid) : fs::path(out);
      if (checkpoint.empty()) checkpoint = (root / "finetune" / "checkpoint.json").string();
      adt::Model model = load_checkpoint_checked(checkpoint, "--checkpoint");
      if (grid == "depth-sweep") {
        if (split.empty()) split = "test";
        ablate_depth_sweep(model, load_split_checked(data_dir, split), k, seed_policy, jobs, dir);
      } else if (grid == "policy") {
        if (split.empty()) split = "test";
        adt::PolicyThresholds thr = load_thresholds_checked(
            thresholds_path.empty() ? root / "calibrate" / "thresholds.json" : fs::path(thresholds_path));
        ablate_policy(model, load_split_checked(data_dir, split), thr, k, seed_policy, jobs, dir);
      } else if (grid == "random-vs-threshold") {
        if (split.empty()) split = "stress";
        adt::PolicyThresholds thr = load_thresholds_checked(
            thresholds_path.empty() ? root / "calibrate" / "thresholds.json" : fs::path(thresholds_path));
        ablate_random_vs_threshold(model, load_split_checked(data_dir, split), thr, k,
                                   seed_policy, jobs, dir);
      } else if (grid == "proxy-sweep") {
        if (split.empty()) split = "test";
        ablate_proxy_sweep(model, load_split_checked(data_dir, "val"),
                           load_split_checked(data_dir, split), k, p_low, p_high, seed_policy,
                           jobs, dir);
      } else if (grid == "rd-kd") {
        if (split.empty()) split = "test";
        if (baseline_ckpt.empty())
          baseline_ckpt = (root / "pretrain" / "checkpoint.json").string();
        adt::Model base = load_checkpoint_checked(baseline_ckpt, "--baseline");
        ablate_rd_kd(model, base, load_split_checked(data_dir, split), k, seed_policy, jobs, dir);
      } else {
        throw std::invalid_argument("--grid: unknown grid '" + grid + "'");
      }
      auto m = base_manifest(data_dir, checkpoint);
      m["grid"] = grid;
      m["split"] = split;
      m["seed_policy"] = std::to_string(seed_policy);
      adt::save_manifest("ablate", m, dir);
      std::cout << "ablate " << grid << " -> " << dir.string() << "\n";
    } else if (*rep) {
      fs::path in = report_in.empty() ? root : fs::path(report_in);
      fs::path dir = out.empty() ? root / "report" : fs::path(out);
      if (!fs::exists(in))
        throw std::invalid_argument("--in: directory does not exist: " + in.string());
      std::vector<std::pair<std::string, json>> reports;
      for (const auto& entry : fs::recursive_directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().filename() == "report.json") {
          std::ifstream f(entry.path());
          json j;
          f >> j;
          reports.emplace_back(fs::relative(entry.path(), in).string(), j);
        }
      }
      std::sort(reports.begin(), reports.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::string csv =
          "source,policy,mean_iou,frame_ao,auc,mean_flops,flops_savings_pct,"
          "confidence_iou_pearson,ece_10bin\n";
      std::vector<adt::ParetoPoint> points;
      for (size_t i = 0; i < reports.size(); ++i) {
        const json& j = reports[i].second;
        auto num = [&](const char* key) {
          return j.contains(key) && j[key].is_number() ? fmt(j[key].get<double>()) : "";
        };
        csv += reports[i].first + "," + j.value("policy", "") + "," + num("mean_iou") + "," +
               num("frame_ao") + "," + num("auc") + "," + num("mean_flops") + "," +
               num("flops_savings_pct") + "," + num("confidence_iou_pearson") + "," +
               num("ece_10bin") + "\n";
        points.push_back(
            {j.value("mean_iou", 0.0), j.value("mean_flops", 0.0), static_cast<int>(i)});
      }
      fs::create_directories(dir);
      std::ofstream(dir / "summary.csv") << csv;
      // plot-ready accuracy/cost frontier over every report found
      auto frontier = adt::pareto_frontier(points, true);
      std::string pareto_csv = "source,mean_iou,mean_flops,pareto\n";
      for (const auto& p : points) {
        bool on = std::any_of(frontier.begin(), frontier.end(),
                              [&](const adt::ParetoPoint& q) { return q.tag == p.tag; });
        pareto_csv += reports[p.tag].first + "," + fmt(p.primary) + "," + fmt(p.cost) + "," +
                      (on ? "1" : "0") + "\n";
      }
      std::ofstream(dir / "pareto.csv") << pareto_csv;
      auto m = base_manifest("", "");
      m["input_dir"] = in.string();
      m["n_reports"] = std::to_string(reports.size());
      adt::save_manifest("report", m, dir);
      std::cout << "report: " << reports.size() << " reports -> " << dir.string() << "\n";
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
