#include "adt/io.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace adt {

using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"n_enc", c.n_enc},
              {"n_dec", c.n_dec},
              {"d_model", c.d_model},
              {"n_heads", c.n_heads},
              {"n_queries", c.n_queries},
              {"ffn_dim", c.ffn_dim},
              {"min_enc", c.min_enc},
              {"min_dec", c.min_dec},
              {"template_size", c.template_size},
              {"search_size", c.search_size},
              {"patch_size", c.patch_size},
              {"heatmap_h", c.heatmap_h},
              {"heatmap_w", c.heatmap_w}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_enc = j.at("n_enc");
  c.n_dec = j.at("n_dec");
  c.d_model = j.at("d_model");
  c.n_heads = j.at("n_heads");
  c.n_queries = j.at("n_queries");
  c.ffn_dim = j.at("ffn_dim");
  c.min_enc = j.at("min_enc");
  c.min_dec = j.at("min_dec");
  c.template_size = j.at("template_size");
  c.search_size = j.at("search_size");
  c.patch_size = j.at("patch_size");
  c.heatmap_h = j.at("heatmap_h");
  c.heatmap_w = j.at("heatmap_w");
  return c;
}

json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }
Box box_from_json(const json& j) { return {j[0], j[1], j[2], j[3]}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  // write to a temp file, then rename, so readers never see partial output
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_doubles(const std::filesystem::path& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::vector<double> read_doubles(const std::filesystem::path& path, size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> data(count);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("short read from " + path.string());
  return data;
}

}  // namespace

std::vector<std::string> param_names(const ModelConfig& cfg) {
  std::vector<std::string> names = {"patch_w", "patch_b", "pos_template", "pos_search",
                                    "query_pos"};
  auto attn = [&](const std::string& p) {
    for (const char* s : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"})
      names.push_back(p + "." + s);
  };
  auto ln = [&](const std::string& p) {
    names.push_back(p + ".gamma");
    names.push_back(p + ".beta");
  };
  auto ffn = [&](const std::string& p) {
    for (const char* s : {"w1", "b1", "w2", "b2"}) names.push_back(p + "." + s);
  };
  for (int i = 0; i < cfg.n_enc; ++i) {
    std::string p = "enc" + std::to_string(i);
    attn(p + ".attn");
    ln(p + ".ln1");
    ln(p + ".ln2");
    ffn(p + ".ffn");
  }
  for (int i = 0; i < cfg.n_dec; ++i) {
    std::string p = "dec" + std::to_string(i);
    attn(p + ".self_attn");
    attn(p + ".cross_attn");
    ln(p + ".ln1");
    ln(p + ".ln2");
    ln(p + ".ln3");
    ffn(p + ".ffn");
  }
  for (const char* s : {"head.w_query", "head.w_tl", "head.b_tl", "head.w_br", "head.b_br"})
    names.push_back(s);
  return names;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::vector<Var> params = model.params();
  std::vector<std::string> names = param_names(model.config);
  if (params.size() != names.size())
    throw std::logic_error("save_checkpoint: parameter naming out of sync");
  json j;
  j["format"] = "adt-checkpoint";
  j["version"] = 1;
  j["seed"] = model.seed;
  j["config"] = config_to_json(model.config);
  json plist = json::array();
  for (size_t i = 0; i < params.size(); ++i) {
    plist.push_back(json{{"name", names[i]},
                         {"shape", params[i]->value.shape},
                         {"data", params[i]->value.data}});
  }
  j["params"] = std::move(plist);
  write_text(path, j.dump());
}

Model load_checkpoint(const std::filesystem::path& path) {
  json j = json::parse(read_text(path));
  if (j.value("format", "") != "adt-checkpoint")
    throw std::runtime_error("not a checkpoint file: " + path.string());
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  ModelConfig cfg = config_from_json(j.at("config"));
  Model model = Model::build(cfg, j.at("seed").get<uint64_t>());
  std::vector<Var> params = model.params();
  const json& plist = j.at("params");
  if (plist.size() != params.size())
    throw std::runtime_error("checkpoint parameter count mismatch in " + path.string());
  for (size_t i = 0; i < params.size(); ++i) {
    std::vector<int> shape = plist[i].at("shape").get<std::vector<int>>();
    if (shape != params[i]->value.shape)
      throw std::runtime_error("checkpoint shape mismatch for " +
                               plist[i].at("name").get<std::string>());
    params[i]->value.data = plist[i].at("data").get<std::vector<double>>();
  }
  return model;
}

namespace {

json spec_to_json(const SequenceSpec& s) {
  return json{{"n_frames", s.n_frames},
              {"image_size", s.image_size},
              {"target_min", s.target_min},
              {"target_max", s.target_max},
              {"motion", s.motion == MotionModel::linear ? "linear" : "random_walk"},
              {"speed", s.speed},
              {"occlusion_prob", s.occlusion_prob},
              {"occlusion_span", s.occlusion_span},
              {"occlusion_cover", s.occlusion_cover},
              {"distractor_count", s.distractor_count},
              {"noise_sigma", s.noise_sigma},
              {"template_size", s.template_size},
              {"template_scale", s.template_scale},
              {"seed", s.seed}};
}

SequenceSpec spec_from_json(const json& j) {
  SequenceSpec s;
  s.n_frames = j.at("n_frames");
  s.image_size = j.at("image_size");
  s.target_min = j.at("target_min");
  s.target_max = j.at("target_max");
  s.motion = j.at("motion") == "linear" ? MotionModel::linear : MotionModel::random_walk;
  s.speed = j.at("speed");
  s.occlusion_prob = j.at("occlusion_prob");
  s.occlusion_span = j.at("occlusion_span");
  s.occlusion_cover = j.at("occlusion_cover");
  s.distractor_count = j.at("distractor_count");
  s.noise_sigma = j.at("noise_sigma");
  s.template_size = j.at("template_size");
  s.template_scale = j.at("template_scale");
  s.seed = j.at("seed");
  return s;
}

}  // namespace

void save_dataset(const std::vector<TrackSequence>& sequences,
                  const std::map<std::string, std::vector<int>>& splits,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < sequences.size(); ++i) {
    const TrackSequence& seq = sequences[i];
    std::filesystem::path sd = dir / ("seq_" + std::to_string(i));
    std::filesystem::create_directories(sd);
    json m;
    m["spec"] = spec_to_json(seq.spec);
    json boxes = json::array(), vis = json::array();
    for (const auto& b : seq.gt_boxes) boxes.push_back(box_to_json(b));
    for (double v : seq.visibility) vis.push_back(v);
    m["gt_boxes"] = std::move(boxes);
    m["visibility"] = std::move(vis);
    write_text(sd / "manifest.json", m.dump(2));
    std::vector<double> flat;
    for (const auto& f : seq.frames) flat.insert(flat.end(), f.data.begin(), f.data.end());
    write_doubles(sd / "frames.bin", flat);
    write_doubles(sd / "template.bin", seq.template_img.data);
  }
  json idx;
  for (const auto& [name, ids] : splits) idx[name] = ids;
  write_text(dir / "splits.json", idx.dump(2));
}

std::vector<TrackSequence> load_split(const std::filesystem::path& dir,
                                      const std::string& split) {
  json idx = json::parse(read_text(dir / "splits.json"));
  if (!idx.contains(split))
    throw std::runtime_error("split '" + split + "' not found in " +
                             (dir / "splits.json").string());
  std::vector<TrackSequence> out;
  for (int id : idx.at(split).get<std::vector<int>>()) {
    std::filesystem::path sd = dir / ("seq_" + std::to_string(id));
    json m = json::parse(read_text(sd / "manifest.json"));
    TrackSequence seq;
    seq.spec = spec_from_json(m.at("spec"));
    for (const auto& b : m.at("gt_boxes")) seq.gt_boxes.push_back(box_from_json(b));
    seq.visibility = m.at("visibility").get<std::vector<double>>();
    int sz = seq.spec.image_size;
    size_t per_frame = static_cast<size_t>(sz) * sz;
    std::vector<double> flat = read_doubles(sd / "frames.bin", per_frame * seq.spec.n_frames);
    for (int f = 0; f < seq.spec.n_frames; ++f)
      seq.frames.emplace_back(
          std::vector<int>{sz, sz},
          std::vector<double>(flat.begin() + f * per_frame, flat.begin() + (f + 1) * per_frame));
    int ts = seq.spec.template_size;
    seq.template_img = Tensor({ts, ts}, read_doubles(sd / "template.bin",
                                                     static_cast<size_t>(ts) * ts));
    out.push_back(std::move(seq));
  }
  return out;
}

void save_thresholds(const PolicyThresholds& t, double p_low, double p_high,
                     const std::filesystem::path& path) {
  json j;
  j["tau_low"] = t.tau_low;
  j["tau_high"] = t.tau_high;
  j["p_low"] = p_low;
  j["p_high"] = p_high;
  j["easy"] = json::array({t.easy.e, t.easy.d});
  j["medium"] = json::array({t.medium.e, t.medium.d});
  j["hard"] = json::array({t.hard.e, t.hard.d});
  write_text(path, j.dump(2));
}

PolicyThresholds load_thresholds(const std::filesystem::path& path) {
  json j = json::parse(read_text(path));
  PolicyThresholds t;
  t.tau_low = j.at("tau_low");
  t.tau_high = j.at("tau_high");
  t.easy = {j.at("easy")[0], j.at("easy")[1]};
  t.medium = {j.at("medium")[0], j.at("medium")[1]};
  t.hard = {j.at("hard")[0], j.at("hard")[1]};
  return t;
}

void save_eval_report(const EvalReport& r, const std::string& policy_label,
                      const std::filesystem::path& json_path) {
  json j;
  j["policy"] = policy_label;
  j["mean_iou"] = r.mean_iou;
  j["frame_ao"] = r.frame_ao;
  j["auc"] = r.auc;
  j["mean_flops"] = r.mean_flops;
  j["total_flops"] = r.total_flops;
  j["full_flops"] = r.full_flops;
  j["flops_savings_pct"] = r.flops_savings_pct;
  // confidence-vs-quality diagnostics; null when degenerate (e.g. constant
  // confidences make the correlation undefined)
  try {
    j["confidence_iou_pearson"] = pearson(r.frame_confidences, r.frame_ious);
  } catch (const std::invalid_argument&) {
    j["confidence_iou_pearson"] = nullptr;
  }
  try {
    j["ece_10bin"] = ece(r.frame_confidences, r.frame_ious, 10);
  } catch (const std::invalid_argument&) {
    j["ece_10bin"] = nullptr;
  }
  json hist = json::array();
  for (const auto& h : r.depth_histogram)
    hist.push_back(json{{"e", h.depth.e}, {"d", h.depth.d}, {"count", h.count}});
  j["depth_histogram"] = std::move(hist);
  json rows = json::array();
  for (const auto& s : r.per_sequence)
    rows.push_back(json{{"seed", s.seed},
                        {"n_frames", s.n_frames},
                        {"mean_iou", s.mean_iou},
                        {"mean_flops", s.mean_flops}});
  j["per_sequence"] = std::move(rows);
  write_text(json_path, j.dump(2));
}

void save_eval_csv(const EvalReport& r, const std::filesystem::path& csv_path) {
  std::string s = "sequence,seed,n_frames,mean_iou,mean_flops\n";
  for (size_t i = 0; i < r.per_sequence.size(); ++i) {
    const auto& row = r.per_sequence[i];
    s += std::to_string(i) + "," + std::to_string(row.seed) + "," +
         std::to_string(row.n_frames) + "," + std::to_string(row.mean_iou) + "," +
         std::to_string(row.mean_flops) + "\n";
  }
  write_text(csv_path, s);
}

void save_sequence_result_csv(const SequenceResult& result, const std::filesystem::path& path) {
  std::string s = "frame,E,D,confidence,iou,flops\n";
  for (const auto& f : result.frames)
    s += std::to_string(f.frame) + "," + std::to_string(f.depth_used.e) + "," +
         std::to_string(f.depth_used.d) + "," + std::to_string(f.confidence) + "," +
         std::to_string(f.iou) + "," + std::to_string(f.flops) + "\n";
  write_text(path, s);
}

void save_train_log_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::string s = "iteration,student_e,student_d,task_loss,kd_loss,total_loss\n";
  for (const auto& r : log)
    s += std::to_string(r.iteration) + "," + std::to_string(r.student_depth.e) + "," +
         std::to_string(r.student_depth.d) + "," + std::to_string(r.task_loss) + "," +
         std::to_string(r.kd_loss) + "," + std::to_string(r.total_loss) + "\n";
  write_text(path, s);
}

void save_manifest(const std::string& command,
                   const std::map<std::string, std::string>& entries,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json j;
  j["command"] = command;
  auto now = std::chrono::system_clock::now().time_since_epoch();
  j["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  for (const auto& [k, v] : entries) j[k] = v;
  write_text(dir / "manifest.json", j.dump(2));
}

}  // namespace adt
