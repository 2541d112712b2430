#include "adt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adt/rng.hpp"

namespace adt {

void SequenceSpec::validate() const {
  if (n_frames < 1) throw std::invalid_argument("SequenceSpec: n_frames must be positive");
  if (occlusion_prob < 0.0 || occlusion_prob > 1.0 || occlusion_cover < 0.0 ||
      occlusion_cover > 1.0)
    throw std::invalid_argument("SequenceSpec: probabilities must lie in [0,1]");
  if (target_min < 4 || target_max < target_min || target_max >= image_size / 2)
    throw std::invalid_argument("SequenceSpec: target size range does not fit the image");
  if (template_size < 4 || template_scale <= 0.0)
    throw std::invalid_argument("SequenceSpec: bad template parameters");
}

namespace {

struct TextureParams {
  double base, amp, fx, fy, phase;
  int checker = 0;  // checker cell size, 0 = plain
  bool ellipse = false;
};

double texture_at(const TextureParams& t, double lx, double ly) {
  double v = t.base + t.amp * std::sin(t.fx * lx + t.fy * ly + t.phase);
  if (t.checker > 0) {
    int cx = static_cast<int>(lx) / t.checker;
    int cy = static_cast<int>(ly) / t.checker;
    if ((cx + cy) % 2 == 0) v += 0.18;
  }
  return v;
}

void draw_shape(Tensor& img, const Box& box, const TextureParams& tex) {
  int h = img.shape[0], w = img.shape[1];
  int x1 = std::max(0, static_cast<int>(std::floor(box.x1)));
  int y1 = std::max(0, static_cast<int>(std::floor(box.y1)));
  int x2 = std::min(w, static_cast<int>(std::ceil(box.x2)));
  int y2 = std::min(h, static_cast<int>(std::ceil(box.y2)));
  double cx = 0.5 * (box.x1 + box.x2), cy = 0.5 * (box.y1 + box.y2);
  double rx = 0.5 * box.width(), ry = 0.5 * box.height();
  for (int y = y1; y < y2; ++y)
    for (int x = x1; x < x2; ++x) {
      if (tex.ellipse) {
        double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy > 1.0) continue;
      }
      img.at(y, x) = std::clamp(texture_at(tex, x - box.x1, y - box.y1), 0.0, 1.0);
    }
}

double rect_overlap_area(const Box& a, const Box& b) {
  double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return iw > 0 && ih > 0 ? iw * ih : 0.0;
}

}  // namespace

TrackSequence generate_sequence(const SequenceSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int sz = spec.image_size;

  // per-sequence appearance
  TextureParams bg{rng.uniform(0.25, 0.45), rng.uniform(0.04, 0.10), rng.uniform(0.05, 0.15),
                   rng.uniform(0.05, 0.15), rng.uniform(0.0, 6.28), 0, false};
  TextureParams target{rng.uniform(0.7, 0.9), rng.uniform(0.08, 0.15), rng.uniform(0.5, 1.2),
                       rng.uniform(0.5, 1.2), rng.uniform(0.0, 6.28),
                       2 + static_cast<int>(rng.next_below(3)), rng.next_double() < 0.4};
  double tw = rng.uniform(spec.target_min, spec.target_max);
  double th = rng.uniform(spec.target_min, spec.target_max);

  std::vector<TextureParams> dist_tex;
  std::vector<Box> dist_box;
  std::vector<double> dist_vx, dist_vy;
  for (int i = 0; i < spec.distractor_count; ++i) {
    TextureParams t = target;
    t.base = rng.uniform(0.55, 0.8);
    t.phase = rng.uniform(0.0, 6.28);
    t.checker = 2 + static_cast<int>(rng.next_below(3));
    dist_tex.push_back(t);
    double dw = rng.uniform(spec.target_min, spec.target_max);
    double dh = rng.uniform(spec.target_min, spec.target_max);
    double dx = rng.uniform(0, sz - dw), dy = rng.uniform(0, sz - dh);
    dist_box.push_back({dx, dy, dx + dw, dy + dh});
    dist_vx.push_back(rng.uniform(-1.0, 1.0));
    dist_vy.push_back(rng.uniform(-1.0, 1.0));
  }

  // motion state
  double cx = rng.uniform(tw, sz - tw);
  double cy = rng.uniform(th, sz - th);
  double ang = rng.uniform(0.0, 6.28);
  double vx = spec.speed * std::cos(ang);
  double vy = spec.speed * std::sin(ang);

  TrackSequence seq;
  seq.spec = spec;
  int occl_left = 0;
  Box occl_rel{};  // occluder, relative to target center

  for (int f = 0; f < spec.n_frames; ++f) {
    if (f > 0) {
      if (spec.motion == MotionModel::random_walk) {
        vx = std::clamp(vx + rng.gaussian(0.0, 0.6 * spec.speed), -2.0 * spec.speed,
                        2.0 * spec.speed);
        vy = std::clamp(vy + rng.gaussian(0.0, 0.6 * spec.speed), -2.0 * spec.speed,
                        2.0 * spec.speed);
      }
      cx += vx;
      cy += vy;
      // reflect so the box stays inside the frame
      if (cx - tw / 2 < 0) { cx = tw - cx; vx = -vx; }
      if (cx + tw / 2 > sz) { cx = 2 * sz - tw - cx; vx = -vx; }
      if (cy - th / 2 < 0) { cy = th - cy; vy = -vy; }
      if (cy + th / 2 > sz) { cy = 2 * sz - th - cy; vy = -vy; }
    }
    Box gt{cx - tw / 2, cy - th / 2, cx + tw / 2, cy + th / 2};

    Tensor img = Tensor::zeros({sz, sz});
    for (int y = 0; y < sz; ++y)
      for (int x = 0; x < sz; ++x)
        img.at(y, x) = std::clamp(texture_at(bg, x, y), 0.0, 1.0);

    for (size_t i = 0; i < dist_box.size(); ++i) {
      if (f > 0) {
        Box& b = dist_box[i];
        double w = b.width(), h = b.height();
        double dcx = 0.5 * (b.x1 + b.x2) + dist_vx[i];
        double dcy = 0.5 * (b.y1 + b.y2) + dist_vy[i];
        if (dcx - w / 2 < 0 || dcx + w / 2 > sz) dist_vx[i] = -dist_vx[i];
        if (dcy - h / 2 < 0 || dcy + h / 2 > sz) dist_vy[i] = -dist_vy[i];
        dcx = std::clamp(dcx, w / 2, sz - w / 2);
        dcy = std::clamp(dcy, h / 2, sz - h / 2);
        b = {dcx - w / 2, dcy - h / 2, dcx + w / 2, dcy + h / 2};
      }
      draw_shape(img, dist_box[i], dist_tex[i]);
    }

    draw_shape(img, gt, target);

    // occlusion: a flat patch covering occlusion_cover of the target
    double vis = 1.0;
    if (occl_left == 0 && spec.occlusion_prob > 0.0 &&
        rng.next_double() < spec.occlusion_prob) {
      occl_left = spec.occlusion_span;
      double ow = tw;
      double oh = th * spec.occlusion_cover;
      double oy = rng.next_double() < 0.5 ? 0.0 : th - oh;
      occl_rel = {-tw / 2, oy - th / 2, -tw / 2 + ow, oy - th / 2 + oh};
    }
    if (occl_left > 0) {
      --occl_left;
      Box occ{cx + occl_rel.x1, cy + occl_rel.y1, cx + occl_rel.x2, cy + occl_rel.y2};
      TextureParams flat{0.5, 0.02, 0.3, 0.3, 0.0, 0, false};
      draw_shape(img, occ, flat);
      vis = 1.0 - rect_overlap_area(gt, occ) / gt.area();
    }

    if (spec.noise_sigma > 0.0)
      for (auto& v : img.data) v = std::clamp(v + rng.gaussian(0.0, spec.noise_sigma), 0.0, 1.0);

    seq.frames.push_back(std::move(img));
    seq.gt_boxes.push_back(gt);
    seq.visibility.push_back(vis);
  }

  seq.template_img =
      crop_search_region(seq.frames[0], seq.gt_boxes[0], spec.template_scale, spec.template_size)
          .image;
  return seq;
}

SearchCrop crop_search_region(const Tensor& frame, const Box& prev_box, double scale,
                              int out_size) {
  if (prev_box.width() <= 0.0 || prev_box.height() <= 0.0)
    throw std::invalid_argument("crop_search_region: degenerate box");
  int h = frame.shape[0], w = frame.shape[1];
  double side = scale * std::max(prev_box.width(), prev_box.height());
  double cx = 0.5 * (prev_box.x1 + prev_box.x2);
  double cy = 0.5 * (prev_box.y1 + prev_box.y2);

  SearchCrop out;
  out.transform = {cx - side / 2, cy - side / 2, side};
  out.image = Tensor::zeros({out_size, out_size});
  for (int i = 0; i < out_size; ++i)
    for (int j = 0; j < out_size; ++j) {
      // nearest-neighbor sample at the pixel center
      double fx = out.transform.x0 + (j + 0.5) * side / out_size;
      double fy = out.transform.y0 + (i + 0.5) * side / out_size;
      int sx = static_cast<int>(std::floor(fx));
      int sy = static_cast<int>(std::floor(fy));
      if (sx >= 0 && sx < w && sy >= 0 && sy < h) out.image.at(i, j) = frame.at(sy, sx);
    }
  return out;
}

}  // namespace adt
