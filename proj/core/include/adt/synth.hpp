#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adt/model.hpp"
#include "adt/tensor.hpp"

namespace adt {

enum class MotionModel { linear, random_walk };

struct SequenceSpec {
  int n_frames = 16;
  int image_size = 96;
  int target_min = 14;  // target side range, pixels
  int target_max = 24;
  MotionModel motion = MotionModel::linear;
  double speed = 2.0;          // pixels per frame
  double occlusion_prob = 0.0; // per-frame probability of starting a span
  int occlusion_span = 4;      // frames per occlusion event
  double occlusion_cover = 0.6;  // fraction of the target covered
  int distractor_count = 0;
  double noise_sigma = 0.0;
  int template_size = 32;
  double template_scale = 2.0;
  uint64_t seed = 0;

  void validate() const;
};

// Frames are (H, W) grayscale tensors in [0,1]; gt boxes and the visibility
// fraction are exact by construction. Boxes are in frame-pixel coordinates.
struct TrackSequence {
  SequenceSpec spec;
  std::vector<Tensor> frames;
  std::vector<Box> gt_boxes;
  std::vector<double> visibility;
  Tensor template_img;  // crop of frame 0 around the initial target
};

TrackSequence generate_sequence(const SequenceSpec& spec);

// Maps between normalized crop coordinates and frame pixels.
struct CropTransform {
  double x0 = 0, y0 = 0, side = 1;

  Box to_frame(const Box& normalized) const {
    return {x0 + normalized.x1 * side, y0 + normalized.y1 * side, x0 + normalized.x2 * side,
            y0 + normalized.y2 * side};
  }
  Box to_crop(const Box& frame_box) const {
    return {(frame_box.x1 - x0) / side, (frame_box.y1 - y0) / side, (frame_box.x2 - x0) / side,
            (frame_box.y2 - y0) / side};
  }
};

struct SearchCrop {
  Tensor image;  // (out_size, out_size)
  CropTransform transform;
};

// Square crop centered on prev_box with side = scale * max(box side),
// zero-padded at image borders and resampled to out_size pixels.
SearchCrop crop_search_region(const Tensor& frame, const Box& prev_box, double scale,
                              int out_size);

}  // namespace adt
