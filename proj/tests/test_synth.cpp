#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adt/io.hpp"
#include "adt/synth.hpp"

using namespace adt;

TEST_CASE("generator determinism: same spec twice is bit-identical") {
  SequenceSpec spec;
  spec.seed = 123;
  spec.occlusion_prob = 0.3;
  spec.distractor_count = 2;
  spec.noise_sigma = 0.02;
  TrackSequence a = generate_sequence(spec);
  TrackSequence b = generate_sequence(spec);
  REQUIRE(a.frames.size() == b.frames.size());
  for (size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i].data == b.frames[i].data);
  for (size_t i = 0; i < a.gt_boxes.size(); ++i) {
    CHECK(a.gt_boxes[i].x1 == b.gt_boxes[i].x1);
    CHECK(a.gt_boxes[i].y2 == b.gt_boxes[i].y2);
  }
  CHECK(a.visibility == b.visibility);
}

TEST_CASE("no occlusion and no noise gives full visibility") {
  SequenceSpec spec;
  spec.seed = 5;
  spec.occlusion_prob = 0.0;
  spec.noise_sigma = 0.0;
  TrackSequence seq = generate_sequence(spec);
  for (double v : seq.visibility) CHECK(v == 1.0);
}

TEST_CASE("linear motion moves the center by speed until reflection") {
  SequenceSpec spec;
  spec.seed = 42;
  spec.motion = MotionModel::linear;
  spec.speed = 2.0;
  spec.n_frames = 8;
  TrackSequence seq = generate_sequence(spec);
  for (size_t f = 1; f < seq.frames.size(); ++f) {
    const Box& prev = seq.gt_boxes[f - 1];
    const Box& cur = seq.gt_boxes[f];
    double dx = 0.5 * (cur.x1 + cur.x2) - 0.5 * (prev.x1 + prev.x2);
    double dy = 0.5 * (cur.y1 + cur.y2) - 0.5 * (prev.y1 + prev.y2);
    double step = std::sqrt(dx * dx + dy * dy);
    // displacement magnitude is exactly the speed except at boundary bounces
    bool near_border = cur.x1 < 3 || cur.y1 < 3 || cur.x2 > spec.image_size - 3 ||
                       cur.y2 > spec.image_size - 3;
    if (!near_border) CHECK(step == doctest::Approx(spec.speed).epsilon(1e-9));
  }
}

TEST_CASE("gt boxes stay inside the image") {
  SequenceSpec spec;
  spec.seed = 9;
  spec.motion = MotionModel::random_walk;
  spec.n_frames = 60;
  TrackSequence seq = generate_sequence(spec);
  for (const Box& b : seq.gt_boxes) {
    CHECK(b.x1 >= -1e-9);
    CHECK(b.y1 >= -1e-9);
    CHECK(b.x2 <= spec.image_size + 1e-9);
    CHECK(b.y2 <= spec.image_size + 1e-9);
  }
}

TEST_CASE("occlusion spans annotate reduced visibility") {
  SequenceSpec spec;
  spec.seed = 11;
  spec.n_frames = 40;
  spec.occlusion_prob = 0.5;
  spec.occlusion_cover = 0.6;
  TrackSequence seq = generate_sequence(spec);
  int occluded = 0;
  for (double v : seq.visibility) {
    if (v < 1.0) {
      ++occluded;
      CHECK(v == doctest::Approx(1.0 - spec.occlusion_cover).epsilon(0.05));
    }
  }
  CHECK(occluded > 0);
}

TEST_CASE("invalid specs rejected") {
  SequenceSpec spec;
  spec.target_max = spec.image_size;  // cannot fit
  CHECK_THROWS_AS(generate_sequence(spec), std::invalid_argument);
  spec = SequenceSpec{};
  spec.occlusion_prob = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("crop centered on an interior box") {
  Tensor frame = Tensor::zeros({96, 96});
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < 96; ++j) frame.at(i, j) = i * 96 + j;
  Box box{40, 40, 56, 56};
  SearchCrop crop = crop_search_region(frame, box, 2.0, 32);
  CHECK(crop.transform.x0 == doctest::Approx(32.0));
  CHECK(crop.transform.y0 == doctest::Approx(32.0));
  CHECK(crop.transform.side == doctest::Approx(32.0));
  // crop center equals box center
  Box back = crop.transform.to_frame({0.5, 0.5, 0.5, 0.5});
  CHECK(back.x1 == doctest::Approx(48.0));
  CHECK(back.y1 == doctest::Approx(48.0));
}

TEST_CASE("coordinate round trip within quantization") {
  Tensor frame = Tensor::zeros({96, 96});
  Box box{10, 20, 34, 44};
  SearchCrop crop = crop_search_region(frame, box, 2.5, 64);
  Box in_crop = crop.transform.to_crop(box);
  Box back = crop.transform.to_frame(in_crop);
  CHECK(back.x1 == doctest::Approx(box.x1).epsilon(1e-9));
  CHECK(back.y1 == doctest::Approx(box.y1).epsilon(1e-9));
  CHECK(back.x2 == doctest::Approx(box.x2).epsilon(1e-9));
  CHECK(back.y2 == doctest::Approx(box.y2).epsilon(1e-9));
}

TEST_CASE("corner box crops are zero-padded with a correct transform") {
  Tensor frame = Tensor::full({32, 32}, 1.0);
  Box box{0, 0, 8, 8};  // top-left corner
  SearchCrop crop = crop_search_region(frame, box, 4.0, 32);
  // crop spans [-12, 20): everything left/above the frame is padding
  CHECK(crop.transform.x0 == doctest::Approx(-12.0));
  CHECK(crop.image.at(0, 0) == 0.0);
  CHECK(crop.image.at(31, 31) == 1.0);
  Box back = crop.transform.to_frame(crop.transform.to_crop(box));
  CHECK(back.x2 == doctest::Approx(8.0).epsilon(1e-9));
  CHECK_THROWS_AS(crop_search_region(frame, {5, 5, 5, 9}, 2.0, 32), std::invalid_argument);
}

TEST_CASE("dataset round-trips through disk") {
  SequenceSpec spec;
  spec.seed = 77;
  spec.n_frames = 4;
  std::vector<TrackSequence> seqs = {generate_sequence(spec)};
  auto dir = std::filesystem::temp_directory_path() / "adt_test_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(seqs, {{"train", {0}}}, dir);
  auto loaded = load_split(dir, "train");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].frames.size() == seqs[0].frames.size());
  CHECK(loaded[0].frames[2].data == seqs[0].frames[2].data);
  CHECK(loaded[0].template_img.data == seqs[0].template_img.data);
  CHECK(loaded[0].visibility == seqs[0].visibility);
  CHECK_THROWS(load_split(dir, "nope"));
  std::filesystem::remove_all(dir);
}
