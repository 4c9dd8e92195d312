#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "posemo/binio.hpp"
#include "posemo/error.hpp"
#include "posemo/neural.hpp"
#include "posemo/poseimage.hpp"
#include "posemo/preprocess.hpp"

using namespace posemo;

TEST_CASE("chain order is a permutation led by the nose") {
  const auto& c = chain_order();
  CHECK(std::set<std::size_t>(c.begin(), c.end()).size() == kNumJoints);
  CHECK(c[0] == joint::kNose);
}

TEST_CASE("pose image values stay in byte range") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto seq = oracle::random_clip(s, 30);
    for (std::size_t len : {1, 6, 30}) {
      const auto img = encode_pose_image(seq.frames().subspan(0, len), 32, 32);
      CHECK(img.values.size() == 2 * 32 * 32);
      CHECK(*std::min_element(img.values.begin(), img.values.end()) >= 0.0);
      CHECK(*std::max_element(img.values.begin(), img.values.end()) <= 255.0);
    }
  }
}

TEST_CASE("reversing the window reverses the rows") {
  const auto seq = oracle::random_clip(2, 12);
  std::vector<Pose> rev(seq.frames().rbegin(), seq.frames().rend());
  const auto a = encode_pose_image(seq.frames(), 12, kNumJoints);
  const auto b = encode_pose_image(rev, 12, kNumJoints);
  CHECK(a.height == 12);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t y = 0; y < 12; ++y) {
      for (std::size_t x = 0; x < kNumJoints; ++x) CHECK(a.at(c, y, x) == b.at(c, 11 - y, x));
    }
  }
}

TEST_CASE("pose images are invariant to translation and scale of the raw clip") {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto raw = oracle::random_clip(s + 20, 24);
    const auto moved = oracle::affine(raw, 0.1 + s, 300.0 - 70.0 * s, -25.0 * s);
    const PipelineConfig c;
    const auto p0 = preprocess(raw, c).sequence, p1 = preprocess(moved, c).sequence;
    const auto a = encode_pose_image(p0.frames().subspan(6, 6), 32, 32);
    const auto b = encode_pose_image(p1.frames().subspan(6, 6), 32, 32);
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("constant channels map to mid grey") {
  std::vector<Pose> f(3);
  for (auto& p : f) {
    for (std::size_t j = 0; j < kNumJoints; ++j) p.joints[j] = {static_cast<double>(j), 4.0, 1.0, true};
  }
  const auto img = encode_pose_image(f, 3, kNumJoints);
  CHECK(img.at(1, 2, 7) == 127.5);
  CHECK(img.at(0, 0, 0) == 255.0 * joint::kNose / 17.0);
}

TEST_CASE("bilinear resize keeps constants and interpolates ramps") {
  PoseImage img{2, 2, {0, 10, 0, 10, 5, 5, 5, 5}};
  const auto r = resize_bilinear(img, 4, 4);
  CHECK(r.at(1, 3, 0) == 5.0);
  CHECK(r.at(0, 0, 0) == 0.0);
  CHECK(r.at(0, 0, 1) == doctest::Approx(2.5));
  CHECK(r.at(0, 2, 3) == 10.0);
  CHECK_THROWS_AS(resize_bilinear(img, 0, 3), Error);
}

TEST_CASE("empty windows are rejected") {
  CHECK_THROWS_AS(encode_pose_image({}, 8, 8), Error);
}

TEST_CASE("embeddings are unit length and shape-checked") {
  const ConvEncoder enc({2, 16, 16, {4, 8}, 3}, 1);
  const auto img = encode_pose_image(oracle::random_clip(1, 6).frames(), 16, 16);
  const auto e = embed(img, enc);
  CHECK(e.size() == 8);
  double n = 0.0;
  for (double v : e) n += v * v;
  CHECK(n == doctest::Approx(1.0));
  CHECK_THROWS_AS(embed(encode_pose_image(oracle::random_clip(1, 6).frames(), 8, 8), enc), Error);
  CHECK(image_tensor(img).size() == enc.input_size());
}

TEST_CASE("pgm export") {
  const auto path = std::filesystem::temp_directory_path() / "posemo_test.pgm";
  write_pgm(encode_pose_image(oracle::random_clip(1, 6).frames(), 8, 8), 1, path);
  const auto bytes = read_file(path);
  CHECK(bytes.starts_with("P5"));
  CHECK(bytes.size() > 64);
}
