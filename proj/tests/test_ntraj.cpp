#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "posemo/error.hpp"
#include "posemo/ntraj.hpp"
#include "posemo/preprocess.hpp"

using namespace posemo;

TEST_CASE("descriptor normalization, counts and rotation behaviour") {
  const auto r = oracle::descriptor_suite(50, 17);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("direction keeps quadrants and defines atan2(0, 0)") {
  CHECK(direction(0.0, 0.0) == 0.0);
  CHECK(direction(1.0, -1.0) == doctest::Approx(3 * std::numbers::pi / 4));
  CHECK(direction(-1.0, -1.0) == doctest::Approx(-3 * std::numbers::pi / 4));
  CHECK(direction(0.0, -1.0) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("inner angle at a vertex") {
  CHECK(inner_angle(0, 0, 1, 0, 0, 1) == doctest::Approx(std::numbers::pi / 2));
  CHECK(inner_angle(0, 0, 1, 0, -2, 0) == doctest::Approx(std::numbers::pi));
  CHECK(inner_angle(0, 0, 1, 0, 3, 0) == 0.0);
  CHECK(inner_angle(0, 0, 0, 0, 3, 1) == 0.0);
}

TEST_CASE("l1 normalization and degenerate vectors") {
  std::vector<double> v{1.0, -3.0, 0.0, 4.0};
  CHECK(l1_normalize(v));
  CHECK(v[1] == doctest::Approx(-0.375));
  std::vector<double> z{1e-10, -1e-10};
  CHECK_FALSE(l1_normalize(z));
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("stream keys follow the fixed block order") {
  const std::vector<std::size_t> gaps{1, 2};
  const auto keys = stream_keys(FeatureKind::NTrajPlus, gaps);
  std::vector<std::string> names;
  for (const auto& k : keys) names.push_back(to_string(k));
  CHECK(names == std::vector<std::string>{"posx", "posy", "dx(1)", "dx(2)", "dy(1)", "dy(2)", "angle(1)",
                                          "angle(2)", "pair_orient", "inner_angle"});
  CHECK(stream_keys(FeatureKind::NTraj, gaps).size() == 8);
}

TEST_CASE("stream ids carry ordered joints") {
  const JointSubset s({1, 4, 9});
  const std::vector<std::size_t> gaps{1};
  const auto ids = enumerate_streams(s, gaps, FeatureKind::NTrajPlus);
  const auto census = descriptor_census(3, gaps, FeatureKind::NTrajPlus);
  std::size_t expected = 0;
  for (const auto& [k, n] : census) expected += n;
  CHECK(ids.size() == expected);
  for (const auto& id : ids) {
    if (id.key.kind == StreamKind::PairOrient) CHECK(id.joints[0] < id.joints[1]);
    if (id.key.kind == StreamKind::InnerAngle) CHECK(id.joints[1] < id.joints[2]);
    CHECK((id.key.gap != 0) == is_motion(id.key.kind));
  }
}

TEST_CASE("a held posture yields zero motion descriptors and signed position descriptors") {
  std::vector<Pose> f(8);
  for (auto& p : f) {
    for (std::size_t j = 0; j < kNumJoints; ++j) p.joints[j] = {static_cast<double>(j) - 4.0, 2.0, 1.0, true};
  }
  const std::vector<std::size_t> gaps{1};
  for (const auto& d : extract_descriptors(PoseSequence(f, 24.0, "h"), JointSubset({2, 7}), 5, gaps)) {
    if (is_motion(d.stream.key.kind)) {
      CHECK(d.degenerate);
    } else if (d.stream.key.kind == StreamKind::PosX) {
      const double sign = d.stream.joints[0] < 4 ? -1.0 : 1.0;
      for (double v : d.values) CHECK(v == doctest::Approx(sign * 0.2));
    }
  }
}

TEST_CASE("too-short sequences are rejected") {
  const std::vector<std::size_t> gaps{1, 3};
  std::vector<Pose> f(7);
  for (auto& p : f) p.joints[1] = {1, 1, 1, true};
  CHECK_THROWS_AS(extract_descriptors(PoseSequence(f, 24.0, "s"), JointSubset::lower(), 5, gaps), Error);
  CHECK(descriptors_per_stream({StreamKind::Dx, 3}, 8, 5) == 1);
  CHECK(descriptors_per_stream({StreamKind::PosX, 0}, 4, 5) == 0);
}

TEST_CASE("streamed descriptors equal the materialized list") {
  const auto seq = preprocess(oracle::random_clip(4, 40), PipelineConfig{}).sequence;
  const std::vector<std::size_t> gaps{1, 2, 3};
  const auto all = extract_descriptors(seq, JointSubset::upper(), 5, gaps);
  std::size_t i = 0;
  bool same = true;
  for_each_descriptor(seq, JointSubset::upper(), 5, gaps, FeatureKind::NTrajPlus,
                      [&](std::size_t, const StreamId& id, std::size_t start, std::span<const double> v) {
                        same = same && i < all.size() && all[i].stream == id && all[i].start_frame == start &&
                               std::equal(v.begin(), v.end(), all[i].values.begin(), all[i].values.end());
                        ++i;
                      });
  CHECK(same);
  CHECK(i == all.size());
}

TEST_CASE("descriptors are invariant to translation and scale of the raw clip") {
  const auto raw = oracle::random_clip(12, 40);
  const PipelineConfig c;
  const std::vector<std::size_t> gaps{1, 2};
  const auto a = extract_descriptors(preprocess(raw, c).sequence, JointSubset::lower(), 5, gaps);
  const auto b = extract_descriptors(preprocess(oracle::affine(raw, 3.7, -50.0, 810.0), c).sequence,
                                     JointSubset::lower(), 5, gaps);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // Directions of near-zero motion are ill-conditioned; compare the rest.
    if (a[i].stream.key.kind == StreamKind::Angle) continue;
    for (std::size_t t = 0; t < a[i].values.size(); ++t) worst = std::max(worst, std::abs(a[i].values[t] - b[i].values[t]));
  }
  CHECK(worst < 1e-9);
}
