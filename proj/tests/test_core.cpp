#include <doctest.h>

#include <algorithm>
#include <set>

#include "posemo/binio.hpp"
#include "posemo/core.hpp"
#include "posemo/error.hpp"
#include "posemo/ingest.hpp"
#include "posemo/rng.hpp"

using namespace posemo;

TEST_CASE("upper and lower subsets cover every joint and share only the neck") {
  std::set<std::size_t> all, both;
  for (auto j : JointSubset::upper().indices()) all.insert(j);
  for (auto j : JointSubset::lower().indices()) {
    if (all.count(j)) both.insert(j);
    all.insert(j);
  }
  CHECK(all.size() == kNumJoints);
  CHECK(both == std::set<std::size_t>{joint::kNeck});
  CHECK(std::vector<std::size_t>(JointSubset::lower().indices().begin(), JointSubset::lower().indices().end()) ==
        std::vector<std::size_t>{1, 8, 9, 10, 11, 12, 13});
}

TEST_CASE("joint subsets reject unsorted, duplicate and out-of-range indices") {
  CHECK_THROWS_AS(JointSubset({3, 2}), Error);
  CHECK_THROWS_AS(JointSubset({2, 2}), Error);
  CHECK_THROWS_AS(JointSubset({kNumJoints}), Error);
  CHECK_NOTHROW(JointSubset({0, 5, 17}));
}

TEST_CASE("subset view reads through to the sequence") {
  std::vector<Pose> frames(3);
  frames[2].joints[joint::kLKnee] = {4.0, 5.0, 0.9, true};
  const PoseSequence seq(frames, 30.0, "v");
  const auto view = joint_subset_view(seq, JointSubset::lower());
  CHECK(view.frames() == 3);
  CHECK(view.joints() == 7);
  CHECK(view.joint_index(5) == joint::kLKnee);
  CHECK(view.at(2, 5).x == 4.0);
}

TEST_CASE("pose sequences need frames and a positive rate") {
  CHECK_THROWS_AS(PoseSequence({}, 24.0, "x"), Error);
  CHECK_THROWS_AS(PoseSequence(std::vector<Pose>(2), 0.0, "x"), Error);
}

TEST_CASE("label manifest keeps order, appends background and pads emotions") {
  const auto v = parse_label_manifest("# comment\nupper,a\nupper,b\nlower,c\nemotion,happy\n\n");
  CHECK(v.upper.size() == 3);
  CHECK(v.upper.name(2) == "background");
  CHECK(v.upper.background_index() == 2);
  CHECK(v.lower.find("c") == 0u);
  CHECK_FALSE(v.lower.find("a").has_value());
  CHECK(v.emotion.size() == kEmotionSlots + 1);
  CHECK(v.emotion.name(0) == "happy");
  CHECK(parse_label_manifest(format_label_manifest(v)) == v);
  CHECK_THROWS_AS(parse_label_manifest("upper,a\nupper,a\n"), Error);
  CHECK_THROWS_AS(parse_label_manifest("sideways,a\n"), Error);
}

TEST_CASE("config text round-trips and hashes stably") {
  PipelineConfig c;
  c.codebook_size = 50;
  c.gaps = {1, 4};
  c.stage2_lr = 0.125;
  PipelineConfig d;
  d.apply_text(c.to_text());
  CHECK(d.to_text() == c.to_text());
  CHECK(d.hash() == c.hash());
  CHECK(PipelineConfig{}.hash() != c.hash());
  CHECK_THROWS_AS(d.set("no_such_key", "1"), Error);
  CHECK_THROWS_AS(d.set("codebook_size", "many"), Error);
}

TEST_CASE("config validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.window_len = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.codebook_eval = true;
  c.codebook_size = 30;
  CHECK_THROWS_AS(c.validate(), Error);
  c.codebook_size = 200;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("pose store round-trips 64-bit coordinates bit-exactly") {
  Rng rng(7);
  std::vector<Pose> frames(25);
  for (auto& p : frames) {
    for (auto& j : p.joints) j = {rng.normal() * 1e3, rng.uniform(-1, 1) * 1e-7, rng.uniform(), rng.bernoulli(0.8)};
  }
  const PoseSequence seq(frames, 29.97, "clip");
  bool pre = false;
  CHECK(deserialize_sequence(serialize_sequence(seq, true), &pre) == seq);
  CHECK(pre);
}

TEST_CASE("byte reader rejects truncated input") {
  ByteWriter w;
  w.u64(5);
  w.str("abc");
  ByteReader r(std::string_view(w.bytes()).substr(0, w.bytes().size() - 1));
  CHECK(r.u64() == 5);
  CHECK_THROWS_AS(r.str(), Error);
}

TEST_CASE("artifact headers carry type and config") {
  ByteWriter w;
  write_header(w, {"codebooks", 1, 0xabcULL, 9});
  ByteReader r(w.bytes());
  const auto h = read_header(r, "codebooks");
  CHECK(h.seed == 9);
  CHECK_NOTHROW(require_config(h, 0xabcULL, "x"));
  CHECK_THROWS_AS(require_config(h, 0xabdULL, "x"), Error);
  ByteReader r2(w.bytes());
  CHECK_THROWS_AS(read_header(r2, "encoder"), Error);
}

TEST_CASE("derived seeds differ by tag and index") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 5, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("exit status by error kind") {
  CHECK(exit_status(ErrorCode::DivergedLoss) == 4);
  CHECK(exit_status(ErrorCode::NonFiniteActivation) == 4);
  CHECK(exit_status(ErrorCode::MalformedFile) == 3);
  CHECK(exit_status(ErrorCode::ConfigMismatch) == 3);
}
