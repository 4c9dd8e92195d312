#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "posemo/bodylang.hpp"
#include "posemo/error.hpp"
#include "posemo/preprocess.hpp"
#include "posemo/rng.hpp"

using namespace posemo;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v = parse_label_manifest("upper,a\nupper,b\nlower,c\n");
  return v;
}

ExemplarStore tiny_store(DistanceKind kind) {
  ExemplarStore s(Track::Upper, kind, 3, 2);
  s.add({0, "x", 0, {0.0, 0.0}});
  s.add({0, "x", 3, {0.0, 1.0}});
  s.add({1, "y", 0, {5.0, 5.0}});
  s.add({2, "z", 0, {9.0, 9.0}});
  return s;
}

}  // namespace

TEST_CASE("knn agrees with a linear scan, ties included") {
  const auto r = oracle::knn_suite(1000, 23);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("vote ties go to the closer class, then the lower id") {
  ExemplarStore s(Track::Upper, DistanceKind::Euclidean, 3, 1);
  s.add({2, "a", 0, {1.0}});
  s.add({1, "b", 0, {-2.0}});
  const std::vector<double> q{0.0};
  CHECK(knn_classify(q, DistanceKind::Euclidean, s, 2).label == 2);
  ExemplarStore t(Track::Upper, DistanceKind::Euclidean, 3, 1);
  t.add({2, "a", 0, {1.0}});
  t.add({1, "b", 0, {-1.0}});
  CHECK(knn_classify(q, DistanceKind::Euclidean, t, 2).label == 1);
}

TEST_CASE("k is clipped to the store and confidence follows the winning distances") {
  const auto s = tiny_store(DistanceKind::Euclidean);
  const std::vector<double> q{0.0, 0.0};
  const auto r = knn_classify(q, DistanceKind::Euclidean, s, 50);
  CHECK(r.label == 0);
  CHECK(r.confidence == doctest::Approx(1.0 / 1.5));
  CHECK(knn_classify(q, DistanceKind::Euclidean, s, 1).confidence == 1.0);
}

TEST_CASE("store errors") {
  auto s = tiny_store(DistanceKind::ChiSquare);
  const std::vector<double> q{1.0, 1.0}, bad{1.0};
  CHECK_THROWS_AS(knn_classify(q, DistanceKind::Euclidean, s, 3), Error);
  CHECK_THROWS_AS(knn_classify(bad, DistanceKind::ChiSquare, s, 3), Error);
  CHECK_THROWS_AS(s.add({3, "q", 0, {1.0, 1.0}}), Error);
  CHECK_THROWS_AS(s.add({0, "q", 0, {1.0}}), Error);
  const ExemplarStore empty(Track::Upper, DistanceKind::ChiSquare, 3, 2);
  CHECK_THROWS_AS(knn_classify(q, DistanceKind::ChiSquare, empty, 3), Error);
}

TEST_CASE("store warnings flag classes outside five to seven exemplars") {
  const auto w = tiny_store(DistanceKind::ChiSquare).warnings(vocab().upper);
  CHECK(w.size() == 3);
}

TEST_CASE("stores persist in canonical order") {
  const auto s = tiny_store(DistanceKind::Euclidean);
  ByteWriter out;
  s.write(out);
  ByteReader in(out.bytes());
  const auto back = ExemplarStore::read(in);
  CHECK(back.size() == 4);
  CHECK(std::vector<double>(back.matrix().begin(), back.matrix().end()) ==
        std::vector<double>(s.matrix().begin(), s.matrix().end()));
  CHECK(back.kind() == DistanceKind::Euclidean);
}

TEST_CASE("window grid") {
  CHECK(window_count(720, 6, 3) == 239);
  CHECK(window_count(6, 6, 3) == 1);
  CHECK_THROWS_AS(window_count(5, 6, 3), Error);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t W = 1 + rng.below(10), S = 1 + rng.below(5), T = W + rng.below(60);
    const auto K = window_count(T, W, S);
    CHECK((K - 1) * S + W <= T);
    CHECK(K * S + W > T);
  }
}

TEST_CASE("video presence needs min_windows detections and skips background") {
  const std::vector<std::size_t> track{0, 2, 2, 1, 0, 2};
  CHECK(video_nhot(track, vocab().upper, 2) == std::vector<int>{1, 0});
  CHECK(video_nhot(track, vocab().upper, 1) == std::vector<int>{1, 1});
  CHECK(nhot_to_ids(std::vector<int>{0, 1, 1}) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("prediction files round-trip") {
  BodyLanguageSequence a{6, 3, {0, 1, 2}, {1, 0, 1}, {0.5, 0.25, 1.0}, {1.0, 0.125, 0.75}};
  auto b = a;
  b.upper = {2, 2, 2};
  const auto text = format_predictions("c1", a, vocab(), true) + format_predictions("c2", b, vocab(), false);
  const auto back = parse_predictions(text, vocab(), 6, 3);
  REQUIRE(back.size() == 2);
  CHECK(back[0].clip_id == "c1");
  CHECK(back[0].sequence.upper == a.upper);
  CHECK(back[0].sequence.lower_confidence == a.lower_confidence);
  CHECK(back[1].sequence.upper == b.upper);
  CHECK_THROWS_AS(parse_predictions("c1,upper,1,a,1\n", vocab(), 6, 3), Error);
  CHECK_THROWS_AS(parse_predictions("c1,upper,0,zzz,1\n", vocab(), 6, 3), Error);
}

TEST_CASE("predict_sequence ignores exemplar insertion order") {
  std::vector<PoseSequence> seqs;
  for (std::uint64_t s = 0; s < 3; ++s) seqs.push_back(preprocess(oracle::random_clip(s, 60), PipelineConfig{}).sequence);
  const std::vector<std::size_t> gaps{1, 2};
  std::array<HistogramFeaturizer, 2> fz{
      HistogramFeaturizer(train_codebook_set(seqs, JointSubset::upper(), FeatureKind::NTrajPlus, 5, gaps, 10, 1, 30, 0, 1),
                          JointSubset::upper()),
      HistogramFeaturizer(train_codebook_set(seqs, JointSubset::lower(), FeatureKind::NTrajPlus, 5, gaps, 10, 1, 30, 0, 1),
                          JointSubset::lower())};
  std::vector<Exemplar> ex[2];
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t c = 0; c < 3; ++c) {
      const auto f = fz[t].features(seqs[c], 6, 3);
      for (std::size_t k = 0; k < 6; ++k) {
        ex[t].push_back({(c + k) % 3, "c" + std::to_string(c), 3 * k,
                         std::vector<double>(f.begin() + k * fz[t].dim(), f.begin() + (k + 1) * fz[t].dim())});
      }
    }
  }
  auto build = [&](std::size_t t, bool reverse) {
    ExemplarStore s(t == 0 ? Track::Upper : Track::Lower, DistanceKind::ChiSquare, 3, fz[t].dim());
    if (reverse) {
      for (auto it = ex[t].rbegin(); it != ex[t].rend(); ++it) s.add(*it);
    } else {
      for (const auto& e : ex[t]) s.add(e);
    }
    return s;
  };
  const auto u0 = build(0, false), u1 = build(0, true), l0 = build(1, false), l1 = build(1, true);
  const auto a = predict_sequence(seqs[1], {&fz[0], &u0}, {&fz[1], &l0}, 6, 3, 3);
  const auto b = predict_sequence(seqs[1], {&fz[0], &u1}, {&fz[1], &l1}, 6, 3, 3);
  CHECK(a.upper == b.upper);
  CHECK(a.lower == b.lower);
  CHECK(a.upper_confidence == b.upper_confidence);
  CHECK(a.size() == window_count(60, 6, 3));
}

TEST_CASE("histogram features are block-normalized per window") {
  const auto seq = preprocess(oracle::random_clip(7, 40), PipelineConfig{}).sequence;
  const std::vector<PoseSequence> train{seq};
  const std::vector<std::size_t> gaps{1};
  const HistogramFeaturizer fz(
      train_codebook_set(train, JointSubset::lower(), FeatureKind::NTrajPlus, 5, gaps, 10, 1, 30, 0, 1),
      JointSubset::lower());
  const auto f = fz.features(seq, 6, 3);
  CHECK(f.size() == window_count(40, 6, 3) * fz.dim());
  const auto& cb = fz.codebooks();
  for (std::size_t k = 0; k * fz.dim() < f.size(); ++k) {
    for (std::size_t b = 0; b < cb.books().size(); ++b) {
      double s = 0.0;
      for (std::size_t i = cb.block_offset(b); i < cb.block_offset(b + 1); ++i) s += f[k * fz.dim() + i];
      CHECK((s == 0.0 || std::abs(s - 1.0) < 1e-9));
    }
  }
}
