#include <doctest.h>

#include <algorithm>

#include "posemo/error.hpp"
#include "posemo/metrics.hpp"
#include "posemo/rng.hpp"

using namespace posemo;

namespace {

std::vector<std::size_t> random_set(Rng& rng) {
  std::vector<std::size_t> s;
  for (std::size_t c = 0; c < 6; ++c) {
    if (rng.bernoulli(0.35)) s.push_back(c);
  }
  return s;
}

}  // namespace

TEST_CASE("per-sample scores by hand") {
  const std::vector<std::size_t> p{1, 2, 3}, t{2, 3, 4, 5};
  const auto s = sample_scores(p, t);
  CHECK(s.accuracy == doctest::Approx(2.0 / 5.0));
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));
  CHECK(s.recall == doctest::Approx(0.5));
  CHECK(s.f1 == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("empty prediction and truth") {
  const std::vector<std::size_t> none, one{3};
  const auto both = sample_scores(none, none);
  CHECK(both.f1 == 1.0);
  CHECK(both.accuracy == 1.0);
  const auto miss = sample_scores(none, one);
  CHECK(miss.precision == 0.0);
  CHECK(miss.f1 == 0.0);
  CHECK(miss.accuracy == 0.0);
}

TEST_CASE("duplicates are ignored") {
  const std::vector<std::size_t> p{1, 1, 2}, t{1, 2};
  CHECK(sample_scores(p, t).f1 == 1.0);
}

TEST_CASE("scores are example averages") {
  const std::vector<std::vector<std::size_t>> pred{{1}, {1, 2}}, truth{{1}, {3}};
  const auto m = multilabel_scores(pred, truth);
  CHECK(m.f1 == doctest::Approx(0.5));
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.accuracy == doctest::Approx(0.5));
  const std::vector<std::vector<std::size_t>> short_truth{{1}};
  CHECK_THROWS_AS(multilabel_scores(pred, short_truth), Error);
}

TEST_CASE("score properties on random sets") {
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_set(rng), t = random_set(rng);
    const auto s = sample_scores(p, t), r = sample_scores(t, p);
    for (double v : {s.accuracy, s.precision, s.recall, s.f1}) CHECK((v >= 0.0 && v <= 1.0));
    CHECK(s.precision == r.recall);
    CHECK(s.recall == r.precision);
    CHECK(s.accuracy == r.accuracy);
    if (s.precision == 0.0 || s.recall == 0.0) CHECK(s.f1 == 0.0);
    const double lo = std::min(s.precision, s.recall), hi = std::max(s.precision, s.recall);
    CHECK(s.f1 >= lo - 1e-12);
    CHECK(s.f1 <= hi + 1e-12);
    CHECK(s.f1 >= s.accuracy - 1e-12);
  }
}

TEST_CASE("binary accuracy") {
  const std::vector<std::size_t> p{0, 1, 1, 0}, t{0, 1, 0, 0};
  CHECK(binary_accuracy(p, t) == 0.75);
  CHECK_THROWS_AS(binary_accuracy(p, std::vector<std::size_t>{1}), Error);
}

TEST_CASE("metric tables render fixed decimals") {
  MetricsTable t;
  t.columns = {"task", "f1"};
  const std::vector<double> v{2.0 / 3.0};
  t.add("emotion", v);
  CHECK(t.csv() == "task,f1\nemotion,0.6667\n");
  CHECK(t.text() == "task         f1\n---------------\nemotion  0.6667\n");
}
