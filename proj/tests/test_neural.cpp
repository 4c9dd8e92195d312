#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "posemo/neural.hpp"

using namespace posemo;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

}  // namespace

TEST_CASE("gradient checks over twenty seeds per network") {
  const auto r = oracle::gradient_suite(20, 41);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("softmax sums to one and survives large logits") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto z = random_values(1 + rng.below(30), rng, 800.0);
    const auto p = softmax(z);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("binary cross-entropy matches its definition") {
  const std::vector<double> z{0.3, -2.0}, y{1.0, 0.0};
  const double want = -(std::log(sigmoid(0.3)) + std::log(1.0 - sigmoid(-2.0))) / 2.0;
  CHECK(bce_with_logits(z, y) == doctest::Approx(want).epsilon(1e-12));
  const std::vector<double> big{800.0}, one{0.0};
  CHECK(std::isfinite(bce_with_logits(big, one)));
}

TEST_CASE("recurrent state stays finite over long bounded input") {
  Rng rng(8);
  RecurrentNet net({3, 16, 2, 1.0}, 4);
  for (auto& p : net.params()) p *= 20.0;
  const std::size_t steps = 10000;
  const SequenceInput x{steps, random_values(steps * 3, rng)};
  std::vector<double> h, c;
  net.trace(x, h, c);
  CHECK(h.size() == steps * 16);
  CHECK(std::all_of(h.begin(), h.end(), [](double v) { return std::isfinite(v) && std::abs(v) <= 1.0; }));
  CHECK(std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); }));
  for (double p : net.forward(x)) CHECK((p > 0.0 && p < 1.0));
}

TEST_CASE("networks round-trip through their byte format") {
  ByteWriter out;
  const ConvEncoder enc({2, 8, 8, {3}, 4}, 9);
  const RecurrentNet rnn({3, 5, 2, 0.25}, 9);
  const Conv1DNet cnn({3, 6, 2, 0.5}, 9);
  enc.write(out);
  rnn.write(out);
  cnn.write(out);
  ByteReader in(out.bytes());
  CHECK(ConvEncoder::read(in).params() == enc.params());
  const auto r = RecurrentNet::read(in);
  CHECK(r.params() == rnn.params());
  CHECK(r.shape().input_scale == 0.25);
  CHECK(Conv1DNet::read(in).params() == cnn.params());
  CHECK(in.at_end());
}

TEST_CASE("initialization is a function of the seed") {
  CHECK(ConvEncoder({2, 8, 8, {3}, 4}, 1).params() == ConvEncoder({2, 8, 8, {3}, 4}, 1).params());
  CHECK(ConvEncoder({2, 8, 8, {3}, 4}, 1).params() != ConvEncoder({2, 8, 8, {3}, 4}, 2).params());
}

TEST_CASE("shape errors") {
  const RecurrentNet rnn({3, 5, 2, 1.0}, 1);
  CHECK_THROWS_AS(rnn.forward({2, std::vector<double>(5)}), Error);
  CHECK_THROWS_AS(rnn.forward({0, {}}), Error);
  const ConvEncoder enc({2, 8, 8, {3}, 4}, 1);
  CHECK_THROWS_AS(enc.logits(std::vector<double>(10)), Error);
}

TEST_CASE("training learns a separable sequence task and is reproducible") {
  Rng rng(12);
  std::vector<SequenceInput> xs;
  std::vector<std::vector<double>> ys;
  for (int i = 0; i < 60; ++i) {
    const bool pos = i % 2 == 0;
    auto v = random_values(4 * 2, rng, 0.2);
    for (std::size_t t = 0; t < 4; ++t) v[t * 2] += pos ? 0.8 : -0.8;
    xs.push_back({4, v});
    ys.push_back({pos ? 1.0 : 0.0});
  }
  TrainSpec spec;
  spec.lr = 0.1;
  spec.epochs = 30;
  spec.batch = 8;
  spec.seed = 3;
  auto fit = [&](auto net) {
    train(net, std::span<const SequenceInput>(xs), std::span<const std::vector<double>>(ys), spec);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) ok += (net.forward(xs[i])[0] >= 0.5) == (ys[i][0] == 1.0);
    return std::pair(ok, net.params());
  };
  const auto [ok_rnn, p_rnn] = fit(RecurrentNet({2, 8, 1, 1.0}, 1));
  const auto [ok_cnn, p_cnn] = fit(Conv1DNet({2, 8, 1, 1.0}, 1));
  CHECK(ok_rnn >= 57);
  CHECK(ok_cnn >= 57);
  CHECK(fit(RecurrentNet({2, 8, 1, 1.0}, 1)).second == p_rnn);
}

TEST_CASE("divergence is reported as an error") {
  // Contradictory targets keep the gradient alive while momentum drives the
  // weights past the largest double.
  std::vector<SequenceInput> xs{{1, {1.0}}, {1, {1.0}}};
  std::vector<std::vector<double>> ys{{1.0}, {0.0}};
  RecurrentNet net({1, 2, 1, 1.0}, 1);
  TrainSpec spec;
  spec.lr = 1e308;
  spec.clip_norm = 0.0;
  spec.batch = 1;
  spec.epochs = 50;
  try {
    train(net, std::span<const SequenceInput>(xs), std::span<const std::vector<double>>(ys), spec);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(exit_status(e.code()) == 4);
  }
}
