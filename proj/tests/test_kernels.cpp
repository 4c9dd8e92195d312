#include <doctest.h>

#include <cmath>
#include <limits>

#include "posemo/kernels.hpp"
#include "posemo/rng.hpp"

using namespace posemo;

namespace {

std::vector<double> random_matrix(std::size_t rows, std::size_t dim, Rng& rng, bool integer = false) {
  std::vector<double> m(rows * dim);
  for (auto& v : m) v = integer ? static_cast<double>(rng.below(3)) : rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("parallel kernels are bit-identical to the serial references") {
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    const std::size_t dim = 1 + rng.below(12), m = 1 + rng.below(300), n = 1 + rng.below(40);
    const bool integer = i % 3 == 0;
    const auto pts = random_matrix(m, dim, rng, integer), cen = random_matrix(n, dim, rng, integer);
    std::vector<std::uint32_t> a1(m), a2(m);
    std::vector<double> d1(m), d2(m);
    kernels::serial::assign_nearest(pts, cen, dim, a1, d1);
    kernels::parallel::assign_nearest(pts, cen, dim, a2, d2);
    CHECK(a1 == a2);
    CHECK(d1 == d2);
    std::vector<double> o1(m * n), o2(m * n);
    kernels::serial::pairwise_chi2(pts, cen, dim, o1);
    kernels::parallel::pairwise_chi2(pts, cen, dim, o2);
    CHECK(o1 == o2);
    kernels::serial::pairwise_sq_euclidean(pts, cen, dim, o1);
    kernels::parallel::pairwise_sq_euclidean(pts, cen, dim, o2);
    CHECK(o1 == o2);
  }
}

TEST_CASE("kernel values against direct formulas") {
  const std::vector<double> q{1.0, 0.0, 2.0}, r{0.0, 0.0, 1.0, 1.0, 0.0, 2.0};
  std::vector<double> chi(2), sq(2);
  kernels::serial::pairwise_chi2(q, r, 3, chi);
  kernels::serial::pairwise_sq_euclidean(q, r, 3, sq);
  CHECK(chi[0] == doctest::Approx(1.0 + 1.0 / 3.0));
  CHECK(chi[1] == 0.0);
  CHECK(sq[0] == 2.0);
  CHECK(sq[1] == 0.0);
}

TEST_CASE("nearest-centroid ties go to the lower index") {
  const std::vector<double> pts{1.0}, cen{0.0, 2.0, 1.0, 1.0};
  std::vector<std::uint32_t> a(1);
  std::vector<double> d(1);
  kernels::parallel::assign_nearest(pts, cen, 1, a, d);
  CHECK(a[0] == 2);
  CHECK(d[0] == 0.0);
  const std::vector<double> mid{1.0}, two{0.0, 2.0};
  kernels::serial::assign_nearest(mid, two, 1, a, d);
  CHECK(a[0] == 0);
}
