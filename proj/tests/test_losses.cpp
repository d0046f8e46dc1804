#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rareda/losses.hpp"
#include "rareda/numcore/finite_diff.hpp"
#include "support/gradcheck.hpp"

using namespace rareda;

namespace {

double grad_error(const Matrix& analytic, const Matrix& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.values().size(); ++i)
    worst = std::max(worst, oracle::rel_err(analytic.values()[i], numeric.values()[i]));
  return worst;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  return gather_rows(m, perm);
}

}  // namespace

TEST_CASE("cross-entropy value matches a long-double oracle") {
  oracle::Gen g(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(1, 8), k = g.size(2, 8);
    const Matrix z = g.matrix(n, k, 3.0);
    const auto y = g.labels(n, k);
    const LossValue l = cross_entropy(z, y);
    CHECK(l.value == doctest::Approx(oracle::cross_entropy(z, y)).epsilon(1e-12));
    CHECK(l.n_terms == n);
  }
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  oracle::Gen g(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(1, 8), k = g.size(2, 8);
    const Matrix z = g.matrix(n, k, 2.0);
    const auto y = g.labels(n, k);
    const Matrix num = finite_diff_grad([&](const Matrix& m) { return cross_entropy(m, y).value; }, z, 1e-4);
    CHECK(grad_error(cross_entropy(z, y).dlogits, num) <= 1e-4);
  }
}

TEST_CASE("cross-entropy edge cases") {
  const Matrix big{{1000.0, 0.0}, {0.0, 1000.0}};
  const std::vector<std::size_t> y{0, 1};
  CHECK(cross_entropy(big, y).value == doctest::Approx(0.0));
  const std::vector<std::size_t> wrong{1, 0};
  CHECK(cross_entropy(big, wrong).value == doctest::Approx(1000.0));
  const std::vector<std::size_t> out_of_range{0, 2};
  CHECK_THROWS_AS(cross_entropy(big, out_of_range), Error);
  const std::vector<std::size_t> short_labels{0};
  CHECK_THROWS_AS(cross_entropy(big, short_labels), Error);
  // uniform logits: log K
  const std::vector<std::size_t> y0{0};
  CHECK(cross_entropy(Matrix(1, 5, 0.3), y0).value == doctest::Approx(std::log(5.0)));
}

TEST_CASE("domain confusion gradient matches finite differences") {
  oracle::Gen g(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(1, 8);
    const Matrix z = g.matrix(n, 2, 2.0);
    std::vector<DomainLabel> d(n);
    for (auto& v : d) v = g.uniform() < 0.5 ? DomainLabel::source : DomainLabel::target;
    const LossValue l = domain_confusion(z, d);
    const Matrix num = finite_diff_grad([&](const Matrix& m) { return domain_confusion(m, d).value; }, z, 1e-4);
    CHECK(grad_error(l.dlogits, num) <= 1e-4);
  }
  CHECK_THROWS_AS(domain_confusion(Matrix(0, 2), std::vector<DomainLabel>{}), Error);
  CHECK_THROWS_AS(domain_confusion(Matrix(1, 3), std::vector<DomainLabel>{DomainLabel::source}), Error);
}

TEST_CASE("covariance agrees with the two-pass oracle and is symmetric") {
  oracle::Gen g(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.size(2, 20), d = g.size(1, 8);
    Matrix x = g.matrix(n, d);
    const double offset = g.uniform(-1e3, 1e3);
    for (double& v : x.values()) v += offset;
    const Matrix c = covariance(x), o = oracle::covariance(x);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        CHECK(c(i, j) == doctest::Approx(o(i, j)).epsilon(1e-9).scale(1.0));
        CHECK(c(i, j) == c(j, i));
      }
  }
  CHECK_THROWS_AS(covariance(Matrix(1, 3)), Error);
}

TEST_CASE("CORAL value matches the oracle") {
  oracle::Gen g(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = g.size(1, 8);
    const Matrix s = g.matrix(g.size(2, 8), d), t = g.matrix(g.size(2, 8), d, 2.0);
    CHECK(coral_loss(s, t).value == doctest::Approx(oracle::coral(s, t)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(coral_loss(Matrix(3, 2), Matrix(3, 3)), Error);
  CHECK_THROWS_AS(coral_loss(Matrix(1, 2), Matrix(3, 2)), Error);
}

TEST_CASE("CORAL identities") {
  const Matrix s{{0.0}, {2.0}}, t{{0.0}, {0.0}};
  CHECK(std::abs(coral_loss(s, t).value - 1.0) <= 1e-12);

  oracle::Gen g(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = g.size(1, 8);
    const Matrix a = g.matrix(g.size(2, 8), d);
    CHECK(std::abs(coral_loss(a, a).value) <= 1e-12);

    const Matrix b = g.matrix(g.size(2, 8), d);
    const double base = coral_loss(a, b).value;
    std::vector<std::size_t> pa(a.rows()), pb(b.rows());
    std::iota(pa.begin(), pa.end(), 0);
    std::iota(pb.begin(), pb.end(), 0);
    std::shuffle(pa.begin(), pa.end(), g.engine());
    std::shuffle(pb.begin(), pb.end(), g.engine());
    CHECK(std::abs(coral_loss(permute_rows(a, pa), permute_rows(b, pb)).value - base) <= 1e-12);

    Matrix ta = a, tb = b;
    for (std::size_t j = 0; j < d; ++j) {
      const double sa = g.uniform(-5, 5), sb = g.uniform(-5, 5);
      for (std::size_t i = 0; i < ta.rows(); ++i) ta(i, j) += sa;
      for (std::size_t i = 0; i < tb.rows(); ++i) tb(i, j) += sb;
    }
    CHECK(std::abs(coral_loss(ta, tb).value - base) <= 1e-12);
  }
}

TEST_CASE("CORAL gradients for both inputs match finite differences") {
  oracle::Gen g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = g.size(1, 8);
    const Matrix s = g.matrix(g.size(2, 8), d), t = g.matrix(g.size(2, 8), d, 1.5);
    const CoralValue c = coral_loss(s, t);
    const Matrix ns = finite_diff_grad([&](const Matrix& m) { return coral_loss(m, t).value; }, s, 1e-4);
    const Matrix nt = finite_diff_grad([&](const Matrix& m) { return coral_loss(s, m).value; }, t, 1e-4);
    CHECK(grad_error(c.d_source, ns) <= 1e-4);
    CHECK(grad_error(c.d_target, nt) <= 1e-4);
  }
}

TEST_CASE("composite losses") {
  LossValue lc;
  lc.value = 1.25;
  LossValue ld;
  ld.value = 0.5;
  CHECK(composite_dann(lc, ld) == 1.75);
  CHECK(composite_dann(lc, ld, 2.0) == 2.25);
  CHECK(composite_dann(lc, std::nullopt) == 1.25);
  CHECK(composite_coral(lc, 2.0, kDefaultCoralLambda) == 2.25);
  CHECK(composite_coral(lc, 2.0, 0.0) == 1.25);
  CHECK_THROWS_AS(composite_coral(lc, 2.0, -0.1), Error);
  CHECK(kDefaultCoralLambda == 0.5);
}
