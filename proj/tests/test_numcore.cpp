#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "rareda/numcore/finite_diff.hpp"
#include "rareda/numcore/kernels.hpp"
#include "rareda/numcore/matrix.hpp"
#include "rareda/numcore/rng.hpp"
#include "support/oracles.hpp"

using namespace rareda;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

struct BackendGuard {
  ~BackendGuard() { kernels::reset_backend(); }
};

}  // namespace

TEST_CASE("matmul variants agree with a triple loop") {
  oracle::Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = g.size(1, 9), k = g.size(1, 13), m = g.size(1, 11);
    const Matrix a = g.matrix(n, k), b = g.matrix(k, m);
    CHECK(max_abs_diff(matmul(a, b), oracle::matmul(a, b)) < 1e-12);
    const Matrix at = g.matrix(k, n);
    CHECK(max_abs_diff(matmul_tn(at, b), oracle::matmul(oracle::transpose(at), b)) < 1e-12);
    const Matrix bt = g.matrix(m, k);
    CHECK(max_abs_diff(matmul_nt(a, bt), oracle::matmul(a, oracle::transpose(bt))) < 1e-12);
  }
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), Error);
  CHECK_THROWS_AS(matmul_tn(Matrix(2, 3), Matrix(3, 3)), Error);
  CHECK_THROWS_AS(matmul_nt(Matrix(2, 3), Matrix(2, 2)), Error);
}

TEST_CASE("every available kernel backend matches the scalar reference") {
  BackendGuard guard;
  const auto& ref = kernels::table_for(kernels::Backend::scalar);
  oracle::Gen g(5);
  for (auto b : {kernels::Backend::avx2, kernels::Backend::neon}) {
    if (!kernels::backend_available(b)) continue;
    CAPTURE(kernels::backend_name(b));
    const auto& t = kernels::table_for(b);
    for (std::size_t n = 0; n < 70; ++n) {
      std::vector<double> x(n), y(n);
      for (auto& v : x) v = g.normal();
      for (auto& v : y) v = g.normal();
      const double alpha = g.normal();

      const double d_ref = ref.dot(x.data(), y.data(), n);
      const double d = t.dot(x.data(), y.data(), n);
      CHECK(std::abs(d - d_ref) <= 1e-13 * (1.0 + std::abs(d_ref)) * static_cast<double>(n + 1));

      // FMA rounds once where the scalar code rounds twice
      auto y1 = y, y2 = y;
      ref.axpy(n, alpha, x.data(), y1.data());
      t.axpy(n, alpha, x.data(), y2.data());
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y[i]) + std::abs(alpha * x[i])));
      }

      std::vector<double> s1(n), s2(n);
      ref.scale(n, alpha, x.data(), s1.data());
      t.scale(n, alpha, x.data(), s2.data());
      CHECK(s1 == s2);
    }
  }
}

TEST_CASE("matmul results are close across backends") {
  BackendGuard guard;
  oracle::Gen g(8);
  const Matrix a = g.matrix(17, 23), b = g.matrix(23, 19);
  kernels::select_backend(kernels::Backend::scalar);
  const Matrix ref = matmul(a, b);
  for (auto be : {kernels::Backend::avx2, kernels::Backend::neon}) {
    if (!kernels::backend_available(be)) continue;
    kernels::select_backend(be);
    CHECK(max_abs_diff(matmul(a, b), ref) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, transpose(b)), ref) < 1e-12);
  }
}

TEST_CASE("selecting an unavailable backend fails") {
  BackendGuard guard;
  for (auto b : {kernels::Backend::avx2, kernels::Backend::neon}) {
    if (!kernels::backend_available(b)) CHECK_THROWS_AS(kernels::select_backend(b), Error);
  }
  CHECK(kernels::backend_available(kernels::Backend::scalar));
}

TEST_CASE("softmax rows are stable and sum to one") {
  Matrix z{{1000.0, 1001.0, 999.0}, {-5.0, 0.0, 5.0}};
  const Matrix p = softmax_rows(z);
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (double v : p.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(p(0, 1) > p(0, 0));
  CHECK(p.all_finite());
  Matrix bad{{1.0, NAN}};
  CHECK_THROWS_AS(softmax_rows(bad), Error);
}

TEST_CASE("gather_rows and vstack") {
  Matrix a{{1, 2}, {3, 4}, {5, 6}};
  const std::vector<std::size_t> idx{2, 0, 2};
  const Matrix g = gather_rows(a, idx);
  CHECK(g == Matrix{{5, 6}, {1, 2}, {5, 6}});
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(gather_rows(a, bad), Error);
  CHECK(vstack(a, Matrix{{7, 8}}) == Matrix{{1, 2}, {3, 4}, {5, 6}, {7, 8}});
  CHECK_THROWS_AS(vstack(a, Matrix(1, 3)), Error);
}

TEST_CASE("rng streams are reproducible and independent by tag") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
  CHECK(derive_seed(1, "x", 0) != derive_seed(1, "x", 1));
  CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
  // FNV-1a reference values
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng draws have the right ranges and moments") {
  RngStream r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);

  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[r.index(7)];
  for (int h : hits) CHECK(std::abs(h - 10000) < 500);
  CHECK_THROWS_AS(r.index(0), Error);
}

TEST_CASE("shuffle is a permutation") {
  oracle::Gen g(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> v(g.size(0, 40));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    RngStream r(static_cast<std::uint64_t>(trial));
    r.shuffle(std::span<std::size_t>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("finite differences recover an analytic gradient") {
  // f(x) = Σ sin(x_i)·x_i², ∂f/∂x_i = cos(x_i)x_i² + 2 x_i sin(x_i)
  oracle::Gen g(21);
  const Matrix x = g.matrix(3, 4);
  auto f = [](const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += std::sin(v) * v * v;
    return s;
  };
  Matrix exact(3, 4);
  for (std::size_t i = 0; i < exact.values().size(); ++i) {
    const double v = x.values()[i];
    exact.values()[i] = std::cos(v) * v * v + 2 * v * std::sin(v);
  }
  CHECK(max_relative_error(exact, finite_diff_grad(f, x, 1e-5)) < 1e-8);
  CHECK_THROWS_AS(finite_diff_grad(f, x, 0.0), Error);
  CHECK_THROWS_AS(finite_diff_grad([](const Matrix&) { return NAN; }, x, 1e-4), Error);
}
