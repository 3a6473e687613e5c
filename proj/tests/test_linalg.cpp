#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "fibcheck/expr.hpp"
#include "fibcheck/linalg.hpp"
#include "fibcheck/rng.hpp"
#include "oracles.hpp"

using namespace fibcheck;

namespace {

Matrix random_matrix(Rng& rng, int m, int n, double lo = -1.0, double hi = 1.0) {
  Matrix a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_CASE("nu on pinned matrices") {
  CHECK(nu(Matrix::identity(3)) == Catch::Approx(1.0).margin(1e-12));

  Matrix row(1, 2);
  row(0, 0) = 3.0;
  row(0, 1) = 4.0;
  CHECK(nu(row) == Catch::Approx(5.0).margin(1e-12));

  Matrix tall(3, 2);
  CHECK_THROWS_AS(nu(tall), LinalgError);
}

TEST_CASE("nu agrees with the Monte-Carlo covector oracle") {
  Rng rng(77001);
  for (int trial = 0; trial < 40; ++trial) {
    int m = 1 + static_cast<int>(rng.next_u64() % 3ULL);
    int n = m + static_cast<int>(rng.next_u64() % 3ULL);
    auto a = random_matrix(rng, m, n);
    double mine = nu(a);
    double mc = oracles::nu_monte_carlo(a, 20000, 5000 + static_cast<std::uint64_t>(trial));
    CHECK(std::abs(mine - mc) <= 1e-3);
  }
}

TEST_CASE("nu inverse identity for square matrices") {
  Rng rng(31);
  int done = 0;
  while (done < 200) {
    int n = 2 + static_cast<int>(rng.next_u64() % 3ULL);
    auto a = random_matrix(rng, n, n);
    if (std::abs(determinant(a)) < 1e-3) continue;
    auto sv_inv = singular_values(inverse(a));
    CHECK(nu(a) * sv_inv.front() == Catch::Approx(1.0).margin(1e-9));
    ++done;
  }
}

TEST_CASE("nu composition bounds under linear reparametrization") {
  Rng rng(555);
  int done = 0;
  while (done < 200) {
    int m = 1 + static_cast<int>(rng.next_u64() % 2ULL);
    int n = m + 1 + static_cast<int>(rng.next_u64() % 2ULL);
    auto g = random_matrix(rng, m, n);
    auto a = random_matrix(rng, n, n);
    auto sv_a = singular_values(a);
    if (sv_a.back() < 1e-3) continue;
    double lhs = nu(g * a);
    double base = nu(g);
    CHECK(lhs >= base * sv_a.back() - 1e-9);
    CHECK(lhs <= base * sv_a.front() + 1e-9);
    ++done;
  }
}

TEST_CASE("nu of a one-row Jacobian equals the gradient norm") {
  Rng rng(808);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 4ULL);
    Matrix a(1, n);
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      a(0, j) = rng.uniform(-5.0, 5.0);
      s += a(0, j) * a(0, j);
    }
    CHECK(std::abs(nu(a) - std::sqrt(s)) <= 1e-12 * (1.0 + std::sqrt(s)));
  }
}

TEST_CASE("wedge norm pinned cases") {
  std::vector<std::vector<double>> e12{{1, 0, 0}, {0, 1, 0}};
  CHECK(wedge_norm(e12) == Catch::Approx(1.0).margin(1e-12));

  std::vector<std::vector<double>> dep{{1.0, 2.0, -1.0}, {2.0, 4.0, -2.0}};
  CHECK(wedge_norm(dep) == 0.0);

  // f = (x1, e^{x2}): the full wedge norm equals e^{x2} = |det Df|.
  auto f = parse_map("f1 = x1; f2 = exp(x2)");
  auto jac = jacobian_exprs(f);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    auto j = eval_jacobian(jac, x);
    std::vector<std::vector<double>> rows{{j(0, 0), j(0, 1)}, {j(1, 0), j(1, 1)}};
    CHECK(wedge_norm(rows) == Catch::Approx(std::exp(x[1])).epsilon(1e-12));
  }
}

TEST_CASE("wedge norm against the QR volume oracle") {
  Rng rng(909);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 4ULL);
    int k = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    std::vector<std::vector<double>> vs(static_cast<std::size_t>(k));
    for (auto& v : vs) {
      v.resize(static_cast<std::size_t>(n));
      for (auto& c : v) c = rng.uniform(-2.0, 2.0);
    }
    double mine = wedge_norm(vs);
    double qr = oracles::wedge_norm_qr(vs);
    CHECK(std::abs(mine - qr) <= 1e-9 * (1.0 + qr));
  }
}

TEST_CASE("wedge norm is invariant under shear") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + static_cast<int>(rng.next_u64() % 2ULL);
    std::vector<std::vector<double>> vs(3);
    for (auto& v : vs) {
      v.resize(static_cast<std::size_t>(n));
      for (auto& c : v) c = rng.uniform(-2.0, 2.0);
    }
    double before = wedge_norm(vs);
    double factor = rng.uniform(-3.0, 3.0);
    for (int i = 0; i < n; ++i) vs[0][static_cast<std::size_t>(i)] += factor * vs[1][static_cast<std::size_t>(i)];
    double after = wedge_norm(vs);
    CHECK(std::abs(before - after) <= 1e-9 * (1.0 + std::abs(before)));
  }
}

TEST_CASE("eigenvalues of the shear-map Jacobian at the origin") {
  auto shear = parse_map("f1 = x2 - x1^2; f2 = x1; f3 = x3");
  std::vector<double> x{0.0, 0.0, 0.0};
  auto ev = eigenvalues(jacobian(shear, x));
  REQUIRE(ev.size() == 3);
  CHECK(ev[0].real() == Catch::Approx(-1.0).margin(1e-10));
  CHECK(ev[1].real() == Catch::Approx(1.0).margin(1e-10));
  CHECK(ev[2].real() == Catch::Approx(1.0).margin(1e-10));
  for (const auto& l : ev) CHECK(std::abs(l.imag()) <= 1e-10);
}

TEST_CASE("eigenvalues of triangular matrices are the diagonal") {
  Rng rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 5ULL);
    Matrix a(n, n);
    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      diag[static_cast<std::size_t>(i)] = rng.uniform(-4.0, 4.0);
      a(i, i) = diag[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) a(i, j) = rng.uniform(-4.0, 4.0);
    }
    auto ev = eigenvalues(a);
    std::sort(diag.begin(), diag.end());
    for (int i = 0; i < n; ++i) {
      CHECK(ev[static_cast<std::size_t>(i)].real() ==
            Catch::Approx(diag[static_cast<std::size_t>(i)]).margin(1e-8));
      CHECK(std::abs(ev[static_cast<std::size_t>(i)].imag()) <= 1e-8);
    }
  }
}

TEST_CASE("eigenvalues of the semi-algebraic example Jacobian at (2,0,0)") {
  auto f = parse_map(
      "f1 = sqrt(1 + x1^2) - (x2^2 + x3^2 + 1)*x1\n"
      "f2 = x2\n"
      "f3 = x3");
  std::vector<double> x{2.0, 0.0, 0.0};
  auto ev = eigenvalues(jacobian(f, x));
  REQUIRE(ev.size() == 3);
  // Triangular Jacobian: diagonal is (x1/sqrt(1+x1^2) - 1, 1, 1).
  double expected = 2.0 / std::sqrt(5.0) - 1.0;
  CHECK(ev[0].real() == Catch::Approx(expected).margin(1e-10));
  CHECK(ev[1].real() == Catch::Approx(1.0).margin(1e-10));
  CHECK(ev[2].real() == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("eigenvalue residuals via the characteristic determinant") {
  Rng rng(12345);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 2 + static_cast<int>(rng.next_u64() % 6ULL);
    auto a = random_matrix(rng, n, n, -2.0, 2.0);
    auto ev = eigenvalues(a);
    REQUIRE(static_cast<int>(ev.size()) == n);
    // Trace and determinant identities.
    std::complex<double> sum = 0.0, prod = 1.0;
    for (auto l : ev) {
      sum += l;
      prod *= l;
    }
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += a(i, i);
    CHECK(std::abs(sum.real() - tr) <= 1e-8 * (1.0 + std::abs(tr)));
    CHECK(std::abs(sum.imag()) <= 1e-8);
    double det = determinant(a);
    CHECK(std::abs(prod.real() - det) <= 1e-6 * (1.0 + std::abs(det)));
    CHECK(std::abs(prod.imag()) <= 1e-6 * (1.0 + std::abs(det)));
  }
}

TEST_CASE("tangent projection pinned cases and oracle") {
  std::vector<double> g{1.0, 2.0, 3.0};

  // No constraints: gradient unchanged.
  auto unchanged = tangent_project(g, std::vector<std::vector<double>>{});
  CHECK(unchanged == g);

  // grad = e1 constrained by {e1} projects to zero.
  Matrix e1(1, 3);
  e1(0, 0) = 1.0;
  std::vector<double> ge1{1.0, 0.0, 0.0};
  auto z = tangent_project(ge1, e1);
  for (double c : z) CHECK(std::abs(c) <= 1e-15);

  // Rank-deficient constraints are rejected.
  Matrix bad(2, 3);
  bad(0, 0) = 1.0;
  bad(1, 0) = 1.0;
  CHECK_THROWS_AS(tangent_project(g, bad), LinalgError);

  Rng rng(321);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 3 + static_cast<int>(rng.next_u64() % 3ULL);
    int k = 1 + static_cast<int>(rng.next_u64() % 2ULL);
    auto c = random_matrix(rng, k, n);
    if (nu(c) <= 1e-6) continue;
    std::vector<double> grad_vec(static_cast<std::size_t>(n));
    for (auto& v : grad_vec) v = rng.uniform(-3.0, 3.0);
    auto mine = tangent_project(grad_vec, c);
    auto oracle = oracles::project_normal_equations(grad_vec, c);
    double scale = norm2(grad_vec) + 1.0;
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(mine[static_cast<std::size_t>(i)] - oracle[static_cast<std::size_t>(i)]) <= 1e-9 * scale);
    // Orthogonality to every constraint row.
    for (int row = 0; row < k; ++row) {
      double dp = 0.0, rn = 0.0;
      for (int i = 0; i < n; ++i) {
        dp += mine[static_cast<std::size_t>(i)] * c(row, i);
        rn += c(row, i) * c(row, i);
      }
      CHECK(std::abs(dp) <= 1e-9 * (1.0 + std::sqrt(rn) * scale));
    }
  }
}

TEST_CASE("null space basis is orthonormal and annihilated by constraints") {
  Rng rng(654);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 3 + static_cast<int>(rng.next_u64() % 3ULL);
    int k = 1 + static_cast<int>(rng.next_u64() % 2ULL);
    auto c = random_matrix(rng, k, n);
    if (nu(c) <= 1e-6) continue;
    auto basis = null_space_basis(c);
    REQUIRE(basis.rows() == n);
    REQUIRE(basis.cols() == n - k);
    auto prod = c * basis;
    CHECK(prod.max_abs() <= 1e-10);
    auto gram = basis.transposed() * basis;
    for (int i = 0; i < n - k; ++i)
      for (int j = 0; j < n - k; ++j)
        CHECK(gram(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
  }
}
