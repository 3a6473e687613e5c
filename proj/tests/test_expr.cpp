#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fibcheck/expr.hpp"
#include "fibcheck/rng.hpp"
#include "oracles.hpp"

using namespace fibcheck;

namespace {
const char* kShearMap = "f1 = x2 - x1^2; f2 = x1; f3 = x3";
const char* kPzMap = "f1 = x1 - 3*x1^3*x2^2 + 2*x1^4*x2^3 + x2*x3";
const char* kKingH = "f1 = x2*(2*x1^2*x2^2 - 9*x1*x2 + 12)";
}  // namespace

TEST_CASE("parse_map dimensions and shapes") {
  auto shear = parse_map(kShearMap);
  CHECK(shear.n_in == 3);
  CHECK(shear.n_out() == 3);

  auto ident = parse_map("f1 = x1");
  CHECK(ident.n_in == 1);
  CHECK(ident.n_out() == 1);

  auto pz = parse_map(kPzMap);
  CHECK(pz.n_in == 3);
  CHECK(pz.n_out() == 1);
}

TEST_CASE("parse_map error reporting") {
  CHECK_THROWS_AS(parse_map(""), ExprError);
  CHECK_THROWS_AS(parse_map("f1 = x1 +"), ExprError);
  CHECK_THROWS_AS(parse_map("f1 = sin(x1)"), ExprError);
  CHECK_THROWS_AS(parse_map("f1 = y"), ExprError);
  CHECK_THROWS_AS(parse_map("f1 = x1; f3 = x2"), ExprError);   // f2 missing
  CHECK_THROWS_AS(parse_map("f1 = x1; f1 = x2"), ExprError);   // duplicate
  CHECK_THROWS_AS(parse_map("f1 = x1^(-2)"), ExprError);       // negative power
  CHECK_THROWS_AS(parse_map("f1 = x1^x2"), ExprError);         // non-literal power

  try {
    parse_map("f1 = x1\nf2 = x1 + !");
    FAIL("expected a syntax error");
  } catch (const ExprError& e) {
    CHECK(e.line() == 2);
    CHECK(e.col() >= 9);
  }
}

TEST_CASE("evaluation of the worked maps") {
  auto shear = parse_map(kShearMap);
  std::vector<double> zero{0.0, 0.0, 0.0};
  auto at_zero = shear.eval(zero);
  CHECK(at_zero == std::vector<double>{0.0, 0.0, 0.0});

  auto king = parse_map(kKingH);
  std::vector<double> ones{1.0, 1.0};
  CHECK(king.components[0].eval(ones) == 5.0);  // 2 - 9 + 12 = 5

  // s(t) = sqrt(1+t^2) + t at t = 0.
  auto s = parse_expr("sqrt(1 + x1^2) + x1");
  std::vector<double> t0{0.0};
  CHECK(s.eval(t0) == 1.0);
}

TEST_CASE("domain guards fire at evaluation") {
  auto inv = parse_map("f1 = 1/x1");
  std::vector<double> zero{0.0};
  CHECK_THROWS_AS(inv.eval(zero), EvalError);
  std::vector<double> two{2.0};
  CHECK(inv.eval(two)[0] == 0.5);

  auto root = parse_map("f1 = sqrt(x1)");
  std::vector<double> neg{-1.0};
  CHECK_THROWS_AS(root.eval(neg), EvalError);
  CHECK(!root.try_eval(neg).has_value());

  // Rational constants fold at parse; division guard still applies to exprs.
  auto half = parse_expr("3/2");
  std::vector<double> any{1.0};
  CHECK(half.eval(any) == 1.5);
  CHECK_THROWS_AS(parse_map("f1 = x1/0"), ExprError);
}

TEST_CASE("exact gradients at pinned points") {
  auto e = parse_expr("x2 - x1^2");
  std::vector<double> p{3.0, 7.0};
  auto g = grad(e, 2, p);
  CHECK(g[0] == -6.0);
  CHECK(g[1] == 1.0);

  // The escape curve (l, 1/l, 0) of the three-variable polynomial with a
  // vanishing gradient tail: at l = 100 the gradient is exactly (0, 0, 0.01).
  auto pz = parse_map(kPzMap);
  std::vector<double> q{100.0, 0.01, 0.0};
  auto gpz = grad(pz.components[0], 3, q);
  CHECK(gpz[0] == 0.0);
  CHECK(gpz[1] == 0.0);
  CHECK(gpz[2] == 0.01);
}

TEST_CASE("jacobian matches finite differences on the shear map") {
  auto shear = parse_map(kShearMap);
  std::vector<double> x{0.0, 2.0, -1.0};
  auto j = jacobian(shear, x);
  double expected[3][3] = {{0, 1, 0}, {1, 0, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) CHECK(j(i, c) == Catch::Approx(expected[i][c]).margin(1e-12));

  for (int i = 0; i < 3; ++i) {
    auto fd = oracles::fd_gradient(shear.components[static_cast<std::size_t>(i)], x);
    for (int c = 0; c < 3; ++c) CHECK(j(i, c) == Catch::Approx(fd[static_cast<std::size_t>(c)]).margin(1e-8));
  }
}

TEST_CASE("gradients agree with central differences on random expressions") {
  Rng rng(20260810);
  int done = 0;
  while (done < 1000) {
    int n = 1 + static_cast<int>(rng.next_u64() % 3ULL);
    auto e = oracles::random_guarded_expr(rng, n, 3);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& c : x) c = rng.uniform(-2.0, 2.0);
    auto v = e.try_eval(x);
    if (!v || !std::isfinite(*v) || std::abs(*v) > 1e6) continue;
    std::vector<double> g(static_cast<std::size_t>(n));
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      auto gv = e.diff(i).try_eval(x);
      if (!gv || !std::isfinite(*gv) || std::abs(*gv) > 1e6) ok = false;
      else g[static_cast<std::size_t>(i)] = *gv;
    }
    if (!ok) continue;
    auto fd = oracles::fd_gradient(e, x);
    for (int i = 0; i < n; ++i) {
      double gi = g[static_cast<std::size_t>(i)];
      REQUIRE(std::abs(gi - fd[static_cast<std::size_t>(i)]) <= 1e-4 * (1.0 + std::abs(gi)));
    }
    ++done;
  }
}

TEST_CASE("repeated differentiation annihilates polynomials") {
  Rng rng(99);
  auto poly = parse_expr("x1^4 - 3*x1^2*x2 + x2^3 + 7");  // degree 4
  Expr d = poly;
  for (int k = 0; k < 5; ++k) d = d.diff(k % 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    CHECK(d.eval(x) == 0.0);
  }
}

TEST_CASE("print/parse round trip evaluates identically") {
  Rng rng(4242);
  const char* sources[] = {
      kShearMap,
      kPzMap,
      kKingH,
      "f1 = x1; f2 = exp(x2)",
      "f1 = sqrt(1 + x3^2) + x3; f2 = x2/(x1^2 + 1); f3 = -x1^3 + 2/3",
  };
  for (const char* src : sources) {
    auto m = parse_map(src);
    auto m2 = parse_map(print_map(m));
    REQUIRE(m2.n_in == m.n_in);
    REQUIRE(m2.n_out() == m.n_out());
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(static_cast<std::size_t>(m.n_in));
      for (auto& c : x) c = rng.uniform(-3.0, 3.0);
      auto a = m.try_eval(x);
      auto b = m2.try_eval(x);
      REQUIRE(a.has_value() == b.has_value());
      if (a) {
        for (std::size_t i = 0; i < a->size(); ++i) REQUIRE((*a)[i] == (*b)[i]);
      }
    }
  }
}

TEST_CASE("linear composition rebuilds the expected map") {
  auto f = parse_map("f1 = x1; f2 = exp(x2)");
  Matrix a(2, 2);
  a(0, 0) = 0.5;
  a(0, 1) = -0.5;
  a(1, 0) = 0.5;
  a(1, 1) = 0.5;
  auto g = compose_linear_left(a, f);
  std::vector<double> x{1.0, 0.0};
  auto gv = g.eval(x);
  CHECK(gv[0] == Catch::Approx(0.5 * (1.0 - 1.0)));
  CHECK(gv[1] == Catch::Approx(0.5 * (1.0 + 1.0)));

  auto fr = compose_linear_right(f, a);
  std::vector<double> y{2.0, 4.0};
  auto fv = fr.eval(y);
  CHECK(fv[0] == Catch::Approx(0.5 * 2.0 - 0.5 * 4.0));
  CHECK(fv[1] == Catch::Approx(std::exp(0.5 * 2.0 + 0.5 * 4.0)));
}

TEST_CASE("component selection keeps ambient dimension") {
  auto shear = parse_map(kShearMap);
  std::vector<int> idx{2};
  auto sub = shear.select(idx);
  CHECK(sub.n_in == 3);
  CHECK(sub.n_out() == 1);
  std::vector<double> x{5.0, 1.0, 2.0};
  CHECK(sub.eval(x)[0] == 5.0);
}
