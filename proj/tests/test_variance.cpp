#include <doctest.h>

#include <cmath>

#include "exact_bounds.hpp"
#include "helpers.hpp"
#include "mgshadows/variance.hpp"

using namespace mgs;
using namespace mgs::testing;
using namespace mgs::variance;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Exact values computed once with rational arithmetic and frozen here.
struct Frozen {
  int n, zeta;
  long num, den;
};
constexpr Frozen kFrozen[] = {
    {1, 0, 1, 1},           {2, 0, 3, 2},          {2, 2, 3, 2},
    {3, 2, 5, 3},           {4, 2, 259, 135},      {4, 4, 35, 18},
    {6, 4, 8019, 3500},     {10, 0, 187481507, 38594556},
    {10, 6, 70447915, 23837814},
};

}  // namespace

TEST_CASE("LogBinomialTable reproduces exact binomials") {
  const LogBinomialTable t(60);
  for (int a = 0; a <= 60; ++a)
    for (int k = 0; k <= a; ++k) {
      const double exact = binom_z(a, k).get_d();
      CHECK(rel_err(static_cast<double>(std::exp(t.log_choose(a, k))), exact) <= 1e-13);
    }
  CHECK(t.log_choose(3, 4) == -std::numeric_limits<long double>::infinity());
  CHECK(t.log_multinomial(4, 1, -1, 0) == -std::numeric_limits<long double>::infinity());
}

TEST_CASE("alpha") {
  CHECK(alpha(5, 0, 0, 0) == 1.0);
  CHECK(std::abs(alpha(2, 1, 0, 0) - 1.0) <= 1e-14);
  for (int l1 = 0; l1 <= 6; ++l1)
    for (int l2 = 0; l1 + l2 <= 6; ++l2)
      for (int l3 = 0; l1 + l2 + l3 <= 6; ++l3)
        CHECK(rel_err(alpha(6, l1, l2, l3), alpha_q(6, l1, l2, l3).get_d()) <= 1e-12);
  CHECK_THROWS_AS(alpha(3, 2, 2, 0), ValidationError);
  CHECK_THROWS_AS(alpha(3, -1, 0, 0), ValidationError);
}

TEST_CASE("kappa") {
  // zeta = 0 is the plain multinomial.
  CHECK(kappa(5, 0, 1, 2, 1) == doctest::Approx(multinom_z(5, 1, 2, 1).get_d()).epsilon(1e-14));
  CHECK(kappa(6, 4, 1, 3, 0) == 0.0);
  CHECK(kappa(4, 2, 1, 1, 1) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(kappa_enumerate(4, 2, 1, 1, 1) == 16);
  // Formula against the set-enumeration count for every argument at n <= 4.
  for (int n = 1; n <= 4; ++n)
    for (int z = 0; z <= n; z += 2)
      for (int l1 = 0; l1 <= n; ++l1)
        for (int l2 = 0; l1 + l2 <= n; ++l2)
          for (int l3 = 0; l1 + l2 + l3 <= n; ++l3) {
            const auto count = kappa_enumerate(n, z, l1, l2, l3);
            CHECK(kappa_z(n, z, l1, l2, l3) == count);
            CHECK(std::abs(kappa(n, z, l1, l2, l3) - double(count)) <= 1e-12 * std::max(1.0, double(count)));
          }
  CHECK_THROWS_AS(kappa(4, 1, 0, 0, 0), ValidationError);
  CHECK_THROWS_AS(kappa(2, 4, 0, 0, 0), ValidationError);
}

TEST_CASE("bound_overlap against frozen exact values") {
  for (const auto& f : kFrozen) {
    CHECK(bound_q(f.n, f.zeta) == mpq_class(f.num, f.den));
    CHECK(rel_err(bound_overlap(f.n, f.zeta), double(f.num) / double(f.den)) <= 1e-12);
  }
}

TEST_CASE("bound_overlap against exact rationals for n <= 20") {
  for (int n = 1; n <= 20; ++n)
    for (int z = 0; z <= n; z += 2) CHECK(rel_err(bound_overlap(n, z), bound_q(n, z).get_d()) <= 1e-10);
}

TEST_CASE("bound_gaussian is a second path to b(n, 0)") {
  for (int n : {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 300})
    CHECK(rel_err(bound_overlap(n, 0), bound_gaussian(n)) <= 1e-12);
}

TEST_CASE("bound_overlap is thread independent") {
  for (int z : {0, 10, 40}) CHECK(bound_overlap(120, z, 1) == bound_overlap(120, z, 3));
}

TEST_CASE("b(n, 0) / (sqrt(n) ln n) stays bounded") {
  double first = 0, last = 0, peak = 0;
  for (int n = 16; n <= 200; n += 8) {
    const double r = bound_overlap(n, 0) / (std::sqrt(double(n)) * std::log(double(n)));
    if (n == 16) first = r;
    last = r;
    peak = std::max(peak, r);
  }
  CHECK(peak <= first * 1.0000001);
  CHECK(last < first);
}

TEST_CASE("bound_local") {
  CHECK(bound_local(3, 0) == 1.0);
  CHECK(std::abs(bound_local(2, 2) - 3.0) <= 1e-14);
  CHECK(std::abs(bound_local(4, 4) - 70.0 / 6.0) <= 1e-13);
  CHECK_THROWS_AS(bound_local(4, 3), ValidationError);
}

TEST_CASE("plan_samples") {
  const auto p = plan_samples(0.5, std::exp(-1.0), 1, 1.0);
  CHECK(p.k == 18);
  CHECK(p.l == 96);
  CHECK(p.total() == 18 * 96);
  const auto half = plan_samples(0.25, std::exp(-1.0), 1, 1.0);
  CHECK(half.l == 4 * p.l);
  const auto a1 = plan_samples(0.05, 0.05, 5, 2.0);
  CHECK(a1.k == static_cast<std::uint64_t>(std::ceil(18 * std::log(100.0))));
  CHECK(a1.l == 19200);
  CHECK_THROWS_AS(plan_samples(0, 0.1, 1, 1), ValidationError);
  CHECK_THROWS_AS(plan_samples(0.1, 1.5, 1, 1), ValidationError);
}

TEST_CASE("grids and CSV") {
  const auto g = default_grid();
  CHECK(g.front().n == 4);
  CHECK(g.front().zeta == 0);
  bool has_slow = false;
  for (const auto& p : g) {
    CHECK(p.zeta <= p.n);
    has_slow |= p.n == 1000 && p.zeta == 500;
  }
  CHECK_FALSE(has_slow);
  CHECK(default_grid(true).size() == g.size() + 1);

  const auto p = parse_grid("n=4..1000:log,zeta=0,2,10");
  CHECK(p.size() == 9 * 3 - 2);  // n = 4 and n = 8 drop zeta = 10
  const auto q = parse_grid("n=1");
  REQUIRE(q.size() == 1);
  CHECK(q[0].zeta == 0);
  CHECK(parse_grid("n=2..4,zeta=0,2").size() == 6);
  CHECK_THROWS_AS(parse_grid("zeta=0"), ValidationError);
  CHECK_THROWS_AS(parse_grid("n=3,zeta=1"), ValidationError);
  CHECK_THROWS_AS(parse_grid("n=x"), ValidationError);

  const auto rows = compute_table(q);
  CHECK(format_csv(rows) == "n,zeta,bound\n1,0,1\n");
}

TEST_CASE("exact variance at small n respects the closed-form bounds") {
  Rng rng(51);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 3; ++trial) {
      const CMat rho = density(random_state(n, rng).amp);
      // Majorana products of every even degree.
      for (std::uint64_t s = 0; s < (std::uint64_t{1} << (2 * n)); s += 1 + trial) {
        const int k = __builtin_popcountll(s);
        if (k % 2) continue;
        CHECK(exact_variance_smalln(rho, oracle::majorana_product(n, s)) <= bound_local(n, k) + 1e-9);
      }
      CHECK(exact_variance_smalln(rho, oracle::gaussian_density(random_gaussian(n, rng))) <=
            bound_gaussian(n) + 1e-9);
      for (int z = 0; z <= n; z += 2) {
        const CVec phi = oracle::slater_state(random_slater(n, z, rng));
        const CMat o = phi * CVec::Unit(phi.size(), 0).adjoint();
        CHECK(exact_variance_smalln(rho, o) <= bound_overlap(n, z) + 1e-9);
      }
    }
  CHECK_THROWS_AS(exact_variance_smalln(CMat::Identity(16, 16), CMat::Identity(16, 16)), ResourceError);
}
