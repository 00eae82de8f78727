#pragma once

// Variance bounds for the matchgate-shadow estimators and the median-of-means
// sample plan built from them.

#include <cstdint>
#include <string>
#include <vector>

#include "mgshadows/core.hpp"

namespace mgs::variance {

// ln(k!) for k in [0, max]; ln C and ln multinomials by table lookup.
class LogBinomialTable {
 public:
  explicit LogBinomialTable(int max);

  int max() const { return static_cast<int>(lf_.size()) - 1; }
  long double log_factorial(int k) const;
  // -inf outside the support (k < 0 or k > a).
  long double log_choose(int a, int k) const;
  // ln multinomial(a; k1, k2, k3, a - k1 - k2 - k3); -inf if any part < 0.
  long double log_multinomial(int a, int k1, int k2, int k3) const;
  const long double* data() const { return lf_.data(); }

 private:
  std::vector<long double> lf_;
};

double alpha(int n, int l1, int l2, int l3);
double kappa(int n, int zeta, int l1, int l2, int l3);
long double log_alpha(const LogBinomialTable& t, int n, int l1, int l2, int l3);
long double log_kappa(const LogBinomialTable& t, int n, int zeta, int l1, int l2, int l3);

// b(n, zeta): bound on E|o|^2 for O = |phi><0| with a zeta-fermion Slater
// |phi> (zeta even).
double bound_overlap(int n, int zeta, int threads = 1);
// The zeta = 0 bound written directly as a squared multinomial sum; kept as
// a separate code path for cross-checking bound_overlap(n, 0).
double bound_gaussian(int n);
// C(2n, k) / C(n, k/2) for a degree-k Majorana product.
double bound_local(int n, int k);

struct EstimationPlan {
  double eps = 0;
  double delta = 0;
  int observables = 1;
  double b_max = 0;
  std::uint64_t k = 0;  // number of blocks
  std::uint64_t l = 0;  // block size
  std::uint64_t total() const { return k * l; }
};

EstimationPlan plan_samples(double eps, double delta, int observables, double b_max);

// Exact Var[o] of the single-shot estimator by enumeration (n <= 3).
double exact_variance_smalln(const CMat& rho, const CMat& o);

// ------------------------------------------------------------- grids

struct GridPoint {
  int n = 0;
  int zeta = 0;
};

struct GridRow {
  int n = 0;
  int zeta = 0;
  double bound = 0;
};

// n in {4, 8, ..., 512, 1000}, zeta in {0,2,10,50,100,200,500} with zeta <= n.
// The (1000, 500) point is only included on request.
std::vector<GridPoint> default_grid(bool include_slow = false);
// Parses "n=4..1000:log,zeta=0,2,10" or "n=1,2,3,zeta=0"; see README.
std::vector<GridPoint> parse_grid(const std::string& spec);
std::vector<GridRow> compute_table(const std::vector<GridPoint>& grid, int threads = 1);
std::string format_csv(const std::vector<GridRow>& rows);

}  // namespace mgs::variance
