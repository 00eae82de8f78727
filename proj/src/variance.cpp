#include "mgshadows/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mgshadows/oracle.hpp"
#include "mgshadows/parallel.hpp"

namespace mgs::variance {

namespace {

constexpr long double kNegInf = -std::numeric_limits<long double>::infinity();
// Addends this many nats below the running maximum are dropped. With at most
// ~1e9 addends the dropped mass stays below e^-39 of the total.
constexpr long double kPruneNats = 60.0L;
// The inner j-sum stops once terms fall this far below its own peak.
constexpr double kInnerNats = 46.0;

// Online max-shifted accumulator of positive terms given by their logs. The
// logs are long double (they reach ~1e4 at n = 1000); the shifted
// differences are small, so double-precision exp suffices for them.
struct LogAccumulator {
  long double m = kNegInf;
  long double s = 0.0L;

  void add(long double logv) {
    if (logv == kNegInf) return;
    if (logv > m) {
      s = s * std::exp(static_cast<double>(m - logv)) + 1.0L;
      m = logv;
    } else {
      s += std::exp(static_cast<double>(logv - m));
    }
  }
  void merge(const LogAccumulator& o) {
    if (o.m == kNegInf) return;
    if (o.m > m) {
      s = s * std::exp(static_cast<double>(m - o.m)) + o.s;
      m = o.m;
    } else {
      s += o.s * std::exp(static_cast<double>(o.m - m));
    }
  }
  long double log_value() const { return m == kNegInf ? kNegInf : m + std::log(s); }
};

void check_triple(int n, int l1, int l2, int l3) {
  require(n >= 0 && l1 >= 0 && l2 >= 0 && l3 >= 0 && l1 + l2 + l3 <= n,
          "need l1, l2, l3 >= 0 with l1 + l2 + l3 <= n");
}

void check_zeta(int n, int zeta) {
  require(zeta >= 0 && zeta <= n, "need 0 <= zeta <= n");
  require(zeta % 2 == 0, "zeta must be even (pad odd Slater determinants first)");
}

// Inner term of kappa without the 2^zeta prefactor.
inline long double log_kappa_term(const LogBinomialTable& t, int n, int zeta, int l1, int l2,
                                  int l3, int j) {
  const int h = zeta / 2;
  return t.log_choose(zeta, 2 * j) + t.log_multinomial(n - zeta, l1 - h + j, l2 - h + j, l3 - j);
}

struct JRange {
  int lo, hi;
};

inline JRange j_range(int n, int zeta, int l1, int l2, int l3) {
  const int h = zeta / 2;
  const int lo = std::max(0, h - std::min(l1, l2));
  const int hi = std::min(std::min(h, l3), n - l1 - l2 - l3);
  return {lo, hi};
}

// Precomputed tables for the hot loop of bound_overlap.
struct OverlapKernel {
  int n, zeta, h;
  const long double* lf;
  std::vector<long double> g;    // ln(2k)! - ln k!
  std::vector<long double> lc;   // ln[C(2n, 2k) / C(n, k)]
  std::vector<long double> lcz;  // ln C(zeta, 2j)
  long double base, ln2z, log_terms;

  OverlapKernel(const LogBinomialTable& t, int n_, int zeta_)
      : n(n_), zeta(zeta_), h(zeta_ / 2), lf(t.data()) {
    g.resize(n + 1);
    lc.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      g[k] = lf[2 * k] - lf[k];
      lc[k] = t.log_choose(2 * n, 2 * k) - t.log_choose(n, k);
    }
    lcz.resize(h + 1);
    for (int j = 0; j <= h; ++j) lcz[j] = t.log_choose(zeta, 2 * j);
    base = lf[n] - lf[2 * n];
    ln2z = zeta * std::log(2.0L);
    log_terms = std::log(static_cast<long double>(h + 1));
  }

  // ln alpha: the multinomial ratio collapses to sums of g.
  long double log_alpha(int l1, int l2, int l3) const {
    return base + g[l1] + g[l2] + g[l3] + g[n - l1 - l2 - l3] + lc[l1 + l3] + lc[l2 + l3];
  }
  long double term(int l1, int l2, int l3, int j) const {
    return lcz[j] + lf[n - zeta] - lf[l1 - h + j] - lf[l2 - h + j] - lf[l3 - j] -
           lf[n - l1 - l2 - l3 - j];
  }

  // log kappa with the j-sum started at the (unimodal) peak, walked to from
  // `hint`, and truncated once terms drop kInnerNats below the peak. The
  // terms are log-concave in j, so the truncated tails are geometrically
  // small. Returns -inf for an empty range, or when (peak term) x (term
  // count) lies below `skip_below`.
  long double log_kappa(int l1, int l2, int l3, int& hint, long double skip_below) const {
    const auto r = j_range(n, zeta, l1, l2, l3);
    if (r.lo > r.hi) return kNegInf;
    int j = std::clamp(hint, r.lo, r.hi);
    long double v = term(l1, l2, l3, j);
    while (j < r.hi) {
      const long double w = term(l1, l2, l3, j + 1);
      if (w <= v) break;
      v = w;
      ++j;
    }
    while (j > r.lo) {
      const long double w = term(l1, l2, l3, j - 1);
      if (w <= v) break;
      v = w;
      --j;
    }
    hint = j;
    if (r.lo == r.hi) return ln2z + v;
    if (ln2z + v + log_terms < skip_below) return kNegInf;
    double s = 1.0;
    for (int k = j + 1; k <= r.hi; ++k) {
      const double d = static_cast<double>(term(l1, l2, l3, k) - v);
      if (d < -kInnerNats) break;
      s += std::exp(d);
    }
    for (int k = j - 1; k >= r.lo; --k) {
      const double d = static_cast<double>(term(l1, l2, l3, k) - v);
      if (d < -kInnerNats) break;
      s += std::exp(d);
    }
    return ln2z + v + (s == 1.0 ? 0.0L : static_cast<long double>(std::log(s)));
  }
};

// ln[C(2n, 2k) / C(n, k)]
inline long double log_coeff(const LogBinomialTable& t, int n, int k) {
  return t.log_choose(2 * n, 2 * k) - t.log_choose(n, k);
}

}  // namespace

// ------------------------------------------------------------ LogBinomialTable

LogBinomialTable::LogBinomialTable(int max) : lf_(static_cast<std::size_t>(std::max(max, 1)) + 1) {
  for (std::size_t k = 0; k < lf_.size(); ++k) lf_[k] = std::lgamma(static_cast<long double>(k) + 1.0L);
}

long double LogBinomialTable::log_factorial(int k) const {
  require(k >= 0 && k <= max(), "log_factorial argument out of table range");
  return lf_[static_cast<std::size_t>(k)];
}

long double LogBinomialTable::log_choose(int a, int k) const {
  if (k < 0 || k > a) return kNegInf;
  return lf_[a] - lf_[k] - lf_[a - k];
}

long double LogBinomialTable::log_multinomial(int a, int k1, int k2, int k3) const {
  const int rest = a - k1 - k2 - k3;
  if (k1 < 0 || k2 < 0 || k3 < 0 || rest < 0) return kNegInf;
  return lf_[a] - lf_[k1] - lf_[k2] - lf_[k3] - lf_[rest];
}

// -------------------------------------------------------------- alpha, kappa

long double log_alpha(const LogBinomialTable& t, int n, int l1, int l2, int l3) {
  return t.log_multinomial(n, l1, l2, l3) - t.log_multinomial(2 * n, 2 * l1, 2 * l2, 2 * l3) +
         log_coeff(t, n, l1 + l3) + log_coeff(t, n, l2 + l3);
}

long double log_kappa(const LogBinomialTable& t, int n, int zeta, int l1, int l2, int l3) {
  // Exhaustive j-sum; the pruned variant lives in bound_overlap.
  const auto r = j_range(n, zeta, l1, l2, l3);
  LogAccumulator acc;
  for (int j = r.lo; j <= r.hi; ++j) acc.add(log_kappa_term(t, n, zeta, l1, l2, l3, j));
  const long double v = acc.log_value();
  return v == kNegInf ? v : zeta * std::log(2.0L) + v;
}

double alpha(int n, int l1, int l2, int l3) {
  check_triple(n, l1, l2, l3);
  const LogBinomialTable t(2 * n);
  return static_cast<double>(std::exp(log_alpha(t, n, l1, l2, l3)));
}

double kappa(int n, int zeta, int l1, int l2, int l3) {
  check_triple(n, l1, l2, l3);
  check_zeta(n, zeta);
  const LogBinomialTable t(2 * n);
  const long double v = log_kappa(t, n, zeta, l1, l2, l3);
  return v == kNegInf ? 0.0 : static_cast<double>(std::exp(v));
}

// ------------------------------------------------------------------ bounds

double bound_overlap(int n, int zeta, int threads) {
  require(n >= 1, "bound_overlap needs n >= 1");
  check_zeta(n, zeta);
  const LogBinomialTable t(2 * n);
  const OverlapKernel ker(t, n, zeta);
  // Rows l1 = 0 .. floor(n/2) (l1 <= l2 by the l1 <-> l2 symmetry), visited
  // in an interleaved order so contiguous thread ranges mix heavy and light
  // rows. Results are stored per row and reduced in row order.
  const int rows = n / 2 + 1;
  std::vector<int> order;
  order.reserve(rows);
  for (int lo = 0, hi = rows - 1; lo <= hi; ++lo, --hi) {
    order.push_back(lo);
    if (lo != hi) order.push_back(hi);
  }
  std::vector<LogAccumulator> row_acc(rows);
  const long double ln2 = std::log(2.0L);
  parallel_for(order.size(), resolve_threads(threads), [&](std::size_t k) {
    const int l1 = order[k];
    // Plain locals keep the x87 accumulator state in registers.
    long double m = kNegInf, s = 0.0L;
    for (int l2 = l1; l1 + l2 <= n; ++l2) {
      const long double sym = l1 == l2 ? 0.0L : ln2;
      int hint = 0;
      for (int l3 = 0; l1 + l2 + l3 <= n; ++l3) {
        const long double la = ker.log_alpha(l1, l2, l3) + sym;
        // Triples whose upper bound sits kPruneNats below the row's running
        // maximum are skipped without evaluating the full j-sum.
        const long double lk = ker.log_kappa(l1, l2, l3, hint, m - kPruneNats - la);
        if (lk == kNegInf) continue;
        const long double v = la + lk;
        if (v > m) {
          s = s * std::exp(static_cast<double>(m - v)) + 1.0L;
          m = v;
        } else {
          s += std::exp(static_cast<double>(v - m));
        }
      }
    }
    row_acc[l1].m = m;
    row_acc[l1].s = s;
  });
  // Pairwise-tree reduction in fixed row order.
  std::vector<LogAccumulator> level = row_acc;
  while (level.size() > 1) {
    std::vector<LogAccumulator> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = level[2 * i];
      if (2 * i + 1 < level.size()) next[i].merge(level[2 * i + 1]);
    }
    level.swap(next);
  }
  return static_cast<double>(std::exp(level[0].log_value() - 2 * n * ln2));
}

double bound_gaussian(int n) {
  require(n >= 1, "bound_gaussian needs n >= 1");
  const LogBinomialTable t(2 * n);
  auto term = [&](int l1, int l2, int l3) {
    const long double m = t.log_multinomial(n, l1, l2, l3);
    return 2 * m - t.log_multinomial(2 * n, 2 * l1, 2 * l2, 2 * l3) +
           (t.log_choose(2 * n, 2 * (l1 + l3)) - t.log_choose(n, l1 + l3)) +
           (t.log_choose(2 * n, 2 * (l2 + l3)) - t.log_choose(n, l2 + l3));
  };
  // Two passes over every ordered triple: the maximum, then the shifted sum.
  long double mx = kNegInf;
  for (int l1 = 0; l1 <= n; ++l1)
    for (int l2 = 0; l1 + l2 <= n; ++l2)
      for (int l3 = 0; l1 + l2 + l3 <= n; ++l3) mx = std::max(mx, term(l1, l2, l3));
  long double s = 0.0L;
  for (int l1 = 0; l1 <= n; ++l1)
    for (int l2 = 0; l1 + l2 <= n; ++l2)
      for (int l3 = 0; l1 + l2 + l3 <= n; ++l3) s += std::exp(term(l1, l2, l3) - mx);
  return static_cast<double>(std::exp(mx + std::log(s) - 2 * n * std::log(2.0L)));
}

double bound_local(int n, int k) {
  require(n >= 0 && k >= 0 && k <= 2 * n, "need 0 <= k <= 2n");
  require(k % 2 == 0, "bound_local needs an even operator degree");
  const LogBinomialTable t(2 * n);
  return static_cast<double>(std::exp(log_coeff(t, n, k / 2)));
}

EstimationPlan plan_samples(double eps, double delta, int observables, double b_max) {
  require(eps > 0 && std::isfinite(eps), "eps must be positive");
  require(delta > 0 && delta < 1, "delta must lie in (0, 1)");
  require(observables >= 1, "need at least one observable");
  require(b_max > 0 && std::isfinite(b_max), "b_max must be positive");
  // A relative slack of 1e-12 keeps ceil() from jumping on rounding noise
  // when the exact value is an integer.
  auto ceil_exact = [](double x) {
    return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
  };
  EstimationPlan p;
  p.eps = eps;
  p.delta = delta;
  p.observables = observables;
  p.b_max = b_max;
  p.k = std::max<std::uint64_t>(1, ceil_exact(18.0 * std::log(observables / delta)));
  p.l = std::max<std::uint64_t>(1, ceil_exact(24.0 * b_max / (eps * eps)));
  return p;
}

double exact_variance_smalln(const CMat& rho, const CMat& o) {
  require(rho.rows() == o.rows(), "exact_variance_smalln: size mismatch");
  if (rho.rows() > 8) throw ResourceError("exact_variance_smalln is limited to n <= 3");
  return oracle::exact_shadow_moments(rho, o).variance;
}

// ------------------------------------------------------------------- grids

std::vector<GridPoint> default_grid(bool include_slow) {
  const int zetas[] = {0, 2, 10, 50, 100, 200, 500};
  std::vector<int> ns;
  for (int n = 4; n <= 512; n *= 2) ns.push_back(n);
  ns.push_back(1000);
  std::vector<GridPoint> g;
  for (int n : ns)
    for (int z : zetas) {
      if (z > n) continue;
      if (n == 1000 && z == 500 && !include_slow) continue;
      g.push_back({n, z});
    }
  return g;
}

namespace {

int parse_int(const std::string& s) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("grid: expected an integer, got '" + s + "'");
  }
  require(pos == s.size(), "grid: expected an integer, got '" + s + "'");
  return v;
}

// "a", "a..b" (every integer) or "a..b:log" (a, 2a, 4a, ... then b).
void expand_item(const std::string& item, std::vector<int>& out) {
  const auto dots = item.find("..");
  if (dots == std::string::npos) {
    out.push_back(parse_int(item));
    return;
  }
  std::string hi_part = item.substr(dots + 2);
  bool log_spaced = false;
  if (const auto colon = hi_part.find(':'); colon != std::string::npos) {
    const std::string mode = hi_part.substr(colon + 1);
    require(mode == "log" || mode == "lin", "grid: unknown spacing '" + mode + "'");
    log_spaced = mode == "log";
    hi_part = hi_part.substr(0, colon);
  }
  const int lo = parse_int(item.substr(0, dots)), hi = parse_int(hi_part);
  require(lo >= 1 && lo <= hi, "grid: bad range '" + item + "'");
  if (!log_spaced) {
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return;
  }
  long long v = lo;
  for (; v < hi; v *= 2) out.push_back(static_cast<int>(v));
  out.push_back(hi);
}

}  // namespace

std::vector<GridPoint> parse_grid(const std::string& spec) {
  std::vector<int> ns, zetas;
  std::vector<int>* cur = nullptr;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok.empty()) continue;
    if (tok.rfind("n=", 0) == 0) {
      cur = &ns;
      tok = tok.substr(2);
    } else if (tok.rfind("zeta=", 0) == 0) {
      cur = &zetas;
      tok = tok.substr(5);
    }
    require(cur != nullptr, "grid must start with n=...");
    expand_item(tok, *cur);
  }
  require(!ns.empty(), "grid: no n values");
  if (zetas.empty()) zetas.push_back(0);
  std::vector<GridPoint> g;
  for (int n : ns) {
    require(n >= 1, "grid: n must be positive");
    for (int z : zetas) {
      require(z >= 0 && z % 2 == 0, "grid: zeta values must be even and non-negative");
      if (z <= n) g.push_back({n, z});
    }
  }
  return g;
}

std::vector<GridRow> compute_table(const std::vector<GridPoint>& grid, int threads) {
  std::vector<GridRow> rows;
  rows.reserve(grid.size());
  for (const auto& p : grid) rows.push_back({p.n, p.zeta, bound_overlap(p.n, p.zeta, threads)});
  return rows;
}

std::string format_csv(const std::vector<GridRow>& rows) {
  std::string out = "n,zeta,bound\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.12g\n", r.n, r.zeta, r.bound);
    out += buf;
  }
  return out;
}

}  // namespace mgs::variance
