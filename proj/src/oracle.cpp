#include "mgshadows/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

#include "mgshadows/parallel.hpp"

namespace mgs::oracle {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

double multinomial4(int n, int a, int b, int c) {
  const int d = n - a - b - c;
  if (a < 0 || b < 0 || c < 0 || d < 0) return 0.0;
  return factorial(n) / (factorial(a) * factorial(b) * factorial(c) * factorial(d));
}

int modes_of(const CMat& a) {
  require(a.rows() == a.cols() && a.rows() >= 2, "dense operator must be square");
  const auto d = static_cast<std::uint64_t>(a.rows());
  require(std::has_single_bit(d), "dense operator dimension must be a power of two");
  const int n = std::countr_zero(d);
  if (n > kMaxDenseModes) throw ResourceError("dense oracle limited to n <= 7");
  return n;
}

void check_modes(int n, int cap, const char* what) {
  require(n >= 1, std::string(what) + ": n must be >= 1");
  if (n > cap) throw ResourceError(std::string(what) + ": n exceeds the enumeration cap");
}

std::uint64_t pair_mask(std::uint64_t t) {
  std::uint64_t m = 0;
  for (; t; t &= t - 1) {
    const int j = std::countr_zero(t);
    m |= std::uint64_t{3} << (2 * j);
  }
  return m;
}

// tr(M rho) for a monomial M.
cplx trace_with(const Monomial& m, const CMat& rho) {
  cplx s = 0;
  for (std::size_t y = 0; y < m.phase.size(); ++y)
    s += m.phase[y] * rho(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(y ^ m.flip));
  return s;
}

// Gaussian-frame Majorana products gamma~_A for all masks A.
std::vector<CMat> frame_products(const RMat& frame) {
  const int d = static_cast<int>(frame.rows());
  const int n = d / 2;
  std::vector<CMat> g(d);
  for (int mu = 1; mu <= d; ++mu) g[mu - 1] = rotated_majorana(frame, mu);
  std::vector<CMat> out(std::size_t{1} << d);
  out[0] = CMat::Identity(std::int64_t{1} << n, std::int64_t{1} << n);
  for (std::uint64_t s = 1; s < out.size(); ++s) {
    const int hi = 63 - std::countl_zero(s);
    out[s] = out[s ^ (std::uint64_t{1} << hi)] * g[hi];
  }
  return out;
}

double alpha(int n, int l1, int l2, int l3) {
  return multinomial4(n, l1, l2, l3) / multinomial4(2 * n, 2 * l1, 2 * l2, 2 * l3) *
         choose(2 * n, 2 * (l1 + l3)) / choose(n, l1 + l3) * choose(2 * n, 2 * (l2 + l3)) /
         choose(n, l2 + l3);
}

// Calls f(A1, A2, A3) for every disjoint triple of subsets of [d].
template <class F>
void for_each_disjoint_triple(int d, F&& f) {
  std::vector<int> colour(d, 0);
  while (true) {
    std::uint64_t a[3] = {0, 0, 0};
    for (int mu = 0; mu < d; ++mu)
      if (colour[mu]) a[colour[mu] - 1] |= std::uint64_t{1} << mu;
    f(a[0], a[1], a[2]);
    int k = 0;
    while (k < d && colour[k] == 3) colour[k++] = 0;
    if (k == d) break;
    ++colour[k];
  }
}

}  // namespace

// ---------------------------------------------------------------- Monomial

int Monomial::modes() const { return std::countr_zero(phase.size()); }

CMat Monomial::dense() const {
  const auto d = static_cast<Eigen::Index>(phase.size());
  CMat m = CMat::Zero(d, d);
  for (Eigen::Index x = 0; x < d; ++x) m(x ^ static_cast<Eigen::Index>(flip), x) = phase[x];
  return m;
}

Monomial Monomial::operator*(const Monomial& rhs) const {
  Monomial out;
  out.flip = flip ^ rhs.flip;
  out.phase.resize(phase.size());
  for (std::size_t x = 0; x < phase.size(); ++x) out.phase[x] = rhs.phase[x] * phase[x ^ rhs.flip];
  return out;
}

cplx Monomial::overlap(const CMat& a) const {
  cplx s = 0;
  for (std::size_t x = 0; x < phase.size(); ++x)
    s += std::conj(phase[x]) * a(static_cast<Eigen::Index>(x ^ flip), static_cast<Eigen::Index>(x));
  return s;
}

Monomial majorana_monomial(int n, int mu) {
  check_modes(n, kMaxDenseModes, "majorana_matrix");
  require(mu >= 1 && mu <= 2 * n, "majorana_matrix: index out of range 1..2n");
  const int j = (mu - 1) / 2;
  const std::uint64_t bit = std::uint64_t{1} << (n - 1 - j);
  const std::uint64_t all = (std::uint64_t{1} << n) - 1;
  const std::uint64_t before = all & ~((bit << 1) - 1);
  Monomial m;
  m.flip = bit;
  m.phase.resize(std::size_t{1} << n);
  for (std::uint64_t x = 0; x <= all; ++x) {
    cplx p = std::popcount(x & before) % 2 ? -1.0 : 1.0;
    if (mu % 2 == 0) p *= (x & bit) ? cplx(0.0, -1.0) : cplx(0.0, 1.0);
    m.phase[x] = p;
  }
  return m;
}

std::vector<Monomial> all_majorana_products(int n) {
  check_modes(n, 6, "all_majorana_products");
  std::vector<Monomial> g;
  for (int mu = 1; mu <= 2 * n; ++mu) g.push_back(majorana_monomial(n, mu));
  std::vector<Monomial> out(std::size_t{1} << (2 * n));
  out[0].phase.assign(std::size_t{1} << n, cplx(1.0, 0.0));
  for (std::uint64_t s = 1; s < out.size(); ++s) {
    const int hi = 63 - std::countl_zero(s);
    out[s] = out[s ^ (std::uint64_t{1} << hi)] * g[hi];
  }
  return out;
}

CMat majorana_matrix(int n, int mu) { return majorana_monomial(n, mu).dense(); }

CMat majorana_product(int n, std::uint64_t mask) {
  check_modes(n, kMaxDenseModes, "majorana_product");
  require(mask >> (2 * n) == 0, "majorana_product: mask out of range");
  Monomial m;
  m.phase.assign(std::size_t{1} << n, cplx(1.0, 0.0));
  for (std::uint64_t s = mask; s; s &= s - 1) m = m * majorana_monomial(n, std::countr_zero(s) + 1);
  return m.dense();
}

CMat rotated_majorana(const RMat& q, int mu) {
  const int d = static_cast<int>(q.rows());
  require(d % 2 == 0 && q.cols() == d, "rotated_majorana: frame must be 2n x 2n");
  require(mu >= 1 && mu <= d, "rotated_majorana: index out of range");
  const int n = d / 2;
  CMat out = CMat::Zero(std::int64_t{1} << n, std::int64_t{1} << n);
  for (int nu = 0; nu < d; ++nu)
    if (q(mu - 1, nu) != 0.0) out += q(mu - 1, nu) * majorana_matrix(n, nu + 1);
  return out;
}

CMat rotated_majorana_product(const RMat& q, const std::vector<int>& indices) {
  const int n = static_cast<int>(q.rows()) / 2;
  CMat out = CMat::Identity(std::int64_t{1} << n, std::int64_t{1} << n);
  for (int mu : indices) out = out * rotated_majorana(q, mu);
  return out;
}

// ------------------------------------------------------------ coefficients

std::vector<cplx> majorana_coefficients(const CMat& a) {
  const int n = modes_of(a);
  const auto prods = all_majorana_products(n);
  const double scale = std::ldexp(1.0, -n);
  std::vector<cplx> c(prods.size());
  for (std::size_t s = 0; s < prods.size(); ++s) c[s] = prods[s].overlap(a) * scale;
  return c;
}

CMat from_majorana_coefficients(int n, const std::vector<cplx>& c) {
  require(c.size() == (std::size_t{1} << (2 * n)), "from_majorana_coefficients: need 4^n values");
  const auto prods = all_majorana_products(n);
  const auto d = static_cast<Eigen::Index>(std::uint64_t{1} << n);
  CMat out = CMat::Zero(d, d);
  for (std::size_t s = 0; s < prods.size(); ++s) {
    if (c[s] == cplx{}) continue;
    const auto& m = prods[s];
    for (Eigen::Index x = 0; x < d; ++x)
      out(x ^ static_cast<Eigen::Index>(m.flip), x) += c[s] * m.phase[x];
  }
  return out;
}

CMat grade_project(const CMat& a, int k) {
  const int n = modes_of(a);
  auto c = majorana_coefficients(a);
  for (std::size_t s = 0; s < c.size(); ++s)
    if (std::popcount(s) != k) c[s] = 0;
  return from_majorana_coefficients(n, c);
}

double inverse_coeff(int n, int l) { return choose(2 * n, 2 * l) / choose(n, l); }

CMat apply_inverse_channel(const CMat& a) {
  const int n = modes_of(a);
  auto c = majorana_coefficients(a);
  for (std::size_t s = 0; s < c.size(); ++s) {
    const int k = std::popcount(s);
    c[s] = k % 2 ? cplx{} : c[s] * inverse_coeff(n, k / 2);
  }
  return from_majorana_coefficients(n, c);
}

CMat apply_channel_closed_form(const CMat& a) {
  const int n = modes_of(a);
  auto c = majorana_coefficients(a);
  for (std::size_t s = 0; s < c.size(); ++s) {
    const int k = std::popcount(s);
    c[s] = k % 2 ? cplx{} : c[s] / inverse_coeff(n, k / 2);
  }
  return from_majorana_coefficients(n, c);
}

// ----------------------------------------------------------- dense states

CMat gaussian_density(int n, const std::vector<cplx>& lambda, const RMat& frame) {
  check_modes(n, kMaxDenseModes, "gaussian_density");
  require(static_cast<int>(lambda.size()) == n, "gaussian_density: need n lambda values");
  require(frame.rows() == 2 * n && frame.cols() == 2 * n, "gaussian_density: frame must be 2n x 2n");
  const auto d = std::int64_t{1} << n;
  CMat rho = CMat::Identity(d, d);
  for (int j = 0; j < n; ++j) {
    const CMat pair = rotated_majorana(frame, 2 * j + 1) * rotated_majorana(frame, 2 * j + 2);
    rho = rho * (0.5 * (CMat::Identity(d, d) - I_unit * lambda[j] * pair));
  }
  return rho;
}

CMat gaussian_density(const GaussianStateSpec& g) {
  g.validate();
  return gaussian_density(g.n, std::vector<cplx>(g.lambda.begin(), g.lambda.end()), g.frame.dense());
}

CMat gaussian_unitary(const RMat& h) {
  const int d = static_cast<int>(h.rows());
  require(d % 2 == 0 && h.cols() == d, "gaussian_unitary: generator must be 2n x 2n");
  const int n = d / 2;
  check_modes(n, kMaxDenseModes, "gaussian_unitary");
  std::vector<CMat> g(d);
  for (int mu = 0; mu < d; ++mu) g[mu] = majorana_matrix(n, mu + 1);
  CMat gen = CMat::Zero(std::int64_t{1} << n, std::int64_t{1} << n);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      if (h(mu, nu) != 0.0) gen += (0.5 * h(mu, nu)) * (g[mu] * g[nu]);
  return gen.exp();
}

CVec slater_state(const SlaterSpec& s) {
  s.validate();
  const int n = s.n;
  check_modes(n, kMaxDenseModes, "slater_state");
  CVec psi = CVec::Zero(std::int64_t{1} << n);
  psi(0) = 1.0;
  std::vector<CMat> create(n);
  for (int k = 0; k < n; ++k)
    create[k] = 0.5 * (majorana_matrix(n, 2 * k + 1) - I_unit * majorana_matrix(n, 2 * k + 2));
  for (int j = s.zeta - 1; j >= 0; --j) {
    CMat op = CMat::Zero(psi.size(), psi.size());
    for (int k = 0; k < n; ++k) op += std::conj(s.v(j, k)) * create[k];
    psi = op * psi;
  }
  return psi;
}

CVec pure_gaussian_state(const PureGaussian& g) {
  const CMat u = gaussian_unitary(orthogonal_log(g.r).real());
  return g.phase * u.col(0);
}

// ---------------------------------------------------- Majorana-index algebra

int product_sign(std::uint64_t s, std::uint64_t t) {
  int swaps = 0;
  for (std::uint64_t r = t; r; r &= r - 1) {
    const int bit = std::countr_zero(r);
    const std::uint64_t above = bit >= 63 ? 0 : ~((std::uint64_t{2} << bit) - 1);
    swaps += std::popcount(s & above);
  }
  return swaps % 2 ? -1 : 1;
}

SignedMask act_signed_permutation(const OrthogonalLabel& q, std::uint64_t s) {
  require(q.is_signed_permutation(), "act_signed_permutation: label is not a signed permutation");
  SignedMask out{0, 1};
  for (std::uint64_t r = s; r; r &= r - 1) {
    const int mu = std::countr_zero(r);
    const std::uint64_t bit = std::uint64_t{1} << q.perm()[mu];
    out.sign *= q.signs()[mu] * product_sign(out.mask, bit);
    out.mask ^= bit;
  }
  return out;
}

std::uint64_t signed_permutation_count(int n) {
  std::uint64_t c = std::uint64_t{1} << (2 * n);
  for (int k = 2; k <= 2 * n; ++k) c *= static_cast<std::uint64_t>(k);
  return c;
}

void for_each_signed_permutation(int n, const std::function<void(const OrthogonalLabel&)>& f) {
  check_modes(n, 4, "for_each_signed_permutation");
  const int d = 2 * n;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> signs(d);
  do {
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << d); ++m) {
      for (int k = 0; k < d; ++k) signs[k] = (m >> k) & 1U ? -1 : 1;
      f(OrthogonalLabel::from_signed_permutation(perm, signs));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

namespace {

std::vector<OrthogonalLabel> signed_permutation_list(int n) {
  std::vector<OrthogonalLabel> all;
  all.reserve(signed_permutation_count(n));
  for_each_signed_permutation(n, [&](const OrthogonalLabel& q) { all.push_back(q); });
  return all;
}

// Images (pairs(T) -> sign, mask) of every mode subset T under Q.
std::vector<SignedMask> pair_images(const OrthogonalLabel& q) {
  const int n = q.modes();
  std::vector<SignedMask> img(std::size_t{1} << n);
  for (std::uint64_t t = 0; t < img.size(); ++t) img[t] = act_signed_permutation(q, pair_mask(t));
  return img;
}

// prod_{j in T} (-i s_j) with s_j = (-1)^{b_j}.
cplx pair_phase(std::uint64_t t, const Bitstring& b) {
  cplx p = 1.0;
  for (std::uint64_t r = t; r; r &= r - 1) {
    const int j = std::countr_zero(r);
    p *= b[j] ? I_unit : -I_unit;
  }
  return p;
}

}  // namespace

CMat exact_channel(int n) {
  check_modes(n, 3, "exact_channel");
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << (2 * n));
  const double total = static_cast<double>(signed_permutation_count(n));
  const double vnorm = std::ldexp(1.0, -n);  // |v_S|^2 scale 2^{-n}
  CMat m = CMat::Zero(dim, dim);
  for_each_signed_permutation(n, [&](const OrthogonalLabel& q) {
    const auto img = pair_images(q);
    for (std::uint64_t bi = 0; bi < (std::uint64_t{1} << n); ++bi) {
      const Bitstring b = Bitstring::from_index(n, bi);
      std::vector<cplx> v(img.size());
      for (std::uint64_t t = 0; t < img.size(); ++t) v[t] = pair_phase(t, b) * double(img[t].sign);
      for (std::uint64_t r = 0; r < img.size(); ++r)
        for (std::uint64_t c = 0; c < img.size(); ++c)
          m(static_cast<Eigen::Index>(img[r].mask), static_cast<Eigen::Index>(img[c].mask)) +=
              vnorm * v[r] * std::conj(v[c]) / total;
    }
  });
  return m;
}

CMat closed_form_channel(int n) {
  check_modes(n, 6, "closed_form_channel");
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << (2 * n));
  CMat m = CMat::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    const int k = std::popcount(static_cast<std::uint64_t>(s));
    if (k % 2 == 0) m(s, s) = 1.0 / inverse_coeff(n, k / 2);
  }
  return m;
}

SparseSuperop exact_twirl(int n, int j, int threads) {
  require(j >= 1 && j <= 3, "exact_twirl: j must be 1, 2 or 3");
  check_modes(n, j == 3 ? 2 : 3, "exact_twirl");
  const std::uint64_t d = std::uint64_t{1} << (2 * n);
  std::uint64_t dim = 1;
  for (int k = 0; k < j; ++k) dim *= d;
  const auto group = signed_permutation_list(n);
  const int t = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(group.size())));
  // Entries are sums of +-1, so integer counts make the result exact and
  // independent of how the group is partitioned.
  std::vector<std::unordered_map<std::uint64_t, std::int64_t>> partial(t);
  parallel_for(static_cast<std::size_t>(t), t, [&](std::size_t w) {
    auto& acc = partial[w];
    const std::size_t lo = group.size() * w / t, hi = group.size() * (w + 1) / t;
    std::vector<SignedMask> act(d);
    for (std::size_t g = lo; g < hi; ++g) {
      for (std::uint64_t s = 0; s < d; ++s) act[s] = act_signed_permutation(group[g], s);
      for (std::uint64_t col = 0; col < dim; ++col) {
        std::uint64_t rest = col, row = 0, scale = 1;
        int sign = 1;
        for (int k = 0; k < j; ++k) {
          const auto& a = act[rest % d];
          row += a.mask * scale;
          sign *= a.sign;
          rest /= d;
          scale *= d;
        }
        acc[row * dim + col] += sign;
      }
    }
  });
  std::unordered_map<std::uint64_t, std::int64_t> total = std::move(partial[0]);
  for (int w = 1; w < t; ++w)
    for (const auto& [k, v] : partial[w]) total[k] += v;
  SparseSuperop out;
  out.dim = dim;
  const double g = static_cast<double>(group.size());
  for (const auto& [k, v] : total)
    if (v != 0) out.entries[k] = static_cast<double>(v) / g;
  return out;
}

SparseSuperop theorem1_twirl(int n, int j) {
  require(j >= 1 && j <= 3, "theorem1_twirl: j must be 1, 2 or 3");
  check_modes(n, j == 3 ? 2 : 3, "theorem1_twirl");
  const int d2 = 2 * n;
  const std::uint64_t d = std::uint64_t{1} << d2;
  SparseSuperop out;
  out.dim = j == 1 ? d : j == 2 ? d * d : d * d * d;
  if (j == 1) {
    out.entries[0] = 1.0;
    return out;
  }
  if (j == 2) {
    for (int k = 0; k <= d2; ++k) {
      const double w = 1.0 / choose(d2, k);
      for (std::uint64_t s = 0; s < d; ++s) {
        if (std::popcount(s) != k) continue;
        for (std::uint64_t t = 0; t < d; ++t)
          if (std::popcount(t) == k) out.entries[(s * d + s) * out.dim + (t * d + t)] = w;
      }
    }
    return out;
  }
  // Group the signed basis vectors of each Upsilon_{k1,k2,k3} by sizes.
  struct Term {
    std::uint64_t index;
    int sign;
  };
  std::unordered_map<std::uint64_t, std::vector<Term>> groups;
  for_each_disjoint_triple(d2, [&](std::uint64_t a1, std::uint64_t a2, std::uint64_t a3) {
    const std::uint64_t key = (std::uint64_t(std::popcount(a1)) * 64 + std::popcount(a2)) * 64 +
                              std::popcount(a3);
    const std::uint64_t idx = ((a1 | a2) + (a2 | a3) * d) + (a3 | a1) * d * d;
    const int sign = product_sign(a1, a2) * product_sign(a2, a3) * product_sign(a3, a1);
    groups[key].push_back({idx, sign});
  });
  for (const auto& [key, terms] : groups) {
    const double w = 1.0 / static_cast<double>(terms.size());
    for (const auto& r : terms)
      for (const auto& c : terms) out.entries[r.index * out.dim + c.index] = w * r.sign * c.sign;
  }
  return out;
}

double max_abs_difference(const SparseSuperop& a, const SparseSuperop& b) {
  require(a.dim == b.dim, "max_abs_difference: dimension mismatch");
  double m = 0;
  for (const auto& [k, v] : a.entries) {
    const auto it = b.entries.find(k);
    m = std::max(m, std::abs(v - (it == b.entries.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, v] : b.entries)
    if (!a.entries.count(k)) m = std::max(m, std::abs(v));
  return m;
}

RMat channel_matrix(const RMat& q) {
  const int d = static_cast<int>(q.rows());
  require(d % 2 == 0 && q.cols() == d && d <= 8, "channel_matrix: need 2n x 2n with n <= 4");
  const std::uint64_t dim = std::uint64_t{1} << d;
  RMat t = RMat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  auto bits = [](std::uint64_t m) {
    std::vector<int> v;
    for (; m; m &= m - 1) v.push_back(std::countr_zero(m));
    return v;
  };
  for (std::uint64_t s = 0; s < dim; ++s) {
    const auto rows = bits(s);
    for (std::uint64_t r = 0; r < dim; ++r) {
      if (std::popcount(r) != std::popcount(s)) continue;
      const auto cols = bits(r);
      if (rows.empty()) {
        t(0, 0) = 1.0;
        continue;
      }
      RMat sub(rows.size(), cols.size());
      for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) sub(a, b) = q(rows[a], cols[b]);
      t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = sub.determinant();
    }
  }
  return t;
}

// ------------------------------------------------------------- moments

void enumerate_clifford_outcomes(
    const CMat& rho,
    const std::function<void(const OrthogonalLabel&, const Bitstring&, double)>& f) {
  const int n = modes_of(rho);
  check_modes(n, 3, "enumerate_clifford_outcomes");
  const auto prods = all_majorana_products(n);
  std::vector<cplx> t(prods.size());
  for (std::size_t s = 0; s < prods.size(); ++s) t[s] = trace_with(prods[s], rho);
  const double total = static_cast<double>(signed_permutation_count(n));
  const double scale = std::ldexp(1.0, -n);
  for_each_signed_permutation(n, [&](const OrthogonalLabel& q) {
    const auto img = pair_images(q);
    for (std::uint64_t bi = 0; bi < (std::uint64_t{1} << n); ++bi) {
      const Bitstring b = Bitstring::from_index(n, bi);
      cplx p = 0;
      for (std::uint64_t tt = 0; tt < img.size(); ++tt)
        p += pair_phase(tt, b) * double(img[tt].sign) * t[img[tt].mask];
      f(q, b, scale * p.real() / total);
    }
  });
}

Moments exact_estimator_moments(
    const CMat& rho, const std::function<cplx(const OrthogonalLabel&, const Bitstring&)>& est) {
  Moments m;
  enumerate_clifford_outcomes(rho, [&](const OrthogonalLabel& q, const Bitstring& b, double w) {
    if (w == 0.0) return;
    const cplx o = est(q, b);
    m.mean += w * o;
    m.second_moment += w * std::norm(o);
  });
  m.variance = m.second_moment - std::norm(m.mean);
  return m;
}

Moments exact_shadow_moments(const CMat& rho, const CMat& o) {
  const int n = modes_of(rho);
  require(o.rows() == rho.rows() && o.cols() == rho.cols(), "exact_shadow_moments: size mismatch");
  const auto prods = all_majorana_products(n);
  std::vector<cplx> tau(prods.size());
  for (std::size_t s = 0; s < prods.size(); ++s)
    tau[s] = trace_with(prods[s], o) * inverse_coeff(n, std::popcount(s) / 2);
  const double scale = std::ldexp(1.0, -n);
  return exact_estimator_moments(rho, [&](const OrthogonalLabel& q, const Bitstring& b) {
    const auto img = pair_images(q);
    cplx v = 0;
    for (std::uint64_t t = 0; t < img.size(); ++t)
      v += pair_phase(t, b) * double(img[t].sign) * tau[img[t].mask];
    return scale * v;
  });
}

namespace {

void require_even(const CMat& o) {
  const auto c = majorana_coefficients(o);
  double odd = 0, all = 0;
  for (std::size_t s = 0; s < c.size(); ++s) {
    all = std::max(all, std::abs(c[s]));
    if (std::popcount(s) % 2) odd = std::max(odd, std::abs(c[s]));
  }
  require(odd <= 1e-10 * std::max(all, 1.0), "variance bound requires an even operator");
}

}  // namespace

double exact_variance_bound(const CMat& rho, const CMat& o, const RMat& frame) {
  const int n = modes_of(rho);
  check_modes(n, 3, "exact_variance_bound");
  require(o.rows() == rho.rows() && frame.rows() == 2 * n, "exact_variance_bound: size mismatch");
  require_even(o);
  const auto g = frame_products(frame);
  const CMat od = o.adjoint();
  cplx sum = 0;
  for_each_disjoint_triple(2 * n, [&](std::uint64_t a1, std::uint64_t a2, std::uint64_t a3) {
    const int k1 = std::popcount(a1), k2 = std::popcount(a2), k3 = std::popcount(a3);
    if (k1 % 2 || k2 % 2 || k3 % 2) return;
    const int l1 = k1 / 2, l2 = k2 / 2, l3 = k3 / 2;
    const cplx t1 = (g[a1] * g[a2] * rho).trace();
    if (t1 == cplx{}) return;
    const cplx t2 = (g[a2] * g[a3] * o).trace();
    const cplx t3 = (g[a3] * g[a1] * od).trace();
    const double sign = (l1 + l2 + l3) % 2 ? -1.0 : 1.0;
    sum += sign * alpha(n, l1, l2, l3) * t1 * t2 * t3;
  });
  return sum.real() * std::ldexp(1.0, -2 * n);
}

double state_independent_variance_bound(const CMat& o, const RMat& frame) {
  const int n = modes_of(o);
  check_modes(n, 3, "state_independent_variance_bound");
  require(frame.rows() == 2 * n, "state_independent_variance_bound: size mismatch");
  require_even(o);
  const auto g = frame_products(frame);
  std::vector<double> tr(g.size());
  for (std::size_t s = 0; s < g.size(); ++s) tr[s] = std::abs((o * g[s]).trace());
  double sum = 0;
  for_each_disjoint_triple(2 * n, [&](std::uint64_t a1, std::uint64_t a2, std::uint64_t a3) {
    const int k1 = std::popcount(a1), k2 = std::popcount(a2), k3 = std::popcount(a3);
    if (k1 % 2 || k2 % 2 || k3 % 2) return;
    sum += alpha(n, k1 / 2, k2 / 2, k3 / 2) * tr[a2 | a3] * tr[a3 | a1];
  });
  return sum * std::ldexp(1.0, -2 * n);
}

}  // namespace mgs::oracle
