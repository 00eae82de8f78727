#include "mgshadows/shadows.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mgshadows/parallel.hpp"

namespace mgs {

namespace {

using i128 = __int128;

// Row m of Pascal's triangle in exact 128-bit integers (m <= 128).
std::vector<i128> pascal_row(int m) {
  std::vector<i128> row{1};
  for (int k = 1; k <= m; ++k) {
    std::vector<i128> next(k + 1);
    next[0] = next[k] = 1;
    for (int j = 1; j < k; ++j) next[j] = row[j - 1] + row[j];
    row.swap(next);
  }
  return row;
}

std::vector<int> zero_based(const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = idx[k] - 1;
  return out;
}

// Block-diagonal sum_j J with J = [[0, 1], [-1, 0]].
RMat standard_form(int r) {
  RMat j = RMat::Zero(2 * r, 2 * r);
  for (int k = 0; k < r; ++k) {
    j(2 * k, 2 * k + 1) = 1.0;
    j(2 * k + 1, 2 * k) = -1.0;
  }
  return j;
}

template <class T>
T weighted_sum(const std::vector<double>& w, const std::vector<T>& c) {
  T s{};
  for (std::size_t l = 0; l < c.size(); ++l) s += w[l] * c[l];
  return s;
}

}  // namespace

// ------------------------------------------------------------ coefficients

double inverse_channel_coeff(int n, int l) {
  require(n >= 0 && l >= 0 && l <= n, "inverse_channel_coeff: need 0 <= l <= n");
  if (n <= 64) {
    const auto top = pascal_row(2 * n), bottom = pascal_row(n);
    return static_cast<double>(static_cast<long double>(top[2 * l]) /
                               static_cast<long double>(bottom[l]));
  }
  const variance::LogBinomialTable t(2 * n);
  return static_cast<double>(std::exp(t.log_choose(2 * n, 2 * l) - t.log_choose(n, l)));
}

std::vector<double> inverse_channel_coeffs(int n) {
  require(n >= 0, "inverse_channel_coeffs: negative n");
  std::vector<double> out(n + 1);
  if (n <= 64) {
    const auto top = pascal_row(2 * n), bottom = pascal_row(n);
    for (int l = 0; l <= n; ++l)
      out[l] = static_cast<double>(static_cast<long double>(top[2 * l]) /
                                   static_cast<long double>(bottom[l]));
    return out;
  }
  const variance::LogBinomialTable t(2 * n);
  for (int l = 0; l <= n; ++l)
    out[l] = static_cast<double>(std::exp(t.log_choose(2 * n, 2 * l) - t.log_choose(n, l)));
  return out;
}

RMat sample_covariance(const ShadowSample& s) {
  require(s.q.modes() == s.b.size(), "shadow sample: Q and b disagree on n");
  return rotate_covariance(covariance_of_basis_state(s.b), s.q);
}

// ------------------------------------------------------ Majorana products

cplx estimate_majorana_product(const ShadowSample& s, const OrthogonalLabel& frame,
                               const MajoranaSet& set) {
  const int n = s.b.size();
  require(frame.modes() == n && set.modes() == n, "estimate_majorana_product: mode count mismatch");
  require(set.size() % 2 == 0, "estimate_majorana_product: odd products estimate to zero; |S| must be even");
  if (set.empty()) return 1.0;
  const RMat c = sample_covariance(s);
  const RMat fd = frame.dense();
  const auto rows = zero_based(set.indices());
  RMat qs(rows.size(), 2 * n);
  for (std::size_t k = 0; k < rows.size(); ++k) qs.row(k) = fd.row(rows[k]);
  CMat m = I_unit * (qs * c * qs.transpose()).cast<cplx>();
  return inverse_channel_coeff(n, set.size() / 2) * pfaffian_inplace(m);
}

// ------------------------------------------------------ Gaussian fidelities

GaussianFidelityEstimator::GaussianFidelityEstimator(const RMat& c_rho) {
  validate_covariance(c_rho);
  n_ = static_cast<int>(c_rho.rows() / 2);
  const auto cf = antisym_canonical(c_rho);
  r_ = cf.rank2r / 2;
  q1_ = cf.r.dense().topRows(2 * r_);
  sqrt_lambda_.resize(2 * r_);
  for (int j = 0; j < r_; ++j) sqrt_lambda_(2 * j) = sqrt_lambda_(2 * j + 1) = std::sqrt(cf.lambda[j]);
  inv_ = inverse_channel_coeffs(n_);
}

GaussianFidelityEstimator::GaussianFidelityEstimator(const GaussianStateSpec& g)
    : GaussianFidelityEstimator(covariance_of_gaussian(g)) {}

// p(z) = 2^-n pf(C') pf(-C'^-1 + z K) with C' = sum_j lambda_j J and
// K = (Q_1 C_other Q_1^T) on the support of C'. Writing C' = D J D with
// D = diag(sqrt lambda) gives pf(C') pf(-C'^-1 + zK) = pf(J + z DKD), which
// is the same polynomial without dividing by small lambda_j.
std::vector<double> GaussianFidelityEstimator::coefficients(const RMat& c_other) const {
  require(c_other.rows() == 2 * n_, "GaussianFidelityEstimator: mode count mismatch");
  std::vector<double> out(n_ + 1, 0.0);
  const double scale = std::ldexp(1.0, -n_);
  if (r_ == 0) {
    out[0] = scale;
    return out;
  }
  const RMat k = q1_ * c_other * q1_.transpose();
  const RMat y = sqrt_lambda_.asDiagonal() * k * sqrt_lambda_.asDiagonal();
  const RMat j = standard_form(r_);
  double pf_c = 1.0;
  for (int b = 0; b < r_; ++b) pf_c *= sqrt_lambda_(2 * b) * sqrt_lambda_(2 * b);
  ComplexPolynomial p;
  bool done = false;
  if (pf_c > 1e-12) {
    try {
      p = linear_pfaffian_coeffs(AntisymMatrix::trusted(j.cast<cplx>()), AntisymMatrix::trusted(y.cast<cplx>()));
      done = std::all_of(p.coeffs.begin(), p.coeffs.end(), [](cplx c) { return std::isfinite(std::abs(c)); });
    } catch (const ValidationError&) {
      done = false;
    }
  }
  if (!done) {
    p = interpolate(
        [&](cplx z) {
          CMat m = j.cast<cplx>() + z * y.cast<cplx>();
          return pfaffian_inplace(m);
        },
        r_);
  }
  for (int l = 0; l <= r_; ++l) out[l] = scale * p.coeff(l).real();
  return out;
}

double GaussianFidelityEstimator::operator()(const ShadowSample& s) const {
  return weighted_sum(inv_, coefficients(sample_covariance(s)));
}

double GaussianFidelityEstimator::overlap(const RMat& c_other) const {
  require(c_other.rows() == 2 * n_, "GaussianFidelityEstimator: mode count mismatch");
  const double scale = std::ldexp(1.0, -n_);
  if (r_ == 0) return scale;
  const RMat k = q1_ * c_other * q1_.transpose();
  RMat m = standard_form(r_) + sqrt_lambda_.asDiagonal() * k * sqrt_lambda_.asDiagonal();
  return scale * pfaffian_inplace(m);
}

std::vector<double> gaussian_fidelity_coefficients(const RMat& c1, const RMat& c2) {
  return GaussianFidelityEstimator(c1).coefficients(c2);
}

double estimate_gaussian_fidelity(const ShadowSample& s, const GaussianStateSpec& g) {
  return GaussianFidelityEstimator(g)(s);
}

double gaussian_overlap(const GaussianStateSpec& g1, const GaussianStateSpec& g2) {
  require(g1.n == g2.n, "gaussian_overlap: mode count mismatch");
  return GaussianFidelityEstimator(g1).overlap(covariance_of_gaussian(g2));
}

// ------------------------------------------------------ Slater overlaps

SlaterOverlapEstimator::SlaterOverlapEstimator(const SlaterSpec& s) {
  s.validate();
  require(s.zeta % 2 == 0,
          "Slater overlap estimator needs an even fermion number; pad odd determinants with an ancilla first");
  n_ = s.n;
  zeta_ = s.zeta;
  const RMat qt = slater_orthogonal(s).dense();
  const CMat wq = w_matrix(zeta_, n_).conjugate() * qt.cast<cplx>();
  const auto rows = zero_based(s_bar(zeta_, n_).indices());
  const RMat c0 = covariance_of_basis_state(Bitstring::zeros(n_));
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  p_re_.resize(m, 2 * n_);
  p_im_.resize(m, 2 * n_);
  c0_.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    p_re_.row(a) = wq.row(rows[a]).real();
    p_im_.row(a) = wq.row(rows[a]).imag();
    for (Eigen::Index b = 0; b < m; ++b) c0_(a, b) = c0(rows[a], rows[b]);
  }
  prefactor_ = std::ldexp(1.0, -(n_ - zeta_ / 2)) * std::pow(I_unit, zeta_ / 2);
  inv_ = inverse_channel_coeffs(n_);
}

// q(z) = 2^-(n - zeta/2) i^(zeta/2) pf((C_vac + z W^* Q~ C Q~^T W^dag)|_Sbar).
// The z^0 matrix is singular whenever zeta > 0, so the coefficients come
// from interpolation at n - zeta/2 + 1 roots of unity.
std::vector<cplx> SlaterOverlapEstimator::coefficients(const RMat& c_rho) const {
  require(c_rho.rows() == 2 * n_, "SlaterOverlapEstimator: mode count mismatch");
  // P C P^T in real arithmetic.
  const RMat a = p_re_.lazyProduct(c_rho), b = p_im_.lazyProduct(c_rho);
  CMat k(a.rows(), a.rows());
  k.real() = a.lazyProduct(p_re_.transpose()) - b.lazyProduct(p_im_.transpose());
  k.imag() = a.lazyProduct(p_im_.transpose()) + b.lazyProduct(p_re_.transpose());
  const int deg = n_ - zeta_ / 2;
  const auto p = interpolate(
      [&](cplx z) {
        CMat m = c0_ + z * k;
        return pfaffian_inplace(m);
      },
      deg);
  std::vector<cplx> out(n_ + 1, cplx{});
  for (int l = 0; l <= deg; ++l) out[l] = prefactor_ * p.coeff(l);
  return out;
}

cplx SlaterOverlapEstimator::estimate(const RMat& c_sample) const {
  return weighted_sum(inv_, coefficients(c_sample));
}

cplx SlaterOverlapEstimator::operator()(const ShadowSample& s) const {
  return estimate(sample_covariance(s));
}

cplx estimate_slater_overlap_op(const ShadowSample& s, const SlaterSpec& sl) {
  return SlaterOverlapEstimator(sl)(s);
}

// ------------------------------------------------------------ aggregation

MedianOfMeans::MedianOfMeans(std::uint64_t k, std::uint64_t l) : k_(k), l_(l) {
  require(k >= 1 && l >= 1, "median of means needs k, l >= 1");
  block_sums_.assign(k, cplx{});
}

void MedianOfMeans::add(cplx v) {
  if (complete()) return;
  block_sums_[count_ / l_] += v;
  sum_ += v;
  sum_sq_ += std::norm(v);
  ++count_;
}

cplx MedianOfMeans::estimate() const {
  if (!complete())
    throw InsufficientSamples("median of means: " + std::to_string(count_) + " values, need " +
                                  std::to_string(k_ * l_),
                              k_ * l_);
  std::vector<double> re(k_), im(k_);
  for (std::uint64_t b = 0; b < k_; ++b) {
    const cplx mean = block_sums_[b] / static_cast<double>(l_);
    re[b] = mean.real();
    im[b] = mean.imag();
  }
  const std::size_t mid = (k_ - 1) / 2;
  std::nth_element(re.begin(), re.begin() + mid, re.end());
  std::nth_element(im.begin(), im.begin() + mid, im.end());
  return {re[mid], im[mid]};
}

double MedianOfMeans::standard_error() const {
  if (count_ < 2) return 0.0;
  const double nn = static_cast<double>(count_);
  const double var = std::max(0.0, (sum_sq_ - std::norm(sum_) / nn) / (nn - 1));
  return std::sqrt(var / nn);
}

cplx median_of_means(const std::vector<cplx>& values, std::uint64_t k, std::uint64_t l) {
  MedianOfMeans m(k, l);
  for (const cplx& v : values) m.add(v);
  return m.estimate();
}

EstimateSeries summarize(std::vector<cplx> values, std::uint64_t k, std::uint64_t l) {
  MedianOfMeans m(k, l);
  for (const cplx& v : values) m.add(v);
  EstimateSeries out;
  out.aggregate = m.estimate();
  out.standard_error = m.standard_error();
  out.values = std::move(values);
  return out;
}

// ------------------------------------------------------------ end-to-end overlap estimation

std::vector<OverlapEstimate> algorithm1(const Statevector& psi,
                                        const std::vector<SlaterSpec>& slaters,
                                        const OverlapOptions& opt) {
  psi.validate();
  if (slaters.empty()) return {};
  const int threads = resolve_threads(opt.threads);

  // Pad every target; targets with the same ancilla count share one probe.
  std::vector<PaddedOverlap> padded;
  padded.reserve(slaters.size());
  for (const auto& s : slaters) padded.push_back(pad_for_overlap(psi, s));

  std::vector<OverlapEstimate> out(slaters.size());
  double b_max = 0;
  for (std::size_t i = 0; i < padded.size(); ++i) {
    out[i].padded_modes = padded[i].phi.n;
    out[i].padded_zeta = padded[i].phi.zeta;
    out[i].bound = variance::bound_overlap(padded[i].phi.n, padded[i].phi.zeta);
    b_max = std::max(b_max, out[i].bound);
  }
  // The estimate is twice tr(|Phi><vac| rho_probe), so the trace is planned
  // to half the requested error.
  const auto plan = variance::plan_samples(opt.eps / 2, opt.delta, static_cast<int>(slaters.size()), b_max);

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < padded.size(); ++i) groups[padded[i].ancillas].push_back(i);

  for (const auto& [ancillas, members] : groups) {
    const ShadowSource probe = overlap_probe(padded[members.front()].psi);
    std::vector<SlaterOverlapEstimator> est;
    std::vector<MedianOfMeans> mom;
    for (std::size_t i : members) {
      est.emplace_back(padded[i].phi);
      mom.emplace_back(plan.k, plan.l);
    }
    const std::uint64_t seed = opt.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(ancillas));
    const std::uint64_t chunk = 4096;
    const std::size_t m = members.size();
    std::vector<cplx> vals;
    for (std::uint64_t lo = 0; lo < plan.total(); lo += chunk) {
      const std::uint64_t len = std::min(chunk, plan.total() - lo);
      const auto samples = collect_shadow_range(probe, opt.ensemble, lo, len, seed, threads);
      vals.assign(len * m, cplx{});
      parallel_for(len, threads, [&](std::size_t i) {
        const RMat c = sample_covariance(samples[i]);
        for (std::size_t j = 0; j < m; ++j) vals[i * m + j] = 2.0 * est[j].estimate(c);
      });
      for (std::uint64_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < m; ++j) mom[j].add(vals[i * m + j]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      auto& o = out[members[j]];
      o.estimate = mom[j].estimate();
      o.standard_error = mom[j].standard_error();
      o.n_samples = plan.total();
      o.k = plan.k;
      o.l = plan.l;
    }
  }
  return out;
}

}  // namespace mgs
