#pragma once

// Per-sample estimators for matchgate shadows and their aggregation.

#include <cstdint>
#include <vector>

#include "mgshadows/simulator.hpp"
#include "mgshadows/variance.hpp"

namespace mgs {

// C(2n, 2l) / C(n, l): the eigenvalue inverse of the measurement channel on
// degree-2l Majorana products. Exact 128-bit binomials up to n = 64, log
// domain beyond.
double inverse_channel_coeff(int n, int l);
std::vector<double> inverse_channel_coeffs(int n);

// Q^T C_b Q: the covariance of U_Q^dag |b><b| U_Q.
RMat sample_covariance(const ShadowSample& s);

// tr(gamma~_S M^{-1}(U_Q^dag |b><b| U_Q)) with gamma~_mu = sum_nu Q'_{mu nu} gamma_nu.
cplx estimate_majorana_product(const ShadowSample& s, const OrthogonalLabel& frame,
                               const MajoranaSet& set);

// tr(rho_1 P_2l(rho_2)) for l = 0..n, for Gaussian states given by their
// covariance matrices.
std::vector<double> gaussian_fidelity_coefficients(const RMat& c1, const RMat& c2);

// Precomputes the canonical form of rho so that each shadow costs one
// linear-Pfaffian expansion of size rank(C_rho).
class GaussianFidelityEstimator {
 public:
  explicit GaussianFidelityEstimator(const RMat& c_rho);
  explicit GaussianFidelityEstimator(const GaussianStateSpec& g);

  int modes() const { return n_; }
  std::vector<double> coefficients(const RMat& c_other) const;
  double operator()(const ShadowSample& s) const;
  // p(1) = tr(rho rho_other).
  double overlap(const RMat& c_other) const;

 private:
  int n_ = 0;
  int r_ = 0;
  RMat q1_;            // first 2r rows of the canonical frame
  RVec sqrt_lambda_;   // sqrt(lambda_j) repeated on both rows of block j
  std::vector<double> inv_;
};

double estimate_gaussian_fidelity(const ShadowSample& s, const GaussianStateSpec& g);
// tr(rho_1 rho_2).
double gaussian_overlap(const GaussianStateSpec& g1, const GaussianStateSpec& g2);

// tr(|phi><0| P_2l(rho)) for l = 0..n, for an even-zeta Slater |phi> and a
// Gaussian rho given by its covariance.
class SlaterOverlapEstimator {
 public:
  explicit SlaterOverlapEstimator(const SlaterSpec& s);

  int modes() const { return n_; }
  int zeta() const { return zeta_; }
  std::vector<cplx> coefficients(const RMat& c_rho) const;
  // Unbiased single-shot estimate of tr(|phi><0| rho).
  cplx operator()(const ShadowSample& s) const;
  // Same, given the sample covariance Q^T C_b Q.
  cplx estimate(const RMat& c_sample) const;

 private:
  int n_ = 0;
  int zeta_ = 0;
  RMat p_re_, p_im_;  // (W^* Q~) restricted to the rows in S-bar
  CMat c0_;      // C_vac restricted to S-bar
  cplx prefactor_;
  std::vector<double> inv_;
};

cplx estimate_slater_overlap_op(const ShadowSample& s, const SlaterSpec& sl);

// ------------------------------------------------------------ aggregation

// Streaming median-of-means over k blocks of l consecutive values. Extra
// values beyond k * l are ignored.
class MedianOfMeans {
 public:
  MedianOfMeans(std::uint64_t k, std::uint64_t l);

  void add(cplx v);
  std::uint64_t count() const { return count_; }
  bool complete() const { return count_ >= k_ * l_; }
  // Component-wise median of the block means; the lower median for even k.
  cplx estimate() const;
  // Standard error of the plain mean over the values used.
  double standard_error() const;

 private:
  std::uint64_t k_, l_;
  std::uint64_t count_ = 0;
  std::vector<cplx> block_sums_;
  cplx sum_ = 0;
  double sum_sq_ = 0;
};

cplx median_of_means(const std::vector<cplx>& values, std::uint64_t k, std::uint64_t l);

struct EstimateSeries {
  std::vector<cplx> values;
  cplx aggregate;
  double standard_error = 0;
};

EstimateSeries summarize(std::vector<cplx> values, std::uint64_t k, std::uint64_t l);

// ------------------------------------------------------------ end-to-end overlap estimation

struct OverlapOptions {
  double eps = 0.1;
  double delta = 0.05;
  Ensemble ensemble = Ensemble::haar;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct OverlapEstimate {
  cplx estimate;                // estimate of <psi|phi_i>
  double standard_error = 0;
  std::uint64_t n_samples = 0;  // shadows used for this estimate
  std::uint64_t k = 0;
  std::uint64_t l = 0;
  int padded_modes = 0;
  int padded_zeta = 0;
  double bound = 0;             // b(padded_modes, padded_zeta)
};

// Estimates <psi|phi_i> for every Slater determinant. Each target is padded
// with one or two occupied ancilla modes so that the padded Slater has even
// fermion number and the padded psi avoids the vacuum; shadows of the probe
// (|vac> + |psi'>)/sqrt2 are drawn once per padding width and shared by all
// targets of that width.
std::vector<OverlapEstimate> algorithm1(const Statevector& psi,
                                        const std::vector<SlaterSpec>& slaters,
                                        const OverlapOptions& opt);

}  // namespace mgs
