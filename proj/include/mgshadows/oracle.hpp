#pragma once

// Brute-force dense references with exponential cost. Everything here is
// independent of the fast estimators and exists to check them.

#include <functional>
#include <unordered_map>
#include <vector>

#include "mgshadows/fermion.hpp"

namespace mgs::oracle {

inline constexpr int kMaxDenseModes = 7;

// Operator acting as |x> -> phase[x] |x ^ flip>; every Majorana product has
// this form in the computational basis.
struct Monomial {
  std::uint64_t flip = 0;
  std::vector<cplx> phase;

  int modes() const;
  CMat dense() const;
  Monomial operator*(const Monomial& rhs) const;
  // tr(this^dag a)
  cplx overlap(const CMat& a) const;
};

Monomial majorana_monomial(int n, int mu);
// gamma_S for every mask S in [0, 4^n), in order of the mask value.
std::vector<Monomial> all_majorana_products(int n);

CMat majorana_matrix(int n, int mu);
CMat majorana_product(int n, std::uint64_t mask);
// sum_nu q(mu-1, nu) gamma_nu for 1-based mu.
CMat rotated_majorana(const RMat& q, int mu);
CMat rotated_majorana_product(const RMat& q, const std::vector<int>& indices);

// A = sum_S c_S gamma_S with c_S = tr(gamma_S^dag A) / 2^n.
std::vector<cplx> majorana_coefficients(const CMat& a);
CMat from_majorana_coefficients(int n, const std::vector<cplx>& c);
CMat grade_project(const CMat& a, int k);
CMat apply_inverse_channel(const CMat& a);
CMat apply_channel_closed_form(const CMat& a);
double inverse_coeff(int n, int l);

CMat gaussian_density(int n, const std::vector<cplx>& lambda, const RMat& frame);
CMat gaussian_density(const GaussianStateSpec& g);
// exp((1/2) sum h_{mu nu} gamma_mu gamma_nu) by dense matrix exponential.
CMat gaussian_unitary(const RMat& h);
CVec slater_state(const SlaterSpec& s);
CVec pure_gaussian_state(const PureGaussian& g);

// ------------------------------------------------ Majorana-index algebra

// Sign s with gamma_S gamma_T = s gamma_{S xor T}.
int product_sign(std::uint64_t s, std::uint64_t t);

struct SignedMask {
  std::uint64_t mask;
  int sign;
};
// U_Q^dag gamma_S U_Q for a signed permutation Q.
SignedMask act_signed_permutation(const OrthogonalLabel& q, std::uint64_t s);

// All of B(2n): permutations in lexicographic order, then sign masks.
void for_each_signed_permutation(int n, const std::function<void(const OrthogonalLabel&)>& f);
std::uint64_t signed_permutation_count(int n);

// Superoperators in the orthonormal basis gamma_S / sqrt(2^n).
CMat exact_channel(int n);
CMat closed_form_channel(int n);

// Sparse superoperator on the j-fold tensor space; key = row * dim + col.
struct SparseSuperop {
  std::uint64_t dim = 0;
  std::unordered_map<std::uint64_t, double> entries;
};
SparseSuperop exact_twirl(int n, int j, int threads = 1);
SparseSuperop theorem1_twirl(int n, int j);
double max_abs_difference(const SparseSuperop& a, const SparseSuperop& b);
// Dense channel matrix of U_Q^dag (.) U_Q for any orthogonal Q (via minors).
RMat channel_matrix(const RMat& q);

// Calls f(Q, b, weight) over B(2n) x {0,1}^n with weight = p(b|Q) / |B(2n)|.
void enumerate_clifford_outcomes(
    const CMat& rho,
    const std::function<void(const OrthogonalLabel&, const Bitstring&, double)>& f);

struct Moments {
  cplx mean;
  double second_moment = 0;  // E |o|^2
  double variance = 0;       // E |o|^2 - |E o|^2
};
// Exact moments of o(Q, b) = tr(O M^{-1}(U_Q^dag |b><b| U_Q)) over the
// Clifford ensemble (equal to the Haar ensemble by the 3-design property).
Moments exact_shadow_moments(const CMat& rho, const CMat& o);
// Exact moments of an arbitrary per-sample estimator.
Moments exact_estimator_moments(
    const CMat& rho, const std::function<cplx(const OrthogonalLabel&, const Bitstring&)>& est);

// Triple-sum formula for E|o|^2 expressed in the frame gamma~ = frame gamma.
double exact_variance_bound(const CMat& rho, const CMat& o, const RMat& frame);
// State-independent version (absolute values, rho dropped).
double state_independent_variance_bound(const CMat& o, const RMat& frame);

}  // namespace mgs::oracle
