#pragma once

#include <functional>
#include <vector>

#include "mgshadows/core.hpp"

namespace mgs {

// Even-dimensional complex antisymmetric matrix. Construction validates and
// symmetrizes, so every AntisymMatrix in circulation is well formed.
class AntisymMatrix {
 public:
  AntisymMatrix() = default;
  explicit AntisymMatrix(const CMat& a, double tol = 1e-12);
  explicit AntisymMatrix(const RMat& a, double tol = 1e-12);

  static AntisymMatrix zero(Eigen::Index dim);
  // Skips validation; for kernels that build antisymmetric matrices by
  // construction. Still symmetrizes.
  static AntisymMatrix trusted(CMat a);

  const CMat& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }
  bool is_real(double tol = 0.0) const;
  RMat real() const { return a_.real(); }

 private:
  CMat a_;
};

// A 2n x 2n real orthogonal matrix labelling the Gaussian unitary U_Q with
// U_Q^dag gamma_mu U_Q = sum_nu Q_{mu nu} gamma_nu. Either dense or a signed
// permutation: row mu carries the single entry signs[mu] at column perm[mu]
// (0-based).
class OrthogonalLabel {
 public:
  OrthogonalLabel() = default;

  static OrthogonalLabel identity(int n);
  static OrthogonalLabel from_dense(const RMat& q, double tol = 1e-12);
  static OrthogonalLabel from_signed_permutation(std::vector<int> perm,
                                                 std::vector<int> signs);

  int dim() const { return dim_; }
  int modes() const { return dim_ / 2; }
  int det() const { return det_; }
  bool is_signed_permutation() const { return signed_perm_; }

  const std::vector<int>& perm() const { return perm_; }
  const std::vector<int>& signs() const { return signs_; }

  // Dense 2n x 2n matrix (expands the signed-permutation form).
  RMat dense() const;
  OrthogonalLabel transpose() const;
  // Matrix product this * other.
  OrthogonalLabel compose(const OrthogonalLabel& other) const;

 private:
  int dim_ = 0;
  int det_ = 1;
  bool signed_perm_ = false;
  RMat q_;
  std::vector<int> perm_;
  std::vector<int> signs_;
};

struct ComplexPolynomial {
  std::vector<cplx> coeffs;  // c_0 .. c_d

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  cplx operator()(cplx z) const;
  cplx coeff(int k) const {
    return k >= 0 && k < static_cast<int>(coeffs.size()) ? coeffs[k] : cplx{};
  }
  // Drops trailing coefficients below rel_tol * max |c|.
  ComplexPolynomial trimmed(double rel_tol = 1e-12) const;
};

// Pfaffian by skew-symmetric Gaussian elimination with partial pivoting.
cplx pfaffian(const AntisymMatrix& a);
// Destructive kernels without validation; `a` must be antisymmetric with
// even dimension. Used on hot paths.
cplx pfaffian_inplace(CMat& a);
double pfaffian_inplace(RMat& a);

struct CanonicalForm {
  OrthogonalLabel r;           // A = R^T (sum_j lambda_j J) R
  std::vector<double> lambda;  // sorted descending, lambda_j >= 0
  int rank2r = 0;              // 2 * (number of nonzero lambda_j)
};

// Real antisymmetric canonical form. Values below tol * ||A||_max count as
// zero. R has det +1 whenever the form leaves a zero block to absorb the
// orientation; for full-rank A with pf(A) < 0 the orientation is carried by
// det R = -1 (see README).
CanonicalForm antisym_canonical(const RMat& a, double tol = 1e-12);
CanonicalForm antisym_canonical(const AntisymMatrix& a, double tol = 1e-12);

OrthogonalLabel haar_orthogonal(int n, Rng& rng);
OrthogonalLabel uniform_signed_permutation(int n, Rng& rng);

// h = F^T (sum_j sigma_j J) F with R = exp(2h); sigma_j in (-pi/2, pi/2].
struct RotationBlocks {
  RMat frame;
  std::vector<double> sigma;
  RMat generator() const;
};

RotationBlocks orthogonal_log_blocks(const OrthogonalLabel& r);
AntisymMatrix orthogonal_log(const OrthogonalLabel& r);

std::vector<cplx> roots_of_unity(int count);
ComplexPolynomial poly_from_values(const std::vector<cplx>& values);
// Samples f at degree+1 roots of unity and interpolates.
ComplexPolynomial interpolate(const std::function<cplx(cplx)>& f, int degree);

// Coefficients of z -> pf(B + zC) from the spectrum of B^{-1}C.
ComplexPolynomial linear_pfaffian_coeffs(const AntisymMatrix& b,
                                         const AntisymMatrix& c);
// Same coefficients given pf(B) and the eigenvalues of B^{-1}C (each listed
// with its full multiplicity, i.e. 2r values).
ComplexPolynomial pfaffian_poly_from_spectrum(cplx pf_b,
                                              const std::vector<cplx>& eig);

}  // namespace mgs
