#pragma once

// Grassmann-integral machinery for general observables: a symbolic algebra
// for checking, the recursive evaluator for
//   g(B, M) = \int D chi (B chi)_1 ... (B chi)_K exp(chi^T M chi / 2),
// the trace-to-integral transform for products of operators, and the
// per-sample estimator of tr(gamma~_S |phi><0| rho) for pure Gaussian |phi>.

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "mgshadows/fermion.hpp"
#include "mgshadows/simulator.hpp"
#include "mgshadows/skewlin.hpp"

namespace mgs::grassmann {

// ------------------------------------------------------------ symbolic algebra

// Element of the Grassmann algebra on `generators` variables, stored as a
// sparse map from sorted index subsets (bit mu for chi_{mu+1}) to
// coefficients. Intended for small checks: at most 24 generators.
class GrassmannElement {
 public:
  static constexpr int kMaxGenerators = 24;

  explicit GrassmannElement(int generators = 0);
  static GrassmannElement scalar(int generators, cplx c);
  // chi_{mu+1} (0-based mu).
  static GrassmannElement generator(int generators, int mu);
  // sum_mu c_mu chi_{mu+1}.
  static GrassmannElement linear(int generators, const CVec& c);
  // exp(chi^T M chi / 2) for antisymmetric M.
  static GrassmannElement gaussian(const CMat& m);

  int generators() const { return g_; }
  const std::map<std::uint32_t, cplx>& terms() const { return terms_; }
  cplx coefficient(std::uint32_t subset) const;
  // \int D chi: the coefficient of chi_1 ... chi_{2N}.
  cplx integrate() const;

  GrassmannElement operator*(const GrassmannElement& o) const;
  GrassmannElement operator+(const GrassmannElement& o) const;
  GrassmannElement operator*(cplx c) const;

 private:
  void add(std::uint32_t subset, cplx c);

  int g_ = 0;
  std::map<std::uint32_t, cplx> terms_;
};

// Sign of chi_A chi_B = sign * chi_{A u B} for disjoint subsets A, B.
int merge_sign(std::uint32_t a, std::uint32_t b);

// prefactor * g(B, M).
struct GrassmannIntegralSpec {
  cplx prefactor{1.0, 0.0};
  CMat b;           // K x 2N
  AntisymMatrix m;  // 2N x 2N
};

// Direct symbolic expansion; 2N <= 12.
cplx grassmann_integrate_brute(const GrassmannIntegralSpec& spec);

// ------------------------------------------------------------ recursive integral evaluation

struct IntegralResult {
  cplx value;
  int depth = 0;  // number of recursive calls below the top level
};

// g(B, M) for any K x 2N matrix B and antisymmetric M. M counts as
// invertible when its smallest singular value exceeds 1e-10 times the
// largest; otherwise the kernel is split off and the integral recurses on a
// problem whose generator count is K < 2N.
IntegralResult evaluate_integral_traced(const CMat& b, const CMat& m);
cplx evaluate_integral(const CMat& b, const AntisymMatrix& m);
cplx evaluate(const GrassmannIntegralSpec& spec);

// Natural magnitude of g(B, M): ||B||^K max(||M||, 1)^(N - K/2) with max
// norms. Used as the floor of relative-error comparisons.
double integral_scale(const CMat& b, const CMat& m);

// ------------------------------------------------------------ operators

// c * L_1 ... L_l with L_p = sum_mu factors[p]_mu gamma_mu; the L_p must
// mutually anticommute. No factors is c * I.
struct MajoranaProductOp {
  int n = 0;
  std::vector<CVec> factors;
  cplx coefficient{1.0, 0.0};
};

// prod_j (I - i lambda_j gamma~_{2j-1} gamma~_{2j}) / 2 with
// gamma~ = frame gamma; lambda_j may be any complex number.
struct GaussianDensityOp {
  int n = 0;
  std::vector<cplx> lambda;
  RMat frame;

  CMat covariance() const;  // frame^T (sum_j lambda_j J) frame
};

// phase * gamma_1^[leading_gamma1] * U_R, R in SO(2n), with
// U_R = exp(sum_j sigma_j gamma'_{2j-1} gamma'_{2j}) from the principal
// logarithm R = exp(2h).
struct GaussianUnitaryOp {
  int n = 0;
  RMat r;
  cplx phase{1.0, 0.0};
  bool leading_gamma1 = false;
};

// (-i)^n gamma_1 ... gamma_2n.
struct ParityOp {
  int n = 0;
};

using OperatorDescriptor = std::variant<MajoranaProductOp, GaussianDensityOp, GaussianUnitaryOp, ParityOp>;

int descriptor_modes(const OperatorDescriptor& op);
void validate_descriptor(const OperatorDescriptor& op, double tol = 1e-9);

MajoranaProductOp identity_op(int n);
// gamma~_{mu_1} ... gamma~_{mu_k} for gamma~ = frame gamma and S = {mu_1 < ...}.
MajoranaProductOp majorana_op(const MajoranaSet& s, const RMat& frame);
GaussianDensityOp density_op(const GaussianStateSpec& g);
GaussianDensityOp density_op(int n, std::vector<cplx> lambda, const RMat& frame);
// U_Q labelled by Q in O(2n) with an explicit global phase. det Q = -1 is
// written as phase * gamma_1 U_R with R = diag(1, -1, ..., -1) Q.
GaussianUnitaryOp unitary_op(const RMat& q, cplx phase = 1.0);

struct TraceOptions {
  // Integrate out a parity operator analytically (one fewer variable set).
  bool parity_shortcut = true;
};

// tr(A_1 ... A_m) = prefactor * g(B, M).
GrassmannIntegralSpec trace_to_integral(const std::vector<OperatorDescriptor>& ops,
                                        const TraceOptions& opt = {});
cplx trace_product(const std::vector<OperatorDescriptor>& ops, const TraceOptions& opt = {});

// cos(sigma_j) below this counts as zero in the unitary encoding.
inline constexpr double kCosineFloor = 1e-12;

// ------------------------------------------------------------ worked example

// tr(gamma~_S |phi><0| P_2l(rho)) for l = 0..n, with gamma~ = frame gamma,
// |phi> = phase U_R |0>, and rho Gaussian with covariance c_rho.
class GeneralOverlapEstimator {
 public:
  GeneralOverlapEstimator(const MajoranaSet& s, const RMat& frame, const PureGaussian& phi,
                          int threads = 1);

  int modes() const { return n_; }
  std::vector<cplx> coefficients(const RMat& c_rho) const;
  cplx operator()(const ShadowSample& sample) const;

 private:
  int n_ = 0;
  int threads_ = 1;
  GrassmannIntegralSpec base_;  // the z = 0 integral
  std::vector<double> inv_;
};

cplx estimate_general(const ShadowSample& sample, const MajoranaSet& s, const RMat& frame,
                      const PureGaussian& phi);

}  // namespace mgs::grassmann
