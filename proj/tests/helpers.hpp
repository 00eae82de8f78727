#pragma once

// Random instance generators shared by the unit and acceptance tests.

#include <cmath>
#include <random>

#include "mgshadows/fermion.hpp"
#include "mgshadows/grassmann.hpp"
#include "mgshadows/oracle.hpp"
#include "mgshadows/simulator.hpp"

namespace mgs::testing {

inline RMat random_real(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> g;
  RMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline CMat random_complex(Eigen::Index r, Eigen::Index c, Rng& rng) {
  return random_real(r, c, rng).cast<cplx>() + I_unit * random_real(r, c, rng).cast<cplx>();
}

inline RMat random_antisym(int d, Rng& rng) {
  const RMat a = random_real(d, d, rng);
  return a - a.transpose();
}

inline CMat random_complex_antisym(int d, Rng& rng) {
  const CMat a = random_complex(d, d, rng);
  return a - a.transpose();
}

inline RMat random_special_orthogonal(int n, Rng& rng) {
  RMat q = haar_orthogonal(n, rng).dense();
  if (q.determinant() < 0) q.row(0) *= -1.0;
  return q;
}

// Gaussian spec with lambda entries drawn from `kind`: 0 mixed, 1 pure,
// 2 mixed with some exact zeros (rank deficient covariance).
inline GaussianStateSpec random_gaussian(int n, Rng& rng, int kind = 0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  GaussianStateSpec g;
  g.n = n;
  for (int j = 0; j < n; ++j) {
    double l = u(rng);
    if (kind == 1) l = coin(rng) ? 1.0 : -1.0;
    if (kind == 2 && coin(rng)) l = 0.0;
    g.lambda.push_back(l);
  }
  g.frame = haar_orthogonal(n, rng);
  return g;
}

inline Statevector random_state(int n, Rng& rng) {
  Statevector s;
  s.n = n;
  s.amp = random_complex(std::int64_t{1} << n, 1, rng);
  s.amp.normalize();
  return s;
}

inline SlaterSpec random_slater(int n, int zeta, Rng& rng) {
  SlaterSpec s;
  s.n = n;
  s.zeta = zeta;
  Eigen::HouseholderQR<CMat> qr(random_complex(n, n, rng));
  const CMat u = qr.householderQ();
  s.v = u.topRows(zeta);
  return s;
}

inline CMat density(const CVec& psi) { return psi * psi.adjoint(); }

inline CMat random_density(int n, Rng& rng) {
  const CMat a = random_complex(std::int64_t{1} << n, std::int64_t{1} << n, rng);
  CMat rho = a * a.adjoint();
  return rho / rho.trace();
}

// Random operator built only from even Majorana products.
inline CMat random_even_operator(int n, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> c(std::size_t{1} << (2 * n));
  for (std::size_t s = 0; s < c.size(); ++s)
    if (__builtin_popcountll(s) % 2 == 0) c[s] = cplx(g(rng), g(rng));
  return oracle::from_majorana_coefficients(n, c);
}

// Dense unitary of the compiled matchgate circuit (equal to U_Q up to a phase).
inline CMat circuit_unitary(const OrthogonalLabel& q) {
  const int n = q.modes();
  const auto circ = compile_givens(q);
  const auto d = std::int64_t{1} << n;
  CMat u(d, d);
  for (std::int64_t x = 0; x < d; ++x) {
    auto s = Statevector::basis(n, static_cast<std::uint64_t>(x));
    apply_givens_circuit(s, circ);
    u.col(x) = s.amp;
  }
  return u;
}

// U_Q^dag |b><b| U_Q as a dense matrix.
inline CMat shadow_density(const ShadowSample& s) {
  const CMat u = circuit_unitary(s.q);
  const CVec col = u.adjoint().col(static_cast<Eigen::Index>(s.b.index()));
  return col * col.adjoint();
}

// Dense per-sample reference tr(O M^{-1}(U_Q^dag |b><b| U_Q)).
inline cplx oracle_estimate(const CMat& o, const ShadowSample& s) {
  return (o * oracle::apply_inverse_channel(shadow_density(s))).trace();
}

inline ShadowSample random_sample(int n, Rng& rng, bool clifford = false) {
  ShadowSample s;
  s.ensemble = clifford ? Ensemble::clifford : Ensemble::haar;
  s.q = clifford ? uniform_signed_permutation(n, rng) : haar_orthogonal(n, rng);
  std::vector<std::uint8_t> bits(n);
  std::bernoulli_distribution coin(0.5);
  for (auto& b : bits) b = coin(rng);
  s.b = Bitstring(bits);
  return s;
}

// Dense matrix of an operator descriptor, built independently of the
// Grassmann encoding (matrix exponential for unitaries).
inline CMat dense_descriptor(const grassmann::OperatorDescriptor& op) {
  const int n = grassmann::descriptor_modes(op);
  const auto dim = std::int64_t{1} << n;
  if (const auto* p = std::get_if<grassmann::MajoranaProductOp>(&op)) {
    CMat a = p->coefficient * CMat::Identity(dim, dim);
    for (const auto& f : p->factors) {
      CMat l = CMat::Zero(dim, dim);
      for (int mu = 0; mu < 2 * n; ++mu) l += f(mu) * oracle::majorana_matrix(n, mu + 1);
      a = a * l;
    }
    return a;
  }
  if (const auto* g = std::get_if<grassmann::GaussianDensityOp>(&op))
    return oracle::gaussian_density(n, g->lambda, g->frame);
  if (const auto* u = std::get_if<grassmann::GaussianUnitaryOp>(&op)) {
    const RMat h = orthogonal_log(OrthogonalLabel::from_dense(u->r, 1e-8)).matrix().real();
    CMat m = u->phase * oracle::gaussian_unitary(h);
    if (u->leading_gamma1) m = oracle::majorana_matrix(n, 1) * m;
    return m;
  }
  static const cplx minus_i_pow[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
  CMat p = minus_i_pow[n % 4] * CMat::Identity(dim, dim);
  for (int mu = 1; mu <= 2 * n; ++mu) p = p * oracle::majorana_matrix(n, mu);
  return p;
}

inline cplx dense_trace_product(const std::vector<grassmann::OperatorDescriptor>& ops) {
  const int n = grassmann::descriptor_modes(ops.front());
  const auto dim = std::int64_t{1} << n;
  CMat a = CMat::Identity(dim, dim);
  for (const auto& op : ops) a = a * dense_descriptor(op);
  return a.trace();
}

inline double max_abs(const CMat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace mgs::testing
