#include <doctest.h>

#include "helpers.hpp"
#include "mgshadows/fermion.hpp"
#include "mgshadows/oracle.hpp"

using namespace mgs;
using namespace mgs::testing;

namespace {

// (C)_{mu nu} = -(i/2) tr([gamma_mu, gamma_nu] rho) from dense matrices.
RMat dense_covariance(const CMat& rho) {
  const int n = std::countr_zero(static_cast<std::uint64_t>(rho.rows()));
  RMat c(2 * n, 2 * n);
  for (int mu = 0; mu < 2 * n; ++mu)
    for (int nu = 0; nu < 2 * n; ++nu) {
      const CMat a = oracle::majorana_matrix(n, mu + 1), b = oracle::majorana_matrix(n, nu + 1);
      c(mu, nu) = (-0.5 * I_unit * ((a * b - b * a) * rho).trace()).real();
    }
  return c;
}

}  // namespace

TEST_CASE("MajoranaSet and Bitstring") {
  const MajoranaSet s(3, {5, 1, 2});
  CHECK(s.indices() == std::vector<int>{1, 2, 5});
  CHECK(s.mask() == 0b10011);
  CHECK_THROWS_AS(MajoranaSet(2, {1, 1}), ValidationError);
  CHECK_THROWS_AS(MajoranaSet(2, {5}), ValidationError);
  const auto b = Bitstring::parse("0110");
  CHECK(b.str() == "0110");
  CHECK(b.index() == 6);
  CHECK(Bitstring::from_index(4, 6) == b);
  CHECK_THROWS_AS(Bitstring::parse("01x"), ValidationError);
}

TEST_CASE("covariance_of_basis_state") {
  const RMat c0 = covariance_of_basis_state(Bitstring::parse("000"));
  const RMat c1 = covariance_of_basis_state(Bitstring::parse("111"));
  for (int j = 0; j < 3; ++j) {
    CHECK(c0(2 * j, 2 * j + 1) == 1.0);
    CHECK(c0(2 * j + 1, 2 * j) == -1.0);
    CHECK(c1(2 * j, 2 * j + 1) == -1.0);
  }
  const RMat c01 = covariance_of_basis_state(Bitstring::parse("01"));
  CHECK(c01(0, 1) == 1.0);
  CHECK(c01(2, 3) == -1.0);
  CHECK(max_abs(dense_covariance(oracle::gaussian_density(3, {1, -1, 1}, RMat::Identity(6, 6))) -
                covariance_of_basis_state(Bitstring::parse("010"))) < 1e-14);
}

TEST_CASE("covariance_of_gaussian") {
  Rng rng(31);
  GaussianStateSpec g;
  g.n = 2;
  g.lambda = {1, 1};
  g.frame = OrthogonalLabel::identity(2);
  CHECK(max_abs(covariance_of_gaussian(g) - covariance_of_basis_state(Bitstring::zeros(2))) == 0.0);
  g.lambda = {0, 0};
  g.frame = haar_orthogonal(2, rng);
  CHECK(max_abs(covariance_of_gaussian(g)) < 1e-15);
  for (int trial = 0; trial < 5; ++trial) {
    const auto spec = random_gaussian(3, rng);
    CHECK(max_abs(covariance_of_gaussian(spec) - dense_covariance(oracle::gaussian_density(spec))) <= 1e-10);
    const auto pure = random_gaussian(3, rng, 1);
    const RMat c = covariance_of_gaussian(pure);
    CHECK(max_abs(c.transpose() * c - RMat::Identity(6, 6)) <= 1e-10);
  }
  g.lambda = {1.5, 0};
  CHECK_THROWS_AS(covariance_of_gaussian(g), ValidationError);
}

TEST_CASE("rotate_covariance") {
  Rng rng(32);
  const RMat c = covariance_of_gaussian(random_gaussian(3, rng));
  CHECK(max_abs(rotate_covariance(c, OrthogonalLabel::identity(3)) - c) == 0.0);
  const auto q1 = haar_orthogonal(3, rng), q2 = uniform_signed_permutation(3, rng);
  CHECK(max_abs(rotate_covariance(rotate_covariance(c, q1), q2) - rotate_covariance(c, q1.compose(q2))) <=
        1e-12);
  CHECK(max_abs(rotate_covariance(c, q2) - q2.dense().transpose() * c * q2.dense()) <= 1e-14);
  // C_{U_Q^dag rho U_Q} = Q^T C Q with the dense unitary from the generator.
  const RMat q = random_special_orthogonal(3, rng);
  const CMat u = oracle::gaussian_unitary(orthogonal_log(OrthogonalLabel::from_dense(q)).real());
  const auto spec = random_gaussian(3, rng);
  const CMat rho = oracle::gaussian_density(spec);
  CHECK(max_abs(dense_covariance(u.adjoint() * rho * u) -
                rotate_covariance(covariance_of_gaussian(spec), OrthogonalLabel::from_dense(q))) <= 1e-10);
}

TEST_CASE("slater_orthogonal") {
  SlaterSpec s;
  s.n = 3;
  s.zeta = 2;
  s.v = CMat::Identity(3, 3).topRows(2);
  CHECK(max_abs(slater_orthogonal(s).dense() - RMat::Identity(6, 6)) < 1e-15);

  SlaterSpec one;
  one.n = 1;
  one.zeta = 1;
  one.v = CMat::Constant(1, 1, I_unit);
  RMat expect(2, 2);
  expect << 0, -1, 1, 0;
  CHECK(max_abs(slater_orthogonal(one).dense() - expect) < 1e-15);

  Rng rng(33);
  for (int zeta = 0; zeta <= 3; ++zeta) {
    const auto spec = random_slater(3, zeta, rng);
    const auto q = slater_orthogonal(spec);
    CHECK(max_abs(q.dense().transpose() * q.dense() - RMat::Identity(6, 6)) <= 1e-12);
    CHECK(q.det() == 1);
    // Covariance of the Slater determinant from the rotated basis state.
    std::string occ(3, '0');
    for (int j = 0; j < zeta; ++j) occ[j] = '1';
    const RMat c = rotate_covariance(covariance_of_basis_state(Bitstring::parse(occ)), q);
    const CVec phi = oracle::slater_state(spec);
    CHECK(std::abs(phi.norm() - 1.0) < 1e-12);
    CHECK(max_abs(c - dense_covariance(density(phi))) <= 1e-10);
  }
  SlaterSpec bad;
  bad.n = 2;
  bad.zeta = 2;
  bad.v = CMat::Ones(2, 2);
  CHECK_THROWS_AS(slater_orthogonal(bad), ValidationError);
}

TEST_CASE("w_matrix and s_bar") {
  CHECK(max_abs(w_matrix(0, 3) - CMat::Identity(6, 6)) == 0.0);
  const CMat w = w_matrix(2, 2);
  CHECK(max_abs(w * w.adjoint() - CMat::Identity(4, 4)) < 1e-15);
  CHECK(s_bar(2, 3).indices() == std::vector<int>{2, 4, 5, 6});
  CHECK_THROWS_AS(w_matrix(1, 2), ValidationError);
}

TEST_CASE("pure Gaussian specs and parity") {
  Rng rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_gaussian(3, rng, 1);
    const RMat c = covariance_of_gaussian(g);
    const double pf = pfaffian(AntisymMatrix(c)).real();
    CHECK(std::abs(pf - gaussian_parity(g)) < 1e-10);
    if (gaussian_parity(g) < 0) {
      CHECK_THROWS_AS(pure_gaussian_from_spec(g), ValidationError);
      continue;
    }
    const auto pg = pure_gaussian_from_spec(g);
    CHECK(pg.r.det() == 1);
    const CVec phi = oracle::pure_gaussian_state(pg);
    CHECK(max_abs(density(phi) - oracle::gaussian_density(g)) <= 1e-10);
  }
  CHECK_THROWS_AS(gaussian_parity(random_gaussian(2, rng, 0)), ValidationError);
}

TEST_CASE("padding preserves overlaps") {
  Rng rng(35);
  for (int zeta = 0; zeta <= 3; ++zeta) {
    const auto psi = random_state(3, rng);
    const auto s = random_slater(3, zeta, rng);
    const auto pad = pad_for_overlap(psi, s);
    CHECK(pad.ancillas == (zeta % 2 ? 1 : 2));
    CHECK(pad.phi.zeta % 2 == 0);
    CHECK(pad.phi.zeta == zeta + pad.ancillas);
    const cplx target = oracle::slater_state(s).dot(psi.amp);  // <phi|psi>
    const CVec big_phi = oracle::slater_state(pad.phi);
    CHECK(std::abs(big_phi.dot(pad.psi.amp) - target) <= 1e-12);
    CHECK(std::abs(pad.psi.amp(0)) == 0.0);
    CHECK(std::abs(big_phi(0)) <= 1e-15);
    // The probe (|0> + |Psi>)/sqrt2 recovers the overlap as 2 tr(|Phi><0| rho).
    const auto probe = overlap_probe(pad.psi);
    const CMat o = big_phi * CVec::Unit(big_phi.size(), 0).adjoint();
    const cplx est = pad.scale * (o * density(probe.amp)).trace();
    CHECK(std::abs(est - std::conj(target)) <= 1e-12);
  }
  for (int trial = 0; trial < 6; ++trial) {
    const auto psi = random_state(3, rng);
    const auto g = random_gaussian(3, rng, 1);
    const auto pad = pad_for_gaussian_overlap(psi, g);
    CHECK(pad.ancillas == (gaussian_parity(g) < 0 ? 1 : 2));
    const CMat target_rho = oracle::gaussian_density(g);
    const CVec big_phi = oracle::pure_gaussian_state(pad.phi);
    // |<phi|psi>|^2 is phase independent.
    const double target = (target_rho * density(psi.amp)).trace().real();
    CHECK(std::abs(std::norm(big_phi.dot(pad.psi.amp)) - target) <= 1e-12);
    CHECK(std::abs(big_phi(0)) <= 1e-12);
  }
  CHECK_THROWS_AS(pad_for_gaussian_overlap(random_state(2, rng), random_gaussian(2, rng, 0)),
                  ValidationError);
}
