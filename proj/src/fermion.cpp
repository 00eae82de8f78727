#include "mgshadows/fermion.hpp"

#include <algorithm>
#include <cmath>

namespace mgs {

// ------------------------------------------------------------------ MajoranaSet

MajoranaSet::MajoranaSet(int n, std::vector<int> indices) : n_(n), idx_(std::move(indices)) {
  require(n >= 0, "MajoranaSet: negative mode count");
  std::sort(idx_.begin(), idx_.end());
  require(std::adjacent_find(idx_.begin(), idx_.end()) == idx_.end(),
          "MajoranaSet: repeated index");
  for (int mu : idx_) require(mu >= 1 && mu <= 2 * n, "MajoranaSet: index out of range 1..2n");
}

std::uint64_t MajoranaSet::mask() const {
  require(2 * n_ <= 64, "MajoranaSet::mask needs 2n <= 64");
  std::uint64_t m = 0;
  for (int mu : idx_) m |= std::uint64_t{1} << (mu - 1);
  return m;
}

// -------------------------------------------------------------------- Bitstring

Bitstring::Bitstring(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) require(b <= 1, "Bitstring: bits must be 0 or 1");
}

Bitstring Bitstring::parse(const std::string& s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (char ch : s) {
    require(ch == '0' || ch == '1', "Bitstring: expected only '0'/'1' characters");
    bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return Bitstring(std::move(bits));
}

std::string Bitstring::str() const {
  std::string s(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j) s[j] = bits_[j] ? '1' : '0';
  return s;
}

std::uint64_t Bitstring::index() const {
  require(bits_.size() <= 63, "Bitstring::index: too many bits");
  std::uint64_t x = 0;
  for (auto b : bits_) x = (x << 1) | b;
  return x;
}

Bitstring Bitstring::from_index(int n, std::uint64_t index) {
  std::vector<std::uint8_t> bits(n);
  for (int j = 0; j < n; ++j) bits[j] = (index >> (n - 1 - j)) & 1U;
  return Bitstring(std::move(bits));
}

// ------------------------------------------------------------------ validation

void GaussianStateSpec::validate() const {
  require(n >= 1, "GaussianStateSpec: n must be >= 1");
  require(static_cast<int>(lambda.size()) == n, "GaussianStateSpec: lambda must have n entries");
  for (double l : lambda)
    require(std::isfinite(l) && std::abs(l) <= 1.0 + 1e-10, "GaussianStateSpec: |lambda_j| > 1");
  require(frame.dim() == 2 * n, "GaussianStateSpec: frame must be 2n x 2n");
}

bool GaussianStateSpec::is_pure(double tol) const {
  return std::all_of(lambda.begin(), lambda.end(),
                     [&](double l) { return std::abs(std::abs(l) - 1.0) <= tol; });
}

void SlaterSpec::validate() const {
  require(n >= 1, "SlaterSpec: n must be >= 1");
  require(zeta >= 0 && zeta <= n, "SlaterSpec: need 0 <= zeta <= n");
  require(v.rows() == zeta && v.cols() == n, "SlaterSpec: V must be zeta x n");
  if (zeta == 0) return;
  const double err =
      (v * v.adjoint() - CMat::Identity(zeta, zeta)).cwiseAbs().maxCoeff();
  require(err <= 1e-10, "SlaterSpec: rows of V are not orthonormal");
}

Statevector Statevector::basis(int n, std::uint64_t index) {
  Statevector s;
  s.n = n;
  s.amp = CVec::Zero(std::int64_t{1} << n);
  s.amp(static_cast<Eigen::Index>(index)) = 1.0;
  return s;
}

void Statevector::validate(double tol) const {
  require(n >= 1, "Statevector: n must be >= 1");
  if (n > 14) throw ResourceError("Statevector: n > 14 exceeds the simulator cap");
  require(amp.size() == (Eigen::Index{1} << n), "Statevector: need 2^n amplitudes");
  require(std::abs(amp.norm() - 1.0) <= tol, "Statevector: not normalized");
}

// ------------------------------------------------------------------ covariance

RMat covariance_of_basis_state(const Bitstring& b) {
  const int n = b.size();
  RMat c = RMat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double s = b[j] ? -1.0 : 1.0;
    c(2 * j, 2 * j + 1) = s;
    c(2 * j + 1, 2 * j) = -s;
  }
  return c;
}

RMat covariance_of_gaussian(const GaussianStateSpec& g) {
  g.validate();
  RMat c = RMat::Zero(2 * g.n, 2 * g.n);
  for (int j = 0; j < g.n; ++j) {
    c(2 * j, 2 * j + 1) = g.lambda[j];
    c(2 * j + 1, 2 * j) = -g.lambda[j];
  }
  return rotate_covariance(c, g.frame);
}

void validate_covariance(const RMat& c, double tol) {
  require(c.rows() == c.cols() && c.rows() % 2 == 0 && c.rows() > 0,
          "covariance must be a nonempty even square matrix");
  const double asym = (c + c.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10, "covariance is not antisymmetric");
  Eigen::SelfAdjointEigenSolver<CMat> es(cplx(0.0, 1.0) * c.cast<cplx>(), Eigen::EigenvaluesOnly);
  require(es.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + tol,
          "covariance has a singular value above 1 (not a valid state)");
}

RMat rotate_covariance(const RMat& c, const OrthogonalLabel& q) {
  require(c.rows() == q.dim() && c.cols() == q.dim(), "rotate_covariance: dimension mismatch");
  if (!q.is_signed_permutation()) {
    const RMat qd = q.dense();
    return qd.transpose() * c * qd;
  }
  const int d = q.dim();
  std::vector<int> inv(d);
  for (int k = 0; k < d; ++k) inv[q.perm()[k]] = k;
  RMat out(d, d);
  for (int j = 0; j < d; ++j) {
    const int kj = inv[j];
    for (int i = 0; i < d; ++i) {
      const int ki = inv[i];
      out(i, j) = q.signs()[ki] * q.signs()[kj] * c(ki, kj);
    }
  }
  return out;
}

// --------------------------------------------------------------------- Slater

CMat complete_unitary(const CMat& v) {
  const Eigen::Index zeta = v.rows(), n = v.cols();
  CMat u(n, n);
  u.topRows(zeta) = v;
  Eigen::Index filled = zeta;
  for (Eigen::Index k = 0; k < n && filled < n; ++k) {
    CVec w = CVec::Unit(n, k);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < filled; ++r) {
        const CVec row = u.row(r).transpose();
        const cplx proj = row.dot(w);  // sum conj(row) * w
        w -= proj * row;
      }
    const double nrm = w.norm();
    if (nrm > 1e-6) u.row(filled++) = (w / nrm).transpose();
  }
  require(filled == n, "complete_unitary: V is rank deficient");
  return u;
}

OrthogonalLabel slater_orthogonal(const SlaterSpec& s) {
  s.validate();
  const CMat u = complete_unitary(s.v);
  const int n = s.n;
  RMat q(2 * n, 2 * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double re = u(j, k).real(), im = u(j, k).imag();
      q(2 * j, 2 * k) = re;
      q(2 * j, 2 * k + 1) = -im;
      q(2 * j + 1, 2 * k) = im;
      q(2 * j + 1, 2 * k + 1) = re;
    }
  return OrthogonalLabel::from_dense(q, 1e-9);
}

CMat w_matrix(int zeta, int n) {
  require(zeta % 2 == 0, "w_matrix: zeta must be even");
  require(zeta >= 0 && zeta <= n, "w_matrix: need 0 <= zeta <= n");
  CMat w = CMat::Identity(2 * n, 2 * n);
  const double h = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < zeta; ++j) {
    w(2 * j, 2 * j) = h;
    w(2 * j, 2 * j + 1) = cplx(0.0, -h);
    w(2 * j + 1, 2 * j) = h;
    w(2 * j + 1, 2 * j + 1) = cplx(0.0, h);
  }
  return w;
}

MajoranaSet s_bar(int zeta, int n) {
  require(zeta >= 0 && zeta <= n, "s_bar: need 0 <= zeta <= n");
  std::vector<int> idx;
  for (int mu = 1; mu <= 2 * n; ++mu)
    if (!(mu % 2 == 1 && mu <= 2 * zeta - 1)) idx.push_back(mu);
  return MajoranaSet(n, std::move(idx));
}

// --------------------------------------------------------- Gaussian pure states

int gaussian_parity(const GaussianStateSpec& g) {
  g.validate();
  require(g.is_pure(), "gaussian_parity: state is not pure");
  int p = g.frame.det();
  for (double l : g.lambda) p *= l < 0 ? -1 : 1;
  return p;
}

PureGaussian pure_gaussian_from_spec(const GaussianStateSpec& g) {
  require(gaussian_parity(g) == 1,
          "pure_gaussian_from_spec: odd-parity state has no U_R|0> form with det R = +1");
  // The state is U_Q^dag Gamma |0> with Gamma = prod_{lambda_j = -1} gamma_{2j-1};
  // that unitary rotates Majoranas by R = Q^T D.
  const int d = 2 * g.n;
  int k = 0;
  for (double l : g.lambda) k += l < 0;
  RVec diag(d);
  for (int nu = 0; nu < d; ++nu) {
    const bool in_set = nu % 2 == 0 && g.lambda[nu / 2] < 0;
    const int e = in_set ? k - 1 : k;
    diag(nu) = e % 2 ? -1.0 : 1.0;
  }
  PureGaussian out;
  out.n = g.n;
  out.r = OrthogonalLabel::from_dense(g.frame.dense().transpose() * diag.asDiagonal(), 1e-9);
  return out;
}

// --------------------------------------------------------------------- padding

Statevector append_ones(const Statevector& psi, int count) {
  Statevector out;
  out.n = psi.n + count;
  out.amp = CVec::Zero(Eigen::Index{1} << out.n);
  const Eigen::Index ones = (Eigen::Index{1} << count) - 1;
  for (Eigen::Index x = 0; x < psi.amp.size(); ++x) out.amp((x << count) | ones) = psi.amp(x);
  return out;
}

PaddedOverlap pad_for_overlap(const Statevector& psi, const SlaterSpec& s) {
  psi.validate();
  s.validate();
  require(psi.n == s.n, "pad_for_overlap: mode count mismatch");
  const int a = s.zeta % 2 ? 1 : 2;
  if (psi.n + a > 14) throw ResourceError("pad_for_overlap: padded state exceeds n = 14");
  PaddedOverlap out;
  out.ancillas = a;
  out.psi = append_ones(psi, a);
  out.phi.n = s.n + a;
  out.phi.zeta = s.zeta + a;
  out.phi.v = CMat::Zero(out.phi.zeta, out.phi.n);
  out.phi.v.topLeftCorner(s.zeta, s.n) = s.v;
  for (int k = 0; k < a; ++k) out.phi.v(s.zeta + k, s.n + k) = 1.0;
  return out;
}

PaddedGaussianOverlap pad_for_gaussian_overlap(const Statevector& psi,
                                               const GaussianStateSpec& g) {
  psi.validate();
  require(g.is_pure(), "pad_for_gaussian_overlap: Gaussian state must be pure");
  require(psi.n == g.n, "pad_for_gaussian_overlap: mode count mismatch");
  const int a = gaussian_parity(g) < 0 ? 1 : 2;
  if (psi.n + a > 14) throw ResourceError("pad_for_gaussian_overlap: padded state exceeds n = 14");
  GaussianStateSpec padded;
  padded.n = g.n + a;
  padded.lambda = g.lambda;
  for (double& l : padded.lambda) l = l < 0 ? -1.0 : 1.0;
  padded.lambda.insert(padded.lambda.end(), a, -1.0);
  RMat q = RMat::Identity(2 * padded.n, 2 * padded.n);
  q.topLeftCorner(2 * g.n, 2 * g.n) = g.frame.dense();
  padded.frame = OrthogonalLabel::from_dense(q, 1e-9);
  PaddedGaussianOverlap out;
  out.ancillas = a;
  out.psi = append_ones(psi, a);
  out.phi = pure_gaussian_from_spec(padded);
  return out;
}

Statevector overlap_probe(const Statevector& padded_psi) {
  require(std::abs(padded_psi.amp(0)) <= 1e-12, "overlap_probe: state overlaps the vacuum");
  Statevector out = padded_psi;
  out.amp(0) += 1.0;
  out.amp /= std::sqrt(2.0);
  return out;
}

}  // namespace mgs
