#include "mgshadows/skewlin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace mgs {

namespace {

template <class Mat>
void check_antisym(const Mat& a, double tol) {
  require(a.rows() == a.cols(), "antisymmetric matrix must be square");
  require(a.rows() % 2 == 0, "antisymmetric matrix must have even dimension");
  const double scale = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  const double err = a.size() ? (a + a.transpose()).cwiseAbs().maxCoeff() : 0.0;
  require(err <= tol * std::max(scale, 1.0),
          "matrix is not antisymmetric within tolerance");
}

// Plain products: std::complex operator* routes through the C99 inf/NaN
// recovery routine, which dominates small Pfaffians.
inline double mul(double a, double b) { return a * b; }
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
inline double magnitude2(double a) { return a * a; }
inline double magnitude2(cplx a) { return a.real() * a.real() + a.imag() * a.imag(); }

template <class Mat>
typename Mat::Scalar pfaffian_kernel(Mat& a) {
  using S = typename Mat::Scalar;
  const Eigen::Index n = a.rows();
  if (n % 2 != 0) throw ValidationError("Pfaffian of odd-dimensional matrix");
  S pf(1);
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp = k + 1;
    double best = -1;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double m2 = magnitude2(a(i, k));
      if (m2 > best) {
        best = m2;
        kp = i;
      }
    }
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    const S piv = a(k, k + 1);
    if (piv == S(0)) return S(0);
    pf = mul(pf, piv);
    // Trailing update A += tau v^T - v tau^T with tau = A(k, :) / piv and
    // v = A(:, k + 1). Row k and column k + 1 lie outside the trailing block,
    // so both are read in place; tau comes from column k by antisymmetry.
    const S inv = S(1) / piv;
    for (Eigen::Index j = k + 2; j < n; ++j) {
      const S tj = -mul(a(j, k), inv), uj = -mul(inv, a(j, k + 1));
      S* col = &a(0, j);
      const S* ck = &a(0, k);
      const S* ck1 = &a(0, k + 1);
      for (Eigen::Index i = k + 2; i < n; ++i) col[i] += mul(ck[i], uj) - mul(ck1[i], tj);
    }
  }
  return pf;
}

int permutation_sign(const std::vector<int>& perm) {
  std::vector<char> seen(perm.size(), 0);
  int sign = 1;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(perm[j])) {
      seen[j] = 1;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

}  // namespace

// ---------------------------------------------------------------- AntisymMatrix

AntisymMatrix::AntisymMatrix(const CMat& a, double tol) {
  check_antisym(a, tol);
  a_ = (a - a.transpose()) / 2.0;
}

AntisymMatrix::AntisymMatrix(const RMat& a, double tol) {
  check_antisym(a, tol);
  a_ = ((a - a.transpose()) / 2.0).cast<cplx>();
}

AntisymMatrix AntisymMatrix::zero(Eigen::Index dim) {
  require(dim % 2 == 0, "antisymmetric matrix must have even dimension");
  AntisymMatrix out;
  out.a_ = CMat::Zero(dim, dim);
  return out;
}

AntisymMatrix AntisymMatrix::trusted(CMat a) {
  AntisymMatrix out;
  out.a_ = (a - a.transpose()) / 2.0;
  return out;
}

bool AntisymMatrix::is_real(double tol) const {
  return a_.size() == 0 || a_.imag().cwiseAbs().maxCoeff() <= tol;
}

// -------------------------------------------------------------- OrthogonalLabel

OrthogonalLabel OrthogonalLabel::identity(int n) {
  std::vector<int> perm(2 * n);
  std::iota(perm.begin(), perm.end(), 0);
  return from_signed_permutation(std::move(perm), std::vector<int>(2 * n, 1));
}

OrthogonalLabel OrthogonalLabel::from_dense(const RMat& q, double tol) {
  require(q.rows() == q.cols() && q.rows() % 2 == 0 && q.rows() > 0,
          "orthogonal label must be a square matrix of even dimension");
  const RMat gram = q.transpose() * q;
  const double err = (gram - RMat::Identity(q.rows(), q.cols())).cwiseAbs().maxCoeff();
  require(err <= tol, "matrix is not orthogonal within tolerance");
  OrthogonalLabel out;
  out.dim_ = static_cast<int>(q.rows());
  out.q_ = q;
  out.det_ = q.partialPivLu().determinant() > 0 ? 1 : -1;
  return out;
}

OrthogonalLabel OrthogonalLabel::from_signed_permutation(std::vector<int> perm,
                                                         std::vector<int> signs) {
  const std::size_t d = perm.size();
  require(d > 0 && d % 2 == 0 && signs.size() == d,
          "signed permutation needs matching even-length perm/signs");
  std::vector<char> hit(d, 0);
  int sign_prod = 1;
  for (std::size_t i = 0; i < d; ++i) {
    require(perm[i] >= 0 && static_cast<std::size_t>(perm[i]) < d && !hit[perm[i]],
            "perm is not a permutation of 0..2n-1");
    hit[perm[i]] = 1;
    require(signs[i] == 1 || signs[i] == -1, "signs must be +1 or -1");
    sign_prod *= signs[i];
  }
  OrthogonalLabel out;
  out.dim_ = static_cast<int>(d);
  out.signed_perm_ = true;
  out.det_ = permutation_sign(perm) * sign_prod;
  out.perm_ = std::move(perm);
  out.signs_ = std::move(signs);
  return out;
}

RMat OrthogonalLabel::dense() const {
  if (!signed_perm_) return q_;
  RMat q = RMat::Zero(dim_, dim_);
  for (int mu = 0; mu < dim_; ++mu) q(mu, perm_[mu]) = signs_[mu];
  return q;
}

OrthogonalLabel OrthogonalLabel::transpose() const {
  if (!signed_perm_) return from_dense(q_.transpose(), 1e-9);
  std::vector<int> p(dim_), s(dim_);
  for (int mu = 0; mu < dim_; ++mu) {
    p[perm_[mu]] = mu;
    s[perm_[mu]] = signs_[mu];
  }
  return from_signed_permutation(std::move(p), std::move(s));
}

OrthogonalLabel OrthogonalLabel::compose(const OrthogonalLabel& other) const {
  require(dim_ == other.dim_, "orthogonal label dimension mismatch");
  if (signed_perm_ && other.signed_perm_) {
    std::vector<int> p(dim_), s(dim_);
    for (int mu = 0; mu < dim_; ++mu) {
      p[mu] = other.perm_[perm_[mu]];
      s[mu] = signs_[mu] * other.signs_[perm_[mu]];
    }
    return from_signed_permutation(std::move(p), std::move(s));
  }
  return from_dense(dense() * other.dense(), 1e-9);
}

// ----------------------------------------------------------- ComplexPolynomial

cplx ComplexPolynomial::operator()(cplx z) const {
  cplx acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

ComplexPolynomial ComplexPolynomial::trimmed(double rel_tol) const {
  double mx = 0.0;
  for (const auto& c : coeffs) mx = std::max(mx, std::abs(c));
  ComplexPolynomial out = *this;
  while (out.coeffs.size() > 1 && std::abs(out.coeffs.back()) <= rel_tol * mx)
    out.coeffs.pop_back();
  return out;
}

// ------------------------------------------------------------------- Pfaffians

cplx pfaffian(const AntisymMatrix& a) {
  CMat work = a.matrix();
  return pfaffian_kernel(work);
}

cplx pfaffian_inplace(CMat& a) { return pfaffian_kernel(a); }
double pfaffian_inplace(RMat& a) { return pfaffian_kernel(a); }

// -------------------------------------------------------------- canonical form

CanonicalForm antisym_canonical(const AntisymMatrix& a, double tol) {
  require(a.is_real(), "canonical form requires a real antisymmetric matrix");
  return antisym_canonical(a.real(), tol);
}

CanonicalForm antisym_canonical(const RMat& a_in, double tol) {
  check_antisym(a_in, 1e-12);
  const RMat a = (a_in - a_in.transpose()) / 2.0;
  const int d = static_cast<int>(a.rows());
  const int n = d / 2;
  CanonicalForm out;
  out.lambda.assign(n, 0.0);
  const double amax = d ? a.cwiseAbs().maxCoeff() : 0.0;
  if (amax == 0.0) {
    out.r = OrthogonalLabel::identity(n);
    return out;
  }

  // iA is Hermitian; an eigenpair (mu > 0, x + iy) gives A x = mu y and
  // A y = -mu x, i.e. the block [[0, mu], [-mu, 0]] in the ordered pair
  // (sqrt2 y, sqrt2 x).
  const CMat h = cplx(0.0, 1.0) * a.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const RVec& ev = es.eigenvalues();  // ascending
  const double thr = tol * amax;
  RMat r(d, d);
  int r_pairs = 0;
  for (int k = d - 1; k >= 0 && r_pairs < n; --k) {
    if (ev(k) <= thr) break;
    const CVec v = es.eigenvectors().col(k);
    r.row(2 * r_pairs) = std::sqrt(2.0) * v.imag().transpose();
    r.row(2 * r_pairs + 1) = std::sqrt(2.0) * v.real().transpose();
    out.lambda[r_pairs] = ev(k);
    ++r_pairs;
  }
  out.rank2r = 2 * r_pairs;

  if (out.rank2r < d) {
    // Orthonormal completion of the row space from a full QR.
    const RMat basis = r.topRows(out.rank2r).transpose();
    RMat qfull;
    if (out.rank2r > 0) {
      Eigen::HouseholderQR<RMat> qr(basis);
      qfull = qr.householderQ() * RMat::Identity(d, d);
    } else {
      qfull = RMat::Identity(d, d);
    }
    r.bottomRows(d - out.rank2r) = qfull.rightCols(d - out.rank2r).transpose();
  }
  // Polish to orthogonality (near-degenerate spectra lose a few digits).
  Eigen::JacobiSVD<RMat> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0 && out.rank2r < d) r.row(d - 1) *= -1.0;
  out.r = OrthogonalLabel::from_dense(r, 1e-9);
  return out;
}

// ------------------------------------------------------------------- sampling

OrthogonalLabel haar_orthogonal(int n, Rng& rng) {
  require(n >= 1, "haar_orthogonal needs n >= 1");
  const int d = 2 * n;
  std::normal_distribution<double> normal(0.0, 1.0);
  RMat g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<RMat> qr(g);
  RMat q = qr.householderQ() * RMat::Identity(d, d);
  const RMat& packed = qr.matrixQR();
  for (int j = 0; j < d; ++j)
    if (packed(j, j) < 0) q.col(j) *= -1.0;
  return OrthogonalLabel::from_dense(q, 1e-10);
}

OrthogonalLabel uniform_signed_permutation(int n, Rng& rng) {
  require(n >= 1, "uniform_signed_permutation needs n >= 1");
  const int d = 2 * n;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  std::vector<int> signs(d);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < d; ++i) signs[i] = coin(rng) ? -1 : 1;
  return OrthogonalLabel::from_signed_permutation(std::move(perm), std::move(signs));
}

// ------------------------------------------------------------ orthogonal log

RMat RotationBlocks::generator() const {
  const int d = static_cast<int>(frame.rows());
  RMat blocks = RMat::Zero(d, d);
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    blocks(2 * j, 2 * j + 1) = sigma[j];
    blocks(2 * j + 1, 2 * j) = -sigma[j];
  }
  return frame.transpose() * blocks * frame;
}

RotationBlocks orthogonal_log_blocks(const OrthogonalLabel& r) {
  require(r.det() == 1, "orthogonal_log requires det(R) = +1");
  const int d = r.dim();
  const RMat rd = r.dense();
  Eigen::RealSchur<RMat> schur(rd);
  const RMat& t = schur.matrixT();
  const RMat& u = schur.matrixU();

  struct Plane {
    int p, q;
    double phi;
  };
  std::vector<Plane> planes;
  std::vector<int> plus, minus;
  for (int i = 0; i < d;) {
    if (i + 1 < d && t(i + 1, i) != 0.0) {
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), dd = t(i + 1, i + 1);
      double phi = std::atan2((b - c) / 2.0, (a + dd) / 2.0);
      if (phi <= -std::numbers::pi + 1e-12) phi = std::numbers::pi;
      planes.push_back({i, i + 1, phi});
      i += 2;
    } else {
      (t(i, i) > 0 ? plus : minus).push_back(i);
      i += 1;
    }
  }
  require(minus.size() % 2 == 0 && plus.size() % 2 == 0,
          "orthogonal_log: inconsistent real Schur form");
  for (std::size_t k = 0; k < minus.size(); k += 2)
    planes.push_back({minus[k], minus[k + 1], std::numbers::pi});
  for (std::size_t k = 0; k < plus.size(); k += 2)
    planes.push_back({plus[k], plus[k + 1], 0.0});

  RotationBlocks out;
  out.frame.resize(d, d);
  out.sigma.resize(planes.size());
  for (std::size_t j = 0; j < planes.size(); ++j) {
    out.frame.row(2 * j) = u.col(planes[j].p).transpose();
    out.frame.row(2 * j + 1) = u.col(planes[j].q).transpose();
    out.sigma[j] = planes[j].phi / 2.0;
  }
  return out;
}

AntisymMatrix orthogonal_log(const OrthogonalLabel& r) {
  return AntisymMatrix(RMat(orthogonal_log_blocks(r).generator()), 1e-9);
}

// --------------------------------------------------------------- polynomials

std::vector<cplx> roots_of_unity(int count) {
  std::vector<cplx> z(count);
  for (int k = 0; k < count; ++k)
    z[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / count);
  return z;
}

ComplexPolynomial poly_from_values(const std::vector<cplx>& values) {
  const int n = static_cast<int>(values.size());
  require(n >= 1, "poly_from_values needs at least one value");
  ComplexPolynomial p;
  p.coeffs.assign(n, cplx{});
  for (int m = 0; m < n; ++m) {
    cplx acc{};
    for (int k = 0; k < n; ++k)
      acc += values[k] * std::polar(1.0, -2.0 * std::numbers::pi *
                                             static_cast<double>((static_cast<long>(k) * m) % n) / n);
    p.coeffs[m] = acc / static_cast<double>(n);
  }
  return p;
}

ComplexPolynomial interpolate(const std::function<cplx(cplx)>& f, int degree) {
  const auto z = roots_of_unity(degree + 1);
  std::vector<cplx> v(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) v[k] = f(z[k]);
  return poly_from_values(v);
}

ComplexPolynomial pfaffian_poly_from_spectrum(cplx pf_b, const std::vector<cplx>& eig) {
  require(eig.size() % 2 == 0, "pfaffian_poly_from_spectrum: expected a doubly degenerate spectrum");
  const std::size_t r = eig.size() / 2;
  // The spectrum of B^{-1}C is doubly degenerate and pf(B + zC) =
  // pf(B) prod_k (1 + z mu_k) over one representative mu_k per pair. Pair
  // each eigenvalue with its nearest unmatched neighbour, then expand the
  // product; unlike Newton's identities on the power sums, this expansion
  // does not cancel catastrophically when the eigenvalues spread widely.
  std::vector<bool> used(eig.size(), false);
  std::vector<cplx> mu;
  mu.reserve(r);
  for (std::size_t i = 0; i < eig.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    std::size_t best = eig.size();
    for (std::size_t j = i + 1; j < eig.size(); ++j)
      if (!used[j] && (best == eig.size() || std::abs(eig[j] - eig[i]) < std::abs(eig[best] - eig[i]))) best = j;
    used[best] = true;
    mu.push_back(0.5 * (eig[i] + eig[best]));
  }
  ComplexPolynomial p;
  p.coeffs.assign(r + 1, cplx{});
  p.coeffs[0] = pf_b;
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t l = k + 1; l >= 1; --l) p.coeffs[l] += mu[k] * p.coeffs[l - 1];
  return p;
}

ComplexPolynomial linear_pfaffian_coeffs(const AntisymMatrix& b, const AntisymMatrix& c) {
  require(b.dim() == c.dim(), "linear_pfaffian_coeffs: dimension mismatch");
  if (b.dim() == 0) return ComplexPolynomial{{cplx(1.0)}};
  Eigen::FullPivLU<CMat> lu(b.matrix());
  lu.setThreshold(1e-13);
  require(lu.isInvertible(), "linear_pfaffian_coeffs: B is singular");
  const CMat m = lu.solve(c.matrix());
  Eigen::ComplexEigenSolver<CMat> es(m, false);
  const CVec& ev = es.eigenvalues();
  std::vector<cplx> eig(ev.data(), ev.data() + ev.size());
  return pfaffian_poly_from_spectrum(pfaffian(b), eig);
}

}  // namespace mgs
