#include "mgshadows/simulator.hpp"

#include <cmath>

#include "mgshadows/parallel.hpp"

namespace mgs {

std::string to_string(Ensemble e) { return e == Ensemble::haar ? "haar" : "clifford"; }

Ensemble parse_ensemble(const std::string& s) {
  if (s == "haar") return Ensemble::haar;
  if (s == "clifford") return Ensemble::clifford;
  throw ValidationError("unknown ensemble '" + s + "' (expected haar or clifford)");
}

// -------------------------------------------------------------- Givens circuit

GivensCircuit compile_givens(const OrthogonalLabel& q) {
  const int d = q.dim();
  RMat w = q.dense();
  GivensCircuit circ;
  circ.n = q.modes();
  circ.rotations.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
  // Columns left of c are already unit vectors with zeros in rows >= c, so
  // each row rotation only needs to touch columns c..d-1.
  auto rotate_rows = [&](int r0, int c, double cs, double sn) {
    for (int k = c; k < d; ++k) {
      const double top = w(r0, k), bot = w(r0 + 1, k);
      w(r0, k) = cs * top - sn * bot;
      w(r0 + 1, k) = sn * top + cs * bot;
    }
  };
  for (int c = 0; c + 1 < d; ++c) {
    for (int r = d - 1; r > c; --r) {
      const double a = w(r - 1, c), b = w(r, c);
      if (b == 0.0) continue;
      const double rho = std::hypot(a, b);
      const double cs = a / rho, sn = -b / rho;
      // Multiply by G^T on rows (r-1, r).
      rotate_rows(r - 1, c, cs, sn);
      circ.rotations.push_back({r - 1, std::atan2(sn, cs)});
    }
    // A column that needed no elimination may still carry a -1 pivot; a
    // rotation by pi in the plane (c, c + 1) fixes it.
    if (w(c, c) < 0) {
      rotate_rows(c, c, -1.0, 0.0);
      circ.rotations.push_back({c, M_PI});
    }
  }
  circ.reflection = w(d - 1, d - 1) < 0;
  return circ;
}

namespace {

// Both kernels walk the state in blocks of the affected bit so the inner
// loops are branch free.
void apply_z_rotation(CVec& amp, int n, int mode, double theta) {
  const Eigen::Index bit = Eigen::Index{1} << (n - 1 - mode);
  // Real arithmetic: std::complex multiplication goes through the
  // NaN-checking library routine.
  const double c = std::cos(theta), sn = std::sin(theta);
  cplx* a = amp.data();
  const Eigen::Index size = amp.size();
  auto rot = [](cplx& z, double cr, double ci) {
    const double zr = z.real(), zi = z.imag();
    z = cplx(cr * zr - ci * zi, cr * zi + ci * zr);
  };
  for (Eigen::Index base = 0; base < size; base += 2 * bit) {
    for (Eigen::Index x = base; x < base + bit; ++x) rot(a[x], c, sn);
    for (Eigen::Index x = base + bit; x < base + 2 * bit; ++x) rot(a[x], c, -sn);
  }
}

void apply_xx_rotation(CVec& amp, int n, int mode, double theta) {
  const Eigen::Index b1 = Eigen::Index{1} << (n - 1 - mode);
  const Eigen::Index b2 = Eigen::Index{1} << (n - 2 - mode);
  const Eigen::Index flip = b1 | b2;
  const double c = std::cos(theta), sn = std::sin(theta);
  cplx* a = amp.data();
  const Eigen::Index size = amp.size();
  // x ranges over indices with bit b1 clear; its partner is x ^ (b1 | b2).
  for (Eigen::Index base = 0; base < size; base += 2 * b1)
    for (Eigen::Index x = base; x < base + b1; ++x) {
      const Eigen::Index y = x ^ flip;
      const double xr = a[x].real(), xi = a[x].imag(), yr = a[y].real(), yi = a[y].imag();
      a[x] = cplx(c * xr - sn * yi, c * xi + sn * yr);
      a[y] = cplx(c * yr - sn * xi, c * yi + sn * xr);
    }
}

}  // namespace

void apply_givens_circuit(Statevector& psi, const GivensCircuit& circ) {
  require(psi.n == circ.n, "apply_givens_circuit: mode count mismatch");
  const int n = psi.n;
  if (circ.reflection)
    for (Eigen::Index x = 0; x < psi.amp.size(); x += 2) std::swap(psi.amp(x), psi.amp(x + 1));
  // exp((phi/2) gamma_a gamma_{a+1}) is exp(i phi/2 Z_j) for odd a (1-based)
  // and exp(i phi/2 X_j X_{j+1}) for even a.
  for (auto it = circ.rotations.rbegin(); it != circ.rotations.rend(); ++it) {
    const double theta = it->phi / 2.0;
    if (it->mu % 2 == 0)
      apply_z_rotation(psi.amp, n, it->mu / 2, theta);
    else
      apply_xx_rotation(psi.amp, n, (it->mu - 1) / 2, theta);
  }
}

Statevector apply_matchgate(const Statevector& psi, const OrthogonalLabel& q) {
  psi.validate();
  require(q.modes() == psi.n, "apply_matchgate: mode count mismatch");
  Statevector out = psi;
  apply_givens_circuit(out, compile_givens(q));
  return out;
}

// ------------------------------------------------------------------- sampling

std::vector<double> outcome_probabilities(const Statevector& psi) {
  std::vector<double> p(psi.amp.size());
  for (Eigen::Index x = 0; x < psi.amp.size(); ++x) p[x] = std::norm(psi.amp(x));
  return p;
}

Bitstring sample_outcome(const Statevector& psi, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * psi.amp.squaredNorm();
  Eigen::Index last = 0;
  for (Eigen::Index x = 0; x < psi.amp.size(); ++x) {
    const double p = std::norm(psi.amp(x));
    if (p > 0) last = x;
    if (u < p) return Bitstring::from_index(psi.n, static_cast<std::uint64_t>(x));
    u -= p;
  }
  return Bitstring::from_index(psi.n, static_cast<std::uint64_t>(last));
}

namespace {

// Conditions the trailing block of C on outcome s = (-1)^b of mode j. Only
// rows/columns of later modes are touched.
void condition_mode(RMat& c, int j, double s) {
  const int d = static_cast<int>(c.rows());
  const int a = 2 * j, b = 2 * j + 1, t = d - 2 * j - 2;
  if (t == 0) return;
  const double denom = 1.0 + s * c(a, b);
  const RVec u = c.row(a).tail(t).transpose();
  const RVec v = c.row(b).tail(t).transpose();
  c.bottomRightCorner(t, t).noalias() += (s / denom) * (v * u.transpose() - u * v.transpose());
}

void enumerate_outcomes(const RMat& c, int j, double prob, std::uint64_t prefix,
                        std::vector<double>& out) {
  const int n = static_cast<int>(c.rows()) / 2;
  if (j == n) {
    out[prefix] = prob;
    return;
  }
  const double m = c(2 * j, 2 * j + 1);
  for (int bit = 0; bit < 2; ++bit) {
    const double s = bit ? -1.0 : 1.0;
    const double p = std::clamp((1.0 + s * m) / 2.0, 0.0, 1.0);
    const std::uint64_t next = (prefix << 1) | static_cast<std::uint64_t>(bit);
    if (p <= 0.0) {
      // All completions of this prefix have probability zero.
      const std::uint64_t span = std::uint64_t{1} << (n - j - 1);
      for (std::uint64_t k = 0; k < span; ++k) out[(next << (n - j - 1)) | k] = 0.0;
      continue;
    }
    RMat cc = c;
    condition_mode(cc, j, s);
    enumerate_outcomes(cc, j + 1, prob * p, next, out);
  }
}

}  // namespace

Bitstring sample_gaussian_outcome(const RMat& c, const OrthogonalLabel& q, Rng& rng) {
  validate_covariance(c);
  require(c.rows() == q.dim(), "sample_gaussian_outcome: dimension mismatch");
  RMat cr = rotate_covariance(c, q.transpose());  // Q C Q^T
  const int n = q.modes();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint8_t> bits(n);
  for (int j = 0; j < n; ++j) {
    const double p0 = std::clamp((1.0 + cr(2 * j, 2 * j + 1)) / 2.0, 0.0, 1.0);
    const int bit = unif(rng) < p0 ? 0 : 1;
    bits[j] = static_cast<std::uint8_t>(bit);
    condition_mode(cr, j, bit ? -1.0 : 1.0);
  }
  return Bitstring(std::move(bits));
}

std::vector<double> gaussian_outcome_distribution(const RMat& c, const OrthogonalLabel& q) {
  validate_covariance(c);
  require(c.rows() == q.dim(), "gaussian_outcome_distribution: dimension mismatch");
  const int n = q.modes();
  if (n > 20) throw ResourceError("gaussian_outcome_distribution: n > 20");
  std::vector<double> out(std::size_t{1} << n, 0.0);
  enumerate_outcomes(rotate_covariance(c, q.transpose()), 0, 1.0, 0, out);
  return out;
}

// ------------------------------------------------------------------ collection

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng sample_stream(std::uint64_t seed, std::uint64_t index) {
  // Two rounds of SplitMix64 decorrelate neighbouring (seed, index) pairs;
  // single-word seeding avoids the cost of seed_seq on every sample.
  return Rng(splitmix64(splitmix64(seed) ^ (index + 0x6D67736861646F77ULL)));
}

OrthogonalLabel draw_orthogonal(int n, Ensemble e, Rng& rng) {
  return e == Ensemble::haar ? haar_orthogonal(n, rng) : uniform_signed_permutation(n, rng);
}

int source_modes(const ShadowSource& src) {
  return std::visit([](const auto& s) { return s.n; }, src);
}

namespace {

struct PreparedSource {
  const Statevector* psi = nullptr;
  RMat cov;
  int n = 0;
};

PreparedSource prepare(const ShadowSource& src) {
  PreparedSource p;
  if (const auto* sv = std::get_if<Statevector>(&src)) {
    sv->validate();
    p.psi = sv;
    p.n = sv->n;
  } else {
    const auto& g = std::get<GaussianStateSpec>(src);
    p.cov = covariance_of_gaussian(g);
    p.n = g.n;
  }
  return p;
}

ShadowSample draw_prepared(const PreparedSource& p, Ensemble e, std::uint64_t seed,
                           std::uint64_t index) {
  Rng rng = sample_stream(seed, index);
  ShadowSample s;
  s.ensemble = e;
  s.q = draw_orthogonal(p.n, e, rng);
  if (p.psi) {
    Statevector out = *p.psi;
    apply_givens_circuit(out, compile_givens(s.q));
    s.b = sample_outcome(out, rng);
  } else {
    s.b = sample_gaussian_outcome(p.cov, s.q, rng);
  }
  return s;
}

}  // namespace

ShadowSample draw_shadow(const ShadowSource& src, Ensemble e, std::uint64_t seed,
                         std::uint64_t index) {
  return draw_prepared(prepare(src), e, seed, index);
}

std::vector<ShadowSample> collect_shadows(const ShadowSource& src, Ensemble e,
                                          std::uint64_t count, std::uint64_t seed,
                                          int threads) {
  const PreparedSource p = prepare(src);
  std::vector<ShadowSample> out(count);
  parallel_for(count, resolve_threads(threads),
               [&](std::size_t i) { out[i] = draw_prepared(p, e, seed, i); });
  return out;
}

std::vector<ShadowSample> collect_shadow_range(const ShadowSource& src, Ensemble e,
                                               std::uint64_t first, std::uint64_t count,
                                               std::uint64_t seed, int threads) {
  const PreparedSource p = prepare(src);
  std::vector<ShadowSample> out(count);
  parallel_for(count, resolve_threads(threads),
               [&](std::size_t i) { out[i] = draw_prepared(p, e, seed, first + i); });
  return out;
}

void collect_shadows_streaming(const ShadowSource& src, Ensemble e, std::uint64_t count,
                               std::uint64_t seed, int threads,
                               const std::function<void(std::uint64_t, const ShadowSample&)>& sink) {
  const PreparedSource p = prepare(src);
  const int t = resolve_threads(threads);
  const std::uint64_t chunk = 4096;
  std::vector<ShadowSample> buf;
  for (std::uint64_t lo = 0; lo < count; lo += chunk) {
    const std::uint64_t len = std::min(chunk, count - lo);
    buf.assign(len, ShadowSample{});
    parallel_for(len, t, [&](std::size_t i) { buf[i] = draw_prepared(p, e, seed, lo + i); });
    for (std::uint64_t i = 0; i < len; ++i) sink(lo + i, buf[i]);
  }
}

}  // namespace mgs
