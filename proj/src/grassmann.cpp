#include "mgshadows/grassmann.hpp"

#include <bit>
#include <cmath>

#include <Eigen/SVD>

#include "mgshadows/parallel.hpp"
#include "mgshadows/shadows.hpp"

namespace mgs::grassmann {

// ------------------------------------------------------------ symbolic algebra

int merge_sign(std::uint32_t a, std::uint32_t b) {
  int swaps = 0;
  for (std::uint32_t r = b; r; r &= r - 1) {
    const int bit = std::countr_zero(r);
    const std::uint32_t above = bit >= 31 ? 0u : ~((std::uint32_t{2} << bit) - 1u);
    swaps += std::popcount(a & above);
  }
  return swaps % 2 ? -1 : 1;
}

GrassmannElement::GrassmannElement(int generators) : g_(generators) {
  require(generators >= 0 && generators <= kMaxGenerators,
          "GrassmannElement supports at most 24 generators");
}

GrassmannElement GrassmannElement::scalar(int generators, cplx c) {
  GrassmannElement e(generators);
  e.add(0, c);
  return e;
}

GrassmannElement GrassmannElement::generator(int generators, int mu) {
  require(mu >= 0 && mu < generators, "GrassmannElement::generator: index out of range");
  GrassmannElement e(generators);
  e.add(std::uint32_t{1} << mu, 1.0);
  return e;
}

GrassmannElement GrassmannElement::linear(int generators, const CVec& c) {
  require(c.size() == generators, "GrassmannElement::linear: coefficient count mismatch");
  GrassmannElement e(generators);
  for (int mu = 0; mu < generators; ++mu) e.add(std::uint32_t{1} << mu, c(mu));
  return e;
}

GrassmannElement GrassmannElement::gaussian(const CMat& m) {
  require(m.rows() == m.cols(), "GrassmannElement::gaussian: matrix must be square");
  const int g = static_cast<int>(m.rows());
  // The bilinears chi_mu chi_nu commute and square to zero, so
  // exp(sum_{mu<nu} M_{mu nu} chi_mu chi_nu) = prod_{mu<nu} (1 + M_{mu nu} chi_mu chi_nu).
  GrassmannElement e = scalar(g, 1.0);
  for (int mu = 0; mu < g; ++mu)
    for (int nu = mu + 1; nu < g; ++nu) {
      const cplx w = m(mu, nu);
      if (w == cplx{}) continue;
      const std::uint32_t pair = (std::uint32_t{1} << mu) | (std::uint32_t{1} << nu);
      const auto before = e.terms_;
      for (const auto& [k, v] : before)
        if (!(k & pair)) e.add(k | pair, static_cast<double>(merge_sign(pair, k)) * w * v);
    }
  return e;
}

void GrassmannElement::add(std::uint32_t subset, cplx c) {
  if (c == cplx{}) return;
  auto [it, inserted] = terms_.emplace(subset, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) terms_.erase(it);
  }
}

cplx GrassmannElement::coefficient(std::uint32_t subset) const {
  const auto it = terms_.find(subset);
  return it == terms_.end() ? cplx{} : it->second;
}

cplx GrassmannElement::integrate() const {
  const std::uint32_t top = g_ == 32 ? ~0u : ((std::uint32_t{1} << g_) - 1u);
  return coefficient(top);
}

GrassmannElement GrassmannElement::operator*(const GrassmannElement& o) const {
  require(g_ == o.g_, "GrassmannElement: generator count mismatch");
  GrassmannElement out(g_);
  for (const auto& [ka, va] : terms_)
    for (const auto& [kb, vb] : o.terms_)
      if (!(ka & kb)) out.add(ka | kb, static_cast<double>(merge_sign(ka, kb)) * va * vb);
  return out;
}

GrassmannElement GrassmannElement::operator+(const GrassmannElement& o) const {
  require(g_ == o.g_, "GrassmannElement: generator count mismatch");
  GrassmannElement out = *this;
  for (const auto& [k, v] : o.terms_) out.add(k, v);
  return out;
}

GrassmannElement GrassmannElement::operator*(cplx c) const {
  GrassmannElement out(g_);
  for (const auto& [k, v] : terms_) out.add(k, c * v);
  return out;
}

cplx grassmann_integrate_brute(const GrassmannIntegralSpec& spec) {
  const CMat& m = spec.m.matrix();
  const int g = static_cast<int>(m.rows());
  require(g <= 12, "grassmann_integrate_brute: at most 12 generators");
  require(spec.b.rows() == 0 || spec.b.cols() == g, "grassmann_integrate_brute: B has the wrong width");
  GrassmannElement f = GrassmannElement::scalar(g, 1.0);
  for (Eigen::Index k = 0; k < spec.b.rows(); ++k)
    f = f * GrassmannElement::linear(g, spec.b.row(k).transpose());
  return spec.prefactor * (f * GrassmannElement::gaussian(m)).integrate();
}

// ------------------------------------------------------------ recursive integral evaluation

namespace {

constexpr double kRankTolerance = 1e-10;

CMat antisymmetrized(const CMat& a) { return 0.5 * (a - a.transpose()); }

cplx pf_of(CMat a) { return a.rows() == 0 ? cplx(1.0) : pfaffian_inplace(a); }

cplx evaluate_rec(const CMat& b, const CMat& m, int& depth) {
  const Eigen::Index k = b.rows(), d = m.rows();
  if (k % 2 != 0 || k > d) return 0.0;
  if (k == d) return k == 0 ? cplx(1.0) : b.partialPivLu().determinant();

  Eigen::BDCSVD<CMat> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  Eigen::Index rank = 0;
  if (smax > 0)
    while (rank < d && s(rank) > kRankTolerance * smax) ++rank;
  rank += rank % 2;  // singular values of an antisymmetric matrix come in pairs

  if (rank == d) {
    const cplx pf_m = pf_of(m);
    if (k == 0) return pf_m;
    const CMat x = m.partialPivLu().solve(b.transpose());
    return pf_m * pf_of(antisymmetrized(-b * x));
  }

  // With the unitary V from the SVD, M = V^* diag(M', 0) V^dag, where the
  // trailing columns of V span the kernel. Changing variables to
  // chi~ = V^dag chi contributes det(V^dag) and maps B to B V.
  ++depth;
  const CMat& v = svd.matrixV();
  const CMat v1 = v.leftCols(rank);
  const CMat m1 = antisymmetrized(v1.transpose() * m * v1);
  const CMat bv = b * v;
  const CMat b1 = bv.leftCols(rank), b2 = bv.rightCols(d - rank);
  const CMat sub_m = rank == 0 ? CMat(CMat::Zero(k, k))
                               : antisymmetrized(b1 * m1.partialPivLu().solve(b1.transpose()));
  const Eigen::Index n_half = d / 2;
  const double sign = ((n_half + k / 2) % 2) ? -1.0 : 1.0;
  const cplx jac = std::conj(v.determinant());
  return jac * sign * pf_of(-m1) * evaluate_rec(b2.transpose(), sub_m, depth);
}

}  // namespace

IntegralResult evaluate_integral_traced(const CMat& b, const CMat& m) {
  require(m.rows() == m.cols() && m.rows() % 2 == 0, "evaluate_integral: M must be 2N x 2N");
  require(b.rows() == 0 || b.cols() == m.rows(), "evaluate_integral: B must have 2N columns");
  IntegralResult r;
  const CMat bb = b.rows() == 0 ? CMat(0, m.rows()) : b;
  r.value = evaluate_rec(bb, m, r.depth);
  return r;
}

cplx evaluate_integral(const CMat& b, const AntisymMatrix& m) {
  return evaluate_integral_traced(b, m.matrix()).value;
}

cplx evaluate(const GrassmannIntegralSpec& spec) {
  return spec.prefactor * evaluate_integral(spec.b, spec.m);
}

double integral_scale(const CMat& b, const CMat& m) {
  const double nb = b.size() ? b.cwiseAbs().maxCoeff() : 1.0;
  const double nm = std::max(m.size() ? m.cwiseAbs().maxCoeff() : 0.0, 1.0);
  const double k = static_cast<double>(b.rows()), n = static_cast<double>(m.rows()) / 2;
  return std::pow(nb, k) * std::pow(nm, std::max(0.0, n - k / 2));
}

// ------------------------------------------------------------ operators

CMat GaussianDensityOp::covariance() const {
  CMat blocks = CMat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    blocks(2 * j, 2 * j + 1) = lambda[j];
    blocks(2 * j + 1, 2 * j) = -lambda[j];
  }
  return frame.transpose().cast<cplx>() * blocks * frame.cast<cplx>();
}

int descriptor_modes(const OperatorDescriptor& op) {
  return std::visit([](const auto& o) { return o.n; }, op);
}

namespace {

void check_orthogonal(const RMat& q, int n, double tol, const char* what) {
  require(q.rows() == 2 * n && q.cols() == 2 * n, std::string(what) + ": matrix must be 2n x 2n");
  const double err = (q.transpose() * q - RMat::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff();
  require(err <= tol, std::string(what) + ": matrix is not orthogonal");
}

}  // namespace

void validate_descriptor(const OperatorDescriptor& op, double tol) {
  const int n = descriptor_modes(op);
  require(n >= 1, "operator descriptor needs n >= 1");
  if (const auto* p = std::get_if<MajoranaProductOp>(&op)) {
    for (const auto& f : p->factors) require(f.size() == 2 * n, "Majorana factor must have 2n coefficients");
    // {L_p, L_q} = 2 (c_p . c_q) I must vanish for p != q.
    for (std::size_t a = 0; a < p->factors.size(); ++a)
      for (std::size_t b = a + 1; b < p->factors.size(); ++b) {
        const double scale = std::max(1.0, p->factors[a].norm() * p->factors[b].norm());
        require(std::abs(p->factors[a].cwiseProduct(p->factors[b]).sum()) <= tol * scale,
                "Majorana factors must mutually anticommute");
      }
  } else if (const auto* g = std::get_if<GaussianDensityOp>(&op)) {
    require(static_cast<int>(g->lambda.size()) == n, "Gaussian density needs n lambda values");
    check_orthogonal(g->frame, n, tol, "Gaussian density frame");
  } else if (const auto* u = std::get_if<GaussianUnitaryOp>(&op)) {
    check_orthogonal(u->r, n, tol, "Gaussian unitary");
    require(u->r.determinant() > 0, "Gaussian unitary R must lie in SO(2n)");
  }
}

MajoranaProductOp identity_op(int n) {
  MajoranaProductOp op;
  op.n = n;
  return op;
}

MajoranaProductOp majorana_op(const MajoranaSet& s, const RMat& frame) {
  MajoranaProductOp op;
  op.n = s.modes();
  require(frame.rows() == 2 * op.n && frame.cols() == 2 * op.n, "majorana_op: frame must be 2n x 2n");
  for (int mu : s.indices()) op.factors.push_back(frame.row(mu - 1).transpose().cast<cplx>());
  return op;
}

GaussianDensityOp density_op(const GaussianStateSpec& g) {
  g.validate();
  return density_op(g.n, std::vector<cplx>(g.lambda.begin(), g.lambda.end()), g.frame.dense());
}

GaussianDensityOp density_op(int n, std::vector<cplx> lambda, const RMat& frame) {
  GaussianDensityOp op;
  op.n = n;
  op.lambda = std::move(lambda);
  op.frame = frame;
  return op;
}

GaussianUnitaryOp unitary_op(const RMat& q, cplx phase) {
  GaussianUnitaryOp op;
  op.n = static_cast<int>(q.rows()) / 2;
  op.phase = phase;
  op.r = q;
  if (q.determinant() < 0) {
    op.leading_gamma1 = true;
    op.r.bottomRows(q.rows() - 1) *= -1.0;  // R = diag(1, -1, ..., -1) Q
  }
  return op;
}

namespace {

// One variable set of the product: omega(A) = factor * prod(rows . theta) *
// exp(theta^T block theta / 2).
struct Slot {
  std::vector<CVec> rows;
  CMat block;  // empty when the slot has no quadratic part
  cplx factor{1.0, 0.0};
};

CVec unit(int d, int mu) {
  CVec e = CVec::Zero(d);
  e(mu) = 1.0;
  return e;
}

cplx minus_i_pow(int n) {
  static const cplx table[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
  return table[n % 4];
}

void append_slots(const OperatorDescriptor& op, std::vector<Slot>& out) {
  const int n = descriptor_modes(op);
  const int d = 2 * n;
  if (const auto* p = std::get_if<MajoranaProductOp>(&op)) {
    Slot s;
    s.rows = p->factors;
    s.factor = p->coefficient;
    out.push_back(std::move(s));
  } else if (const auto* g = std::get_if<GaussianDensityOp>(&op)) {
    Slot s;
    s.block = -I_unit * g->covariance();
    s.factor = std::ldexp(1.0, -n);
    out.push_back(std::move(s));
  } else if (const auto* u = std::get_if<GaussianUnitaryOp>(&op)) {
    if (u->leading_gamma1) {
      Slot g1;
      g1.rows.push_back(unit(d, 0));
      out.push_back(std::move(g1));
    }
    const RotationBlocks rb = orthogonal_log_blocks(OrthogonalLabel::from_dense(u->r, 1e-8));
    Slot s;
    s.factor = u->phase;
    RMat t = RMat::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      const double sg = rb.sigma[j];
      const RVec f1 = rb.frame.row(2 * j).transpose(), f2 = rb.frame.row(2 * j + 1).transpose();
      if (std::abs(std::cos(sg)) < kCosineFloor) {
        // cos sigma_j = 0: the factor is sin sigma_j theta'_{2j-1} theta'_{2j}.
        s.rows.push_back(f1.cast<cplx>());
        s.rows.push_back(f2.cast<cplx>());
        s.factor *= std::sin(sg);
      } else {
        s.factor *= std::cos(sg);
        t += std::tan(sg) * (f1 * f2.transpose() - f2 * f1.transpose());
      }
    }
    s.block = t.cast<cplx>();
    out.push_back(std::move(s));
  } else {
    Slot s;
    for (int mu = 0; mu < d; ++mu) s.rows.push_back(unit(d, mu));
    s.factor = minus_i_pow(n);
    out.push_back(std::move(s));
  }
}

}  // namespace

GrassmannIntegralSpec trace_to_integral(const std::vector<OperatorDescriptor>& ops,
                                        const TraceOptions& opt) {
  require(!ops.empty(), "trace_to_integral: empty operator list");
  const int n = descriptor_modes(ops.front());
  for (const auto& op : ops) {
    require(descriptor_modes(op) == n, "trace_to_integral: operators act on different mode counts");
    validate_descriptor(op);
  }
  const int d = 2 * n;

  // With the parity shortcut the trace is rotated cyclically so the chosen
  // parity operator comes last; it is then integrated out analytically.
  std::vector<OperatorDescriptor> seq = ops;
  bool shortcut = false;
  if (opt.parity_shortcut) {
    for (std::size_t p = ops.size(); p-- > 0;)
      if (std::holds_alternative<ParityOp>(ops[p])) {
        seq.assign(ops.begin() + static_cast<std::ptrdiff_t>(p) + 1, ops.end());
        seq.insert(seq.end(), ops.begin(), ops.begin() + static_cast<std::ptrdiff_t>(p));
        shortcut = true;
        break;
      }
  }
  std::vector<Slot> slots;
  for (const auto& op : seq) append_slots(op, slots);
  const auto total = [&] { return slots.size() + (shortcut ? 1 : 0); };
  if (total() % 2 != 0) slots.push_back(Slot{});  // identity keeps m even
  const long long m = static_cast<long long>(total());
  const int sets = static_cast<int>(slots.size());
  const Eigen::Index dim = static_cast<Eigen::Index>(sets) * d;

  GrassmannIntegralSpec spec;
  const long long sign_exp = static_cast<long long>(n) * m * (m - 1) / 2;
  spec.prefactor = std::ldexp(1.0, n) * ((sign_exp % 2) ? -1.0 : 1.0);
  if (shortcut) spec.prefactor *= minus_i_pow(n);

  std::size_t k_rows = 0;
  for (const auto& s : slots) k_rows += s.rows.size();
  CMat b = CMat::Zero(static_cast<Eigen::Index>(k_rows), dim);
  CMat mm = CMat::Zero(dim, dim);
  Eigen::Index row = 0;
  for (int i = 0; i < sets; ++i) {
    const Slot& s = slots[i];
    spec.prefactor *= s.factor;
    for (const auto& r : s.rows) b.row(row++).segment(static_cast<Eigen::Index>(i) * d, d) = r.transpose();
    if (s.block.size()) mm.block(i * d, i * d, d, d) += s.block;
    // s_ij = (-1)^(i+j+1) for 1-based i < j.
    for (int j = i + 1; j < sets; ++j) {
      const double sij = ((i + j + 3) % 2) ? -1.0 : 1.0;
      mm.block(i * d, j * d, d, d).diagonal().array() += sij;
      mm.block(j * d, i * d, d, d).diagonal().array() -= sij;
    }
  }
  spec.b = std::move(b);
  spec.m = AntisymMatrix::trusted(std::move(mm));
  return spec;
}

cplx trace_product(const std::vector<OperatorDescriptor>& ops, const TraceOptions& opt) {
  return evaluate(trace_to_integral(ops, opt));
}

// ------------------------------------------------------------ worked example

GeneralOverlapEstimator::GeneralOverlapEstimator(const MajoranaSet& s, const RMat& frame,
                                                 const PureGaussian& phi, int threads)
    : n_(phi.n), threads_(resolve_threads(threads)) {
  require(s.modes() == n_ && phi.r.modes() == n_, "GeneralOverlapEstimator: mode count mismatch");
  require(s.size() % 2 == 0,
          "GeneralOverlapEstimator: gamma_S |phi><0| must be even; |S| has to be even");
  require(phi.r.det() == 1, "GeneralOverlapEstimator: |phi> must be given by R in SO(2n)");
  GaussianUnitaryOp u;
  u.n = n_;
  u.r = phi.r.dense();
  u.phase = phi.phase;
  const RMat id = RMat::Identity(2 * n_, 2 * n_);
  const std::vector<OperatorDescriptor> ops = {
      majorana_op(s, frame), u, density_op(n_, std::vector<cplx>(n_, 1.0), id),
      density_op(n_, std::vector<cplx>(n_, 0.0), id)};
  base_ = trace_to_integral(ops, TraceOptions{false});
  inv_ = inverse_channel_coeffs(n_);
}

std::vector<cplx> GeneralOverlapEstimator::coefficients(const RMat& c_rho) const {
  require(c_rho.rows() == 2 * n_ && c_rho.cols() == 2 * n_, "GeneralOverlapEstimator: covariance size");
  const auto z = roots_of_unity(n_ + 1);
  const Eigen::Index d = 2 * n_, last = 3 * d;
  const CMat c = -I_unit * c_rho.cast<cplx>();
  std::vector<cplx> values(z.size());
  parallel_for(z.size(), threads_, [&](std::size_t k) {
    CMat m = base_.m.matrix();
    m.block(last, last, d, d) += z[k] * c;
    values[k] = base_.prefactor * evaluate_integral_traced(base_.b, m).value;
  });
  const ComplexPolynomial p = poly_from_values(values);
  std::vector<cplx> out(n_ + 1);
  for (int l = 0; l <= n_; ++l) out[l] = p.coeff(l);
  return out;
}

cplx GeneralOverlapEstimator::operator()(const ShadowSample& sample) const {
  const auto c = coefficients(sample_covariance(sample));
  cplx acc{};
  for (int l = 0; l <= n_; ++l) acc += inv_[l] * c[l];
  return acc;
}

cplx estimate_general(const ShadowSample& sample, const MajoranaSet& s, const RMat& frame,
                      const PureGaussian& phi) {
  return GeneralOverlapEstimator(s, frame, phi)(sample);
}

}  // namespace mgs::grassmann
