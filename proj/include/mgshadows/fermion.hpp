#pragma once

#include <string>
#include <vector>

#include "mgshadows/skewlin.hpp"

namespace mgs {

// Sorted subset of Majorana indices 1..2n.
class MajoranaSet {
 public:
  MajoranaSet() = default;
  MajoranaSet(int n, std::vector<int> indices);

  int modes() const { return n_; }
  int size() const { return static_cast<int>(idx_.size()); }
  bool empty() const { return idx_.empty(); }
  const std::vector<int>& indices() const { return idx_; }
  // Bit mu-1 set for each index mu; requires 2n <= 64.
  std::uint64_t mask() const;

 private:
  int n_ = 0;
  std::vector<int> idx_;
};

// Computational-basis outcome; b_1 is the leftmost character.
class Bitstring {
 public:
  Bitstring() = default;
  explicit Bitstring(std::vector<std::uint8_t> bits);
  static Bitstring parse(const std::string& s);
  static Bitstring zeros(int n) { return Bitstring(std::vector<std::uint8_t>(n, 0)); }

  int size() const { return static_cast<int>(bits_.size()); }
  int operator[](int j) const { return bits_[j]; }  // 0-based mode index
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string str() const;
  // Amplitude index with b_1 as the most significant bit.
  std::uint64_t index() const;
  static Bitstring from_index(int n, std::uint64_t index);

  bool operator==(const Bitstring& o) const { return bits_ == o.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

struct GaussianStateSpec {
  int n = 0;
  std::vector<double> lambda;
  OrthogonalLabel frame;

  void validate() const;
  bool is_pure(double tol = 1e-10) const;
};

struct SlaterSpec {
  int n = 0;
  int zeta = 0;
  CMat v;  // zeta x n, orthonormal rows

  void validate() const;
};

// n-qubit pure state; amplitude index MSB is qubit/mode 1.
struct Statevector {
  int n = 0;
  CVec amp;

  static Statevector basis(int n, std::uint64_t index);
  void validate(double tol = 1e-10) const;
};

// Pure Gaussian state phase * U_R |0>, with R in SO(2n) and U_R generated by
// the principal logarithm of R.
struct PureGaussian {
  int n = 0;
  cplx phase{1.0, 0.0};
  OrthogonalLabel r;
};

RMat covariance_of_basis_state(const Bitstring& b);
RMat covariance_of_gaussian(const GaussianStateSpec& g);
void validate_covariance(const RMat& c, double tol = 1e-10);
// Q^T C Q; index arithmetic for signed permutations.
RMat rotate_covariance(const RMat& c, const OrthogonalLabel& q);

// Completion of V to a unitary (Gram-Schmidt on e_1..e_n in order).
CMat complete_unitary(const CMat& v);
OrthogonalLabel slater_orthogonal(const SlaterSpec& s);
CMat w_matrix(int zeta, int n);
// [2n] minus {1, 3, ..., 2 zeta - 1}.
MajoranaSet s_bar(int zeta, int n);

// pf(C) for pure states: the fermionic parity +-1.
int gaussian_parity(const GaussianStateSpec& g);
// PureGaussian representation of a pure even-parity spec.
PureGaussian pure_gaussian_from_spec(const GaussianStateSpec& g);

struct PaddedOverlap {
  Statevector psi;  // |psi>|1> or |psi>|11>
  SlaterSpec phi;   // matching padded Slater determinant (even zeta)
  int ancillas = 0;
  double scale = 2.0;  // <psi|phi> = scale * tr(|Phi><vac| rho)
};

struct PaddedGaussianOverlap {
  Statevector psi;
  PureGaussian phi;
  int ancillas = 0;
  double scale = 2.0;
};

Statevector append_ones(const Statevector& psi, int count);
PaddedOverlap pad_for_overlap(const Statevector& psi, const SlaterSpec& s);
PaddedGaussianOverlap pad_for_gaussian_overlap(const Statevector& psi,
                                               const GaussianStateSpec& g);
// (|vac> + |Psi>) / sqrt2 for a padded |Psi> orthogonal to the vacuum.
Statevector overlap_probe(const Statevector& padded_psi);

}  // namespace mgs
