#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "mgshadows/fermion.hpp"

namespace mgs {

enum class Ensemble { haar, clifford };

std::string to_string(Ensemble e);
Ensemble parse_ensemble(const std::string& s);

struct ShadowSample {
  Ensemble ensemble = Ensemble::haar;
  OrthogonalLabel q;
  Bitstring b;
};

// Adjacent-plane Givens factorisation Q = G_1 ... G_k D.
struct GivensCircuit {
  struct Rotation {
    int mu;      // 0-based plane (mu, mu + 1)
    double phi;  // G = [[cos, sin], [-sin, cos]] in that plane
  };
  int n = 0;
  std::vector<Rotation> rotations;  // G_1 .. G_k
  bool reflection = false;          // D = diag(1, ..., 1, -1)
};

GivensCircuit compile_givens(const OrthogonalLabel& q);
void apply_givens_circuit(Statevector& psi, const GivensCircuit& circuit);

// U_Q psi up to a global phase.
Statevector apply_matchgate(const Statevector& psi, const OrthogonalLabel& q);

std::vector<double> outcome_probabilities(const Statevector& psi);
Bitstring sample_outcome(const Statevector& psi, Rng& rng);

// Outcome of measuring U_Q rho U_Q^dag for a Gaussian rho with covariance C.
Bitstring sample_gaussian_outcome(const RMat& c, const OrthogonalLabel& q, Rng& rng);
// Exact outcome distribution of the same process, indexed like statevectors.
std::vector<double> gaussian_outcome_distribution(const RMat& c, const OrthogonalLabel& q);

using ShadowSource = std::variant<Statevector, GaussianStateSpec>;

// Independent generator for sample `index` of a run seeded with `seed`.
Rng sample_stream(std::uint64_t seed, std::uint64_t index);

OrthogonalLabel draw_orthogonal(int n, Ensemble e, Rng& rng);
ShadowSample draw_shadow(const ShadowSource& src, Ensemble e, std::uint64_t seed,
                         std::uint64_t index);

std::vector<ShadowSample> collect_shadows(const ShadowSource& src, Ensemble e,
                                          std::uint64_t count, std::uint64_t seed,
                                          int threads = 1);

// Samples [first, first + count) of the run seeded with `seed`.
std::vector<ShadowSample> collect_shadow_range(const ShadowSource& src, Ensemble e,
                                               std::uint64_t first, std::uint64_t count,
                                               std::uint64_t seed, int threads = 1);

// Streams samples [0, count) to `sink` in index order; chunks are generated
// in parallel and emitted sequentially.
void collect_shadows_streaming(const ShadowSource& src, Ensemble e, std::uint64_t count,
                               std::uint64_t seed, int threads,
                               const std::function<void(std::uint64_t, const ShadowSample&)>& sink);

int source_modes(const ShadowSource& src);

}  // namespace mgs
