#pragma once

// JSON and JSON Lines formats for states, shadows, observables and
// estimates. Malformed input raises ValidationError.

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mgshadows/fermion.hpp"
#include "mgshadows/simulator.hpp"

namespace mgs::io {

using json = nlohmann::json;

// Doubles with 17 significant digits (exact round trip).
std::string format_double(double x);

// ------------------------------------------------------------ states

// {"n": n, "amp": [[re, im], ...]}
json to_json(const Statevector& s);
Statevector statevector_from_json(const json& j);
// {"n": n, "lambda": [...], "q": [[...], ...]}
json to_json(const GaussianStateSpec& g);
GaussianStateSpec gaussian_from_json(const json& j);
// {"n": n, "zeta": zeta, "v": [[re, im], ...]} with v row-major (zeta x n).
json to_json(const SlaterSpec& s);
SlaterSpec slater_from_json(const json& j);
// {"n": n, "phase": [re, im], "r": [[...], ...]}
json to_json(const PureGaussian& p);
PureGaussian pure_gaussian_from_json(const json& j);

// A state file holds a statevector (has "amp") or a Gaussian spec (has "lambda").
ShadowSource state_from_json(const json& j);

json parse_json_text(const std::string& text, const std::string& what);
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

// ------------------------------------------------------------ shadows

// {"n":..,"ensemble":"haar","q":{"dense":[[...]]},"b":"0101"} or, for
// signed permutations, "q":{"perm":[...],"signs":[...]}. No trailing newline.
std::string shadow_record(const ShadowSample& s);
ShadowSample shadow_from_json(const json& j);
void write_shadows(std::ostream& out, const std::vector<ShadowSample>& samples);
// Reads every non-blank line; all records must share one mode count.
std::vector<ShadowSample> read_shadows(std::istream& in);
std::vector<ShadowSample> read_shadow_file(const std::string& path);

// ------------------------------------------------------------ observables

struct MajoranaObservable {
  MajoranaSet set;
  RMat frame;  // gamma~ = frame gamma; identity when omitted
};
struct GaussianObservable {
  GaussianStateSpec g;
};
struct SlaterObservable {
  SlaterSpec s;
};
// gamma~_S |phi><0| for a pure Gaussian |phi>.
struct GeneralObservable {
  MajoranaSet set;
  RMat frame;
  PureGaussian phi;
};

struct Observable {
  std::string id;
  std::variant<MajoranaObservable, GaussianObservable, SlaterObservable, GeneralObservable> spec;
};

int observable_modes(const Observable& o);

// Entries: {"id": .., "type": "majorana"|"gaussian"|"slater"|"general", ...}.
// majorana: "n", "indices" (1-based), optional "frame"; gaussian: GaussianStateSpec
// fields; slater: SlaterSpec fields; general: "n", "indices", optional "frame",
// "phi": PureGaussian. Accepts a bare array or {"observables": [...]}.
std::vector<Observable> observables_from_json(const json& j);

// ------------------------------------------------------------ estimates

struct EstimateRecord {
  std::string observable_id;
  cplx estimate;
  double standard_error = 0;
  std::uint64_t n_samples = 0;
  std::uint64_t k = 0;
  std::uint64_t l = 0;
};

json to_json(const EstimateRecord& r);

}  // namespace mgs::io
