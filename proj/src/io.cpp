#include "mgshadows/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mgs::io {

namespace {

constexpr double kInputOrthogonalTol = 1e-9;

// Converts nlohmann's type/range errors into input-validation errors.
template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& what) {
  require(j.is_object(), what + ": expected a JSON object");
  const auto it = j.find(key);
  require(it != j.end(), what + ": missing field '" + key + "'");
  return *it;
}

int positive_modes(const json& j, const std::string& what) {
  const int n = field(j, "n", what).get<int>();
  require(n >= 1, what + ": n must be >= 1");
  return n;
}

json complex_to_json(cplx c) { return json::array({c.real(), c.imag()}); }

cplx complex_from_json(const json& j, const std::string& what) {
  require(j.is_array() && j.size() == 2, what + ": complex numbers are [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json real_matrix_to_json(const RMat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

RMat real_matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows,
          what + ": expected " + std::to_string(rows) + " rows");
  RMat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
            what + ": expected " + std::to_string(cols) + " columns");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

OrthogonalLabel orthogonal_from_json(const json& j, int n, const std::string& what) {
  return OrthogonalLabel::from_dense(real_matrix_from_json(j, 2 * n, 2 * n, what), kInputOrthogonalTol);
}

RMat optional_frame(const json& j, int n, const std::string& what) {
  if (!j.contains("frame")) return RMat::Identity(2 * n, 2 * n);
  return orthogonal_from_json(j["frame"], n, what + " frame").dense();
}

MajoranaSet set_from_json(const json& j, int n, const std::string& what) {
  return MajoranaSet(n, field(j, "indices", what).get<std::vector<int>>());
}

void append_json_double(std::string& out, double x) { out += format_double(x); }

}  // namespace

std::string format_double(double x) {
  require(std::isfinite(x), "cannot serialize a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ------------------------------------------------------------ states

json to_json(const Statevector& s) {
  json amp = json::array();
  for (Eigen::Index x = 0; x < s.amp.size(); ++x) amp.push_back(complex_to_json(s.amp(x)));
  return {{"n", s.n}, {"amp", amp}};
}

Statevector statevector_from_json(const json& j) {
  return guarded("statevector", [&] {
    Statevector s;
    s.n = positive_modes(j, "statevector");
    require(s.n <= 14, "statevector: n > 14 exceeds the simulator cap");
    const json& amp = field(j, "amp", "statevector");
    require(amp.is_array() && amp.size() == (std::size_t{1} << s.n),
            "statevector: amp must have 2^n entries");
    s.amp.resize(static_cast<Eigen::Index>(amp.size()));
    for (std::size_t x = 0; x < amp.size(); ++x)
      s.amp(static_cast<Eigen::Index>(x)) = complex_from_json(amp[x], "statevector amp");
    s.validate();
    return s;
  });
}

json to_json(const GaussianStateSpec& g) {
  return {{"n", g.n}, {"lambda", g.lambda}, {"q", real_matrix_to_json(g.frame.dense())}};
}

GaussianStateSpec gaussian_from_json(const json& j) {
  return guarded("gaussian state", [&] {
    GaussianStateSpec g;
    g.n = positive_modes(j, "gaussian state");
    g.lambda = field(j, "lambda", "gaussian state").get<std::vector<double>>();
    g.frame = orthogonal_from_json(field(j, "q", "gaussian state"), g.n, "gaussian state q");
    g.validate();
    return g;
  });
}

json to_json(const SlaterSpec& s) {
  json v = json::array();
  for (Eigen::Index r = 0; r < s.v.rows(); ++r)
    for (Eigen::Index c = 0; c < s.v.cols(); ++c) v.push_back(complex_to_json(s.v(r, c)));
  return {{"n", s.n}, {"zeta", s.zeta}, {"v", v}};
}

SlaterSpec slater_from_json(const json& j) {
  return guarded("slater", [&] {
    SlaterSpec s;
    s.n = positive_modes(j, "slater");
    s.zeta = field(j, "zeta", "slater").get<int>();
    require(s.zeta >= 0 && s.zeta <= s.n, "slater: need 0 <= zeta <= n");
    const json& v = field(j, "v", "slater");
    require(v.is_array() && v.size() == static_cast<std::size_t>(s.zeta * s.n),
            "slater: v must list zeta * n complex entries row-major");
    s.v.resize(s.zeta, s.n);
    for (int r = 0; r < s.zeta; ++r)
      for (int c = 0; c < s.n; ++c) s.v(r, c) = complex_from_json(v[static_cast<std::size_t>(r * s.n + c)], "slater v");
    s.validate();
    return s;
  });
}

json to_json(const PureGaussian& p) {
  return {{"n", p.n}, {"phase", complex_to_json(p.phase)}, {"r", real_matrix_to_json(p.r.dense())}};
}

PureGaussian pure_gaussian_from_json(const json& j) {
  return guarded("pure gaussian", [&] {
    PureGaussian p;
    p.n = positive_modes(j, "pure gaussian");
    p.phase = j.contains("phase") ? complex_from_json(j["phase"], "pure gaussian phase") : cplx(1.0);
    p.r = orthogonal_from_json(field(j, "r", "pure gaussian"), p.n, "pure gaussian r");
    require(p.r.det() == 1, "pure gaussian: r must have determinant +1");
    return p;
  });
}

ShadowSource state_from_json(const json& j) {
  require(j.is_object(), "state file: expected a JSON object");
  if (j.contains("amp")) return statevector_from_json(j);
  if (j.contains("lambda")) return gaussian_from_json(j);
  throw ValidationError("state file: expected a statevector (\"amp\") or a Gaussian spec (\"lambda\")");
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// ------------------------------------------------------------ shadows

std::string shadow_record(const ShadowSample& s) {
  std::string out = "{\"n\":" + std::to_string(s.q.modes()) + ",\"ensemble\":\"" + to_string(s.ensemble) +
                    "\",\"q\":{";
  if (s.q.is_signed_permutation()) {
    out += "\"perm\":[";
    for (std::size_t i = 0; i < s.q.perm().size(); ++i) out += (i ? "," : "") + std::to_string(s.q.perm()[i]);
    out += "],\"signs\":[";
    for (std::size_t i = 0; i < s.q.signs().size(); ++i) out += (i ? "," : "") + std::to_string(s.q.signs()[i]);
    out += "]";
  } else {
    const RMat q = s.q.dense();
    out += "\"dense\":[";
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      out += r ? ",[" : "[";
      for (Eigen::Index c = 0; c < q.cols(); ++c) {
        if (c) out += ',';
        append_json_double(out, q(r, c));
      }
      out += ']';
    }
    out += "]";
  }
  out += "},\"b\":\"" + s.b.str() + "\"}";
  return out;
}

ShadowSample shadow_from_json(const json& j) {
  return guarded("shadow record", [&] {
    ShadowSample s;
    const int n = positive_modes(j, "shadow record");
    s.ensemble = parse_ensemble(field(j, "ensemble", "shadow record").get<std::string>());
    const json& q = field(j, "q", "shadow record");
    if (q.contains("perm")) {
      s.q = OrthogonalLabel::from_signed_permutation(field(q, "perm", "shadow q").get<std::vector<int>>(),
                                                     field(q, "signs", "shadow q").get<std::vector<int>>());
    } else {
      s.q = orthogonal_from_json(field(q, "dense", "shadow q"), n, "shadow q");
    }
    require(s.q.modes() == n, "shadow record: q does not match n");
    s.b = Bitstring::parse(field(j, "b", "shadow record").get<std::string>());
    require(s.b.size() == n, "shadow record: b must have n characters");
    return s;
  });
}

void write_shadows(std::ostream& out, const std::vector<ShadowSample>& samples) {
  for (const auto& s : samples) out << shadow_record(s) << '\n';
}

std::vector<ShadowSample> read_shadows(std::istream& in) {
  std::vector<ShadowSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "shadow line " + std::to_string(lineno);
    ShadowSample s = shadow_from_json(parse_json_text(line, where));
    require(out.empty() || s.q.modes() == out.front().q.modes(), where + ": mode count differs from line 1");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ShadowSample> read_shadow_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  return read_shadows(in);
}

// ------------------------------------------------------------ observables

int observable_modes(const Observable& o) {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianObservable>) return s.g.n;
        else if constexpr (std::is_same_v<T, SlaterObservable>) return s.s.n;
        else if constexpr (std::is_same_v<T, GeneralObservable>) return s.phi.n;
        else return s.set.modes();
      },
      o.spec);
}

std::vector<Observable> observables_from_json(const json& j) {
  const json& list = j.is_object() && j.contains("observables") ? j["observables"] : j;
  require(list.is_array(), "observables: expected an array");
  std::vector<Observable> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    const std::string what = "observable " + std::to_string(i);
    guarded(what, [&] {
      Observable o;
      o.id = e.contains("id") ? e["id"].get<std::string>() : std::to_string(i);
      const std::string type = field(e, "type", what).get<std::string>();
      if (type == "majorana") {
        const int n = positive_modes(e, what);
        o.spec = MajoranaObservable{set_from_json(e, n, what), optional_frame(e, n, what)};
      } else if (type == "gaussian") {
        o.spec = GaussianObservable{gaussian_from_json(e)};
      } else if (type == "slater") {
        o.spec = SlaterObservable{slater_from_json(e)};
      } else if (type == "general") {
        const int n = positive_modes(e, what);
        GeneralObservable g{set_from_json(e, n, what), optional_frame(e, n, what),
                            pure_gaussian_from_json(field(e, "phi", what))};
        require(g.phi.n == n, what + ": phi has a different mode count");
        o.spec = std::move(g);
      } else {
        throw ValidationError(what + ": unknown type '" + type + "' (majorana, gaussian, slater, general)");
      }
      out.push_back(std::move(o));
      return 0;
    });
  }
  return out;
}

// ------------------------------------------------------------ estimates

json to_json(const EstimateRecord& r) {
  return {{"observable_id", r.observable_id},
          {"estimate", complex_to_json(r.estimate)},
          {"stderr", r.standard_error},
          {"n_samples", r.n_samples},
          {"K", r.k},
          {"L", r.l}};
}

}  // namespace mgs::io
