#include "mgshadows/cli.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "mgshadows/grassmann.hpp"
#include "mgshadows/oracle.hpp"
#include "mgshadows/parallel.hpp"
#include "mgshadows/variance.hpp"

namespace mgs::cli {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kInputError;
  if (dynamic_cast<const ResourceError*>(&e)) return kResourceLimit;
  if (dynamic_cast<const InsufficientSamples*>(&e)) return kInsufficientSamples;
  return kFailure;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t require_seed(const RunConfig& cfg) {
  require(cfg.seed.has_value(), cfg.command + ": --seed is required for sampling commands");
  return *cfg.seed;
}

// Writes to `path`, or to stdout for "" and "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write '" + path + "'");
  out << text;
}

using SampleFn = std::function<cplx(const ShadowSample&)>;

SampleFn per_sample_estimator(const io::Observable& o) {
  return std::visit(
      [&](const auto& s) -> SampleFn {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, io::MajoranaObservable>) {
          require(s.set.size() % 2 == 0, "observable '" + o.id + "': odd Majorana products estimate to zero; |S| must be even");
          const auto frame = OrthogonalLabel::from_dense(s.frame, 1e-9);
          return [frame, set = s.set](const ShadowSample& x) { return estimate_majorana_product(x, frame, set); };
        } else if constexpr (std::is_same_v<T, io::GaussianObservable>) {
          auto est = std::make_shared<GaussianFidelityEstimator>(s.g);
          return [est](const ShadowSample& x) { return cplx((*est)(x)); };
        } else if constexpr (std::is_same_v<T, io::SlaterObservable>) {
          require(s.s.zeta % 2 == 0, "observable '" + o.id +
                                         "': Slater determinant with odd zeta; pad it with an occupied "
                                         "ancilla mode first (the overlap command does this) or give an even zeta");
          auto est = std::make_shared<SlaterOverlapEstimator>(s.s);
          return [est](const ShadowSample& x) { return (*est)(x); };
        } else {
          require(s.set.size() % 2 == 0, "observable '" + o.id + "': general observables need an even |S|");
          auto est = std::make_shared<grassmann::GeneralOverlapEstimator>(s.set, s.frame, s.phi);
          return [est](const ShadowSample& x) { return (*est)(x); };
        }
      },
      o.spec);
}

}  // namespace

double planning_bound(const io::Observable& o, int threads) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, io::MajoranaObservable>) {
          return variance::bound_local(s.set.modes(), s.set.size());
        } else if constexpr (std::is_same_v<T, io::GaussianObservable>) {
          return variance::bound_gaussian(s.g.n);
        } else if constexpr (std::is_same_v<T, io::SlaterObservable>) {
          return variance::bound_overlap(s.s.n, s.s.zeta, threads);
        } else {
          // |tr(M^-1(O) sigma)| <= ||M^-1(O)||_op <= sum_l c_l ||P_2l(O)||_HS and
          // ||O||_HS = 1 for a product of a unitary and a rank-one projector, so
          // by Cauchy-Schwarz the second moment is at most sum_l c_l^2.
          double b = 0;
          for (double c : inverse_channel_coeffs(s.phi.n)) b += c * c;
          return b;
        }
      },
      o.spec);
}

std::vector<io::EstimateRecord> estimate_observables(const std::vector<ShadowSample>& shadows,
                                                     const std::vector<io::Observable>& observables,
                                                     double eps, double delta, int threads) {
  if (observables.empty()) return {};
  threads = resolve_threads(threads);
  const int n = shadows.empty() ? io::observable_modes(observables.front()) : shadows.front().q.modes();
  double b_max = 0;
  std::vector<SampleFn> fns;
  for (const auto& o : observables) {
    require(io::observable_modes(o) == n, "observable '" + o.id + "' acts on " +
                                              std::to_string(io::observable_modes(o)) +
                                              " modes but the shadows have " + std::to_string(n));
    fns.push_back(per_sample_estimator(o));
    b_max = std::max(b_max, planning_bound(o, threads));
  }
  const auto plan = variance::plan_samples(eps, delta, static_cast<int>(observables.size()), b_max);
  if (shadows.size() < plan.total())
    throw InsufficientSamples("need " + std::to_string(plan.total()) + " shadows (K = " + std::to_string(plan.k) +
                                  ", L = " + std::to_string(plan.l) + "), found " + std::to_string(shadows.size()),
                              plan.total());

  std::vector<io::EstimateRecord> out;
  const std::size_t used = plan.total();
  std::vector<cplx> values(used);
  for (std::size_t i = 0; i < observables.size(); ++i) {
    parallel_for(used, threads, [&](std::size_t k) { values[k] = fns[i](shadows[k]); });
    const auto series = summarize(values, plan.k, plan.l);
    out.push_back({observables[i].id, series.aggregate, series.standard_error, used, plan.k, plan.l});
  }
  return out;
}

DesignReport verify_design(int n, int threads) {
  require(n >= 1, "verify-design: n must be >= 1");
  if (n > 2) throw ResourceError("verify-design: exhaustive check is limited to n <= 2 (the n = 3 group is too large)");
  const auto t0 = Clock::now();
  DesignReport r;
  r.n = n;
  r.pass = true;
  for (int j = 1; j <= 3; ++j) {
    const auto closed = oracle::theorem1_twirl(n, j);
    const auto exact = oracle::exact_twirl(n, j, threads);
    DesignCheck c{j, oracle::max_abs_difference(exact, closed), closed.entries.size()};
    r.pass = r.pass && c.max_deviation <= 1e-10;
    r.checks.push_back(c);
  }
  r.seconds = seconds_since(t0);
  return r;
}

// ------------------------------------------------------------ commands

int cmd_collect(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg);
  require(!cfg.state_path.empty(), "collect: --state is required");
  require(!cfg.out_path.empty(), "collect: --out is required");
  const ShadowSource src = io::state_from_json(io::read_json_file(cfg.state_path));
  const auto t0 = Clock::now();
  std::ofstream out(cfg.out_path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write '" + cfg.out_path + "'");
  collect_shadows_streaming(src, cfg.ensemble, cfg.samples, seed, resolve_threads(cfg.threads),
                            [&](std::uint64_t, const ShadowSample& s) { out << io::shadow_record(s) << '\n'; });
  out.close();
  require(static_cast<bool>(out), "failed writing '" + cfg.out_path + "'");
  log << "collected " << cfg.samples << " shadows: n=" << source_modes(src) << " ensemble=" << to_string(cfg.ensemble)
      << " seed=" << seed << " wall=" << std::fixed << std::setprecision(3) << seconds_since(t0) << "s\n";
  return kOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& log) {
  require(!cfg.shadows_path.empty(), "estimate: --shadows is required");
  require(!cfg.observables_path.empty(), "estimate: --observables is required");
  const auto observables = io::observables_from_json(io::read_json_file(cfg.observables_path));
  const auto shadows = io::read_shadow_file(cfg.shadows_path);
  const auto records = estimate_observables(shadows, observables, cfg.eps, cfg.delta, cfg.threads);
  io::json arr = io::json::array();
  for (const auto& r : records) arr.push_back(io::to_json(r));
  emit(cfg.out_path, arr.dump(2) + "\n");
  log << "estimated " << records.size() << " observables from " << shadows.size() << " shadows\n";
  return kOk;
}

int cmd_overlap(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = require_seed(cfg);
  require(!cfg.state_path.empty(), "overlap: --state is required");
  require(!cfg.slaters_path.empty(), "overlap: --slaters is required");
  const Statevector psi = io::statevector_from_json(io::read_json_file(cfg.state_path));
  const io::json list = io::read_json_file(cfg.slaters_path);
  require(list.is_array(), "slaters file: expected an array of Slater specs");
  std::vector<SlaterSpec> slaters;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    slaters.push_back(io::slater_from_json(list[i]));
    require(slaters.back().n == psi.n, "slater " + std::to_string(i) + ": mode count differs from the state");
    ids.push_back(list[i].contains("id") && list[i]["id"].is_string() ? list[i]["id"].get<std::string>()
                                                                      : std::to_string(i));
  }
  OverlapOptions opt;
  opt.eps = cfg.eps;
  opt.delta = cfg.delta;
  opt.ensemble = cfg.ensemble;
  opt.seed = seed;
  opt.threads = cfg.threads;
  const auto t0 = Clock::now();
  const auto est = algorithm1(psi, slaters, opt);
  io::json arr = io::json::array();
  for (std::size_t i = 0; i < est.size(); ++i) {
    io::json j = io::to_json(io::EstimateRecord{ids[i], est[i].estimate, est[i].standard_error, est[i].n_samples,
                                                 est[i].k, est[i].l});
    j["padded_modes"] = est[i].padded_modes;
    j["padded_zeta"] = est[i].padded_zeta;
    j["bound"] = est[i].bound;
    arr.push_back(std::move(j));
  }
  emit(cfg.out_path, arr.dump(2) + "\n");
  log << "estimated " << est.size() << " overlaps, ensemble=" << to_string(cfg.ensemble) << " wall=" << std::fixed
      << std::setprecision(3) << seconds_since(t0) << "s\n";
  return kOk;
}

int cmd_variance_table(const RunConfig& cfg, std::ostream& log) {
  const auto grid = cfg.grid.empty() ? variance::default_grid(cfg.include_slow) : variance::parse_grid(cfg.grid);
  const auto t0 = Clock::now();
  const auto rows = variance::compute_table(grid, resolve_threads(cfg.threads));
  emit(cfg.out_path, variance::format_csv(rows));
  // Report the qualitative ordering b(n, zeta) <= b(n, 0) on the grid.
  int violations = 0;
  for (const auto& r : rows)
    for (const auto& r0 : rows)
      if (r0.n == r.n && r0.zeta == 0 && r.bound > r0.bound * (1 + 1e-12)) {
        ++violations;
        log << "ordering violation: b(" << r.n << "," << r.zeta << ") > b(" << r.n << ",0)\n";
      }
  log << rows.size() << " grid points, " << violations << " ordering violations, wall=" << std::fixed
      << std::setprecision(3) << seconds_since(t0) << "s\n";
  return kOk;
}

int cmd_verify_design(const RunConfig& cfg, std::ostream& log) {
  const auto r = verify_design(cfg.n, resolve_threads(cfg.threads));
  std::ostringstream text;
  text << std::setprecision(3);
  for (const auto& c : r.checks)
    text << "n=" << r.n << " j=" << c.j << " entries=" << c.entries << " max_deviation=" << std::scientific
         << c.max_deviation << std::defaultfloat << "\n";
  text << (r.pass ? "PASS" : "FAIL") << " n=" << r.n << " wall=" << std::fixed << r.seconds << "s\n";
  emit(cfg.out_path, text.str());
  log << "verify-design n=" << r.n << (r.pass ? " passed" : " failed") << "\n";
  return r.pass ? kOk : kFailure;
}

}  // namespace mgs::cli
