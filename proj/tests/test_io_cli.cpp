#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "mgshadows/cli.hpp"
#include "mgshadows/io.hpp"
#include "mgshadows/variance.hpp"

using namespace mgs;
using namespace mgs::testing;

TEST_CASE("doubles are written with 17 significant digits and round-trip") {
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const double x = g(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK_THROWS_AS(io::format_double(std::nan("")), ValidationError);
}

TEST_CASE("shadow records round-trip exactly for both ensembles") {
  Rng rng(2);
  for (int n = 1; n <= 5; ++n)
    for (int e = 0; e < 2; ++e) {
      const auto s = random_sample(n, rng, e == 1);
      const std::string line = io::shadow_record(s);
      const auto back = io::shadow_from_json(io::parse_json_text(line, "test"));
      CHECK(back.ensemble == s.ensemble);
      CHECK(back.b == s.b);
      CHECK(back.q.is_signed_permutation() == s.q.is_signed_permutation());
      CHECK(back.q.dense() == s.q.dense());
      CHECK(io::shadow_record(back) == line);
    }
}

TEST_CASE("shadow streams: blank lines skipped, mixed mode counts rejected") {
  Rng rng(3);
  std::stringstream ss;
  ss << io::shadow_record(random_sample(2, rng)) << "\n\n" << io::shadow_record(random_sample(2, rng, true)) << "\n";
  CHECK(io::read_shadows(ss).size() == 2);
  std::stringstream mixed;
  mixed << io::shadow_record(random_sample(2, rng)) << "\n" << io::shadow_record(random_sample(3, rng)) << "\n";
  CHECK_THROWS_AS(io::read_shadows(mixed), ValidationError);
  std::stringstream bad("{\"n\":2,\"ensemble\":\"haar\",\"q\":{\"dense\":[[1,0],[0,1]]},\"b\":\"00\"}\n");
  CHECK_THROWS_AS(io::read_shadows(bad), ValidationError);
  std::stringstream wrong_b("{\"n\":1,\"ensemble\":\"haar\",\"q\":{\"dense\":[[1,0],[0,1]]},\"b\":\"010\"}\n");
  CHECK_THROWS_AS(io::read_shadows(wrong_b), ValidationError);
}

TEST_CASE("state, Slater and pure-Gaussian JSON round trips") {
  Rng rng(4);
  const auto psi = random_state(3, rng);
  const auto psi2 = io::statevector_from_json(io::parse_json_text(io::to_json(psi).dump(), "t"));
  CHECK((psi2.amp - psi.amp).norm() == 0.0);

  const auto g = random_gaussian(3, rng);
  const auto src = io::state_from_json(io::parse_json_text(io::to_json(g).dump(), "t"));
  REQUIRE(std::holds_alternative<GaussianStateSpec>(src));
  const auto& g2 = std::get<GaussianStateSpec>(src);
  CHECK(g2.lambda == g.lambda);
  CHECK(g2.frame.dense() == g.frame.dense());
  CHECK(std::holds_alternative<Statevector>(io::state_from_json(io::to_json(psi))));

  const auto sl = random_slater(4, 2, rng);
  CHECK(io::slater_from_json(io::to_json(sl)).v == sl.v);

  PureGaussian p{3, std::polar(1.0, 0.2), OrthogonalLabel::from_dense(random_special_orthogonal(3, rng))};
  const auto p2 = io::pure_gaussian_from_json(io::to_json(p));
  CHECK(p2.phase == p.phase);
  CHECK(p2.r.dense() == p.r.dense());

  CHECK_THROWS_AS(io::state_from_json(io::json{{"n", 2}}), ValidationError);
  CHECK_THROWS_AS(io::statevector_from_json(io::json{{"n", 2}, {"amp", {{1, 0}}}}), ValidationError);
  CHECK_THROWS_AS(io::gaussian_from_json(io::json{{"n", "two"}}), ValidationError);
  CHECK_THROWS_AS(io::parse_json_text("[1,", "t"), ValidationError);
}

TEST_CASE("observables parse for every tag") {
  Rng rng(5);
  const auto g = random_gaussian(2, rng);
  const auto sl = random_slater(2, 2, rng);
  PureGaussian p{2, 1.0, OrthogonalLabel::identity(2)};
  io::json gj = io::to_json(g), sj = io::to_json(sl);
  gj["type"] = "gaussian";
  sj["type"] = "slater";
  io::json list = io::json::array();
  list.push_back({{"id", "m"}, {"type", "majorana"}, {"n", 2}, {"indices", {1, 4}}});
  list.push_back(gj);
  list.push_back(sj);
  list.push_back({{"id", "x"}, {"type", "general"}, {"n", 2}, {"indices", io::json::array()}, {"phi", io::to_json(p)}});
  const auto obs = io::observables_from_json(io::json{{"observables", list}});
  REQUIRE(obs.size() == 4);
  CHECK(obs[0].id == "m");
  CHECK(obs[1].id == "1");
  CHECK(std::holds_alternative<io::SlaterObservable>(obs[2].spec));
  CHECK(std::holds_alternative<io::GeneralObservable>(obs[3].spec));
  for (const auto& o : obs) CHECK(io::observable_modes(o) == 2);
  CHECK_THROWS_AS(io::observables_from_json(io::json::array({{{"type", "tensor"}}})), ValidationError);
  CHECK_THROWS_AS(io::observables_from_json(io::json::array({{{"type", "majorana"}, {"n", 1}, {"indices", {3}}}})),
                  ValidationError);
}

TEST_CASE("planning bounds") {
  const io::Observable maj{"m", io::MajoranaObservable{MajoranaSet(3, {1, 2}), RMat::Identity(6, 6)}};
  CHECK(cli::planning_bound(maj) == doctest::Approx(variance::bound_local(3, 2)));
  const io::Observable gen{"g", io::GeneralObservable{MajoranaSet(2, {}), RMat::Identity(4, 4),
                                                      PureGaussian{2, 1.0, OrthogonalLabel::identity(2)}}};
  CHECK(cli::planning_bound(gen) == doctest::Approx(1.0 + 9.0 + 1.0));
}

TEST_CASE("planning bound for general observables dominates the exact second moment") {
  Rng rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 2;
    PureGaussian phi{n, 1.0, OrthogonalLabel::from_dense(random_special_orthogonal(n, rng))};
    const RMat frame = haar_orthogonal(n, rng).dense();
    const MajoranaSet set(n, trial == 0 ? std::vector<int>{} : std::vector<int>{1, 3});
    const CVec v = oracle::pure_gaussian_state(phi);
    const CMat o = oracle::rotated_majorana_product(frame, set.indices()) * v * CVec::Unit(v.size(), 0).adjoint();
    const auto m = oracle::exact_shadow_moments(random_density(n, rng), o);
    CHECK(m.second_moment <= cli::planning_bound(io::Observable{"g", io::GeneralObservable{set, frame, phi}}));
  }
}

TEST_CASE("estimate_observables contracts") {
  Rng rng(7);
  std::vector<ShadowSample> few(10);
  for (auto& s : few) s = random_sample(2, rng);
  CHECK(cli::estimate_observables(few, {}, 0.1, 0.05, 1).empty());

  SlaterSpec odd{2, 1, CMat::Identity(1, 2)};
  CHECK_THROWS_AS(cli::estimate_observables(few, {io::Observable{"o", io::SlaterObservable{odd}}}, 0.1, 0.05, 1),
                  ValidationError);

  const io::Observable maj{"m", io::MajoranaObservable{MajoranaSet(2, {1, 2}), RMat::Identity(4, 4)}};
  const auto plan = variance::plan_samples(0.1, 0.05, 1, variance::bound_local(2, 2));
  try {
    cli::estimate_observables(few, {maj}, 0.1, 0.05, 1);
    FAIL("expected InsufficientSamples");
  } catch (const InsufficientSamples& e) {
    CHECK(e.required == plan.total());
  }
  const io::Observable wrong{"w", io::MajoranaObservable{MajoranaSet(3, {1, 2}), RMat::Identity(6, 6)}};
  CHECK_THROWS_AS(cli::estimate_observables(few, {wrong}, 10.0, 0.5, 1), ValidationError);
}

TEST_CASE("collected Gaussian shadows give a fidelity estimate within 5 sigma") {
  GaussianStateSpec g;
  g.n = 3;
  g.lambda = {0.8, -0.5, 1.0};
  g.frame = OrthogonalLabel::identity(3);
  GaussianStateSpec target;
  target.n = 3;
  target.lambda = {0.6, -0.9, 0.7};
  Rng rng(8);
  target.frame = haar_orthogonal(3, rng);
  const auto shadows = collect_shadows(g, Ensemble::haar, 10000, 42, 2);
  std::stringstream file;
  io::write_shadows(file, shadows);
  const auto back = io::read_shadows(file);
  REQUIRE(back.size() == 10000);

  // Plan so that K * L fits in the 10^4 shadows (delta 0.05, one observable).
  const double b = variance::bound_gaussian(3);
  const double eps = std::sqrt(24.0 * b / 185.0);
  const auto records =
      cli::estimate_observables(back, {io::Observable{"t", io::GaussianObservable{target}}}, eps, 0.05, 2);
  REQUIRE(records.size() == 1);
  CHECK(records[0].n_samples <= 10000);
  const double truth = gaussian_overlap(g, target);
  const double dense = (oracle::gaussian_density(g) * oracle::gaussian_density(target)).trace().real();
  CHECK(std::abs(truth - dense) < 1e-10);
  CHECK(std::abs(records[0].estimate.real() - truth) <= 5 * records[0].standard_error);
  CHECK(std::abs(records[0].estimate.imag()) < 1e-12);

  // Thread count does not change the estimate.
  const auto again =
      cli::estimate_observables(back, {io::Observable{"t", io::GaussianObservable{target}}}, eps, 0.05, 1);
  CHECK(again[0].estimate == records[0].estimate);
}

TEST_CASE("verify_design") {
  const auto r = cli::verify_design(1, 1);
  CHECK(r.pass);
  REQUIRE(r.checks.size() == 3);
  for (const auto& c : r.checks) CHECK(c.max_deviation <= 1e-10);
  CHECK_THROWS_AS(cli::verify_design(3, 1), ResourceError);
}

TEST_CASE("exit codes") {
  CHECK(cli::exit_code_for(ValidationError("x")) == 2);
  CHECK(cli::exit_code_for(ResourceError("x")) == 3);
  CHECK(cli::exit_code_for(InsufficientSamples("x", 5)) == 4);
  CHECK(cli::exit_code_for(std::runtime_error("x")) == 1);
}
