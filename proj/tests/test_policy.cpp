#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "netclear/clearing.hpp"
#include "netclear/error.hpp"
#include "netclear/policy.hpp"
#include "oracles.hpp"

using namespace netclear;
using doctest::Approx;

namespace {

RelativeLiabilityMatrix three_node_a() {
  Matrix m(3, 3);
  m(0, 1) = m(0, 2) = 1.0 / 3;
  return oracle::wrap(m);
}

EnvironmentModel small_sbm(int horizon) {
  SbmParams p;
  p.n_core = 2;
  p.n_periphery = 4;
  p.p_cc = 0.8;
  p.p_cp = 0.5;
  p.p_pc = 0.5;
  p.p_pp = 0.2;
  p.asset_level = 0.2;
  return EnvironmentModel::sbm(p, horizon);
}

} // namespace

TEST_CASE("single round intervention") {
  const auto a = three_node_a();
  const Vector p{3, 1, 1}, c{1, 0, 0};
  const auto r = per_round_lp(a, p, c, 2.0, Vector(3, 2.0));
  CHECK(r.reward == Approx(5.0).epsilon(1e-12));
  CHECK(max_abs_diff(r.intervention, Vector{2, 0, 0}) <= 1e-9);
  CHECK(max_abs_diff(r.clearing, Vector{3, 1, 1}) <= 1e-9);
  CHECK(r.max_beta == Approx(2.0 / 3));

  const auto none = per_round_lp(a, p, c, 0.0, Vector(3, 2.0));
  CHECK(none.reward == Approx(5.0 / 3).epsilon(1e-12));
  CHECK(max_abs_diff(none.clearing, clear_lp(a, p, c, Vector(3, 0.0))) <= 1e-9);

  // already solvent: the budget is irrelevant
  for (double b : {0.0, 1.0, 10.0})
    CHECK(per_round_lp(a, p, Vector{3, 1, 1}, b, Vector(3, 5.0)).reward == Approx(5.0));

  CHECK_THROWS_AS(per_round_lp(a, p, c, -1.0, Vector(3, 1.0)), InvalidInput);
  CHECK_THROWS_AS(per_round_lp(a, p, c, 1.0, Vector(2, 1.0)), InvalidInput);
}

TEST_CASE("two round values") {
  const auto path = fixture::three_node_path();
  const auto start = InitialCondition::empty(3);
  const auto full = value_given_sample_path(start, path, {2.0, Vector(3, 2.0), std::nullopt});
  CHECK(full.value == Approx(10.0).epsilon(1e-12));
  REQUIRE(full.steps.size() == 2);
  CHECK(full.steps[0].reward == Approx(5.0));
  CHECK(full.steps[1].reward == Approx(5.0));
  CHECK(max_abs_diff(full.steps[1].totals, Vector{3, 1, 1}) <= 1e-9);

  const auto zero = value_given_sample_path(start, path, {0.0, Vector(3, 0.0), std::nullopt});
  CHECK(zero.value == Approx(10.0 / 3).epsilon(1e-12));
  CHECK(zero.steps[0].reward == Approx(5.0 / 3));
  CHECK(zero.steps[1].reward == Approx(5.0 / 3));
  CHECK(max_abs_diff(zero.steps[1].totals, Vector{5, 5.0 / 3, 5.0 / 3}) <= 1e-9);

  const auto one = value_given_sample_path(start, path, {1.0, Vector(3, 1.0), std::nullopt});
  CHECK(one.value == Approx(20.0 / 3).epsilon(1e-12));
  CHECK(max_abs_diff(one.steps[1].totals, Vector{4, 4.0 / 3, 4.0 / 3}) <= 1e-9);

  const SamplePath quiet({ShockRealization(1, Vector(3, 1e-6), Vector(3, 0.0), Matrix(3, 3))});
  CHECK(value_given_sample_path(start, quiet, {1.0, Vector(3, 1.0), std::nullopt}).value ==
        Approx(3e-6));
}

TEST_CASE("positive objective weights leave the optimum unchanged") {
  const auto path = fixture::three_node_path();
  const auto a = three_node_a();
  const Vector w{1.0, 1.001, 1.002};
  for (double budget : {0.0, 1.0, 2.0}) {
    const auto plain = per_round_lp(a, Vector{3, 1, 1}, Vector{1, 0, 0}, budget, Vector(3, 2.0));
    const auto weighted =
        per_round_lp(a, Vector{3, 1, 1}, Vector{1, 0, 0}, budget, Vector(3, 2.0), nullptr, w);
    CHECK(max_abs_diff(plain.clearing, weighted.clearing) <= 1e-6);
    CHECK(weighted.reward == Approx(plain.reward));
  }
  // with no budget the clearing is the greatest fixed point for any weights
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const auto ar = oracle::wrap(oracle::random_relative(n, 0.9, 0.5, rng));
    Vector p(n), c(n), wt(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.5 + u(rng);
      c[i] = 0.5 * u(rng);
      wt[i] = 0.1 + u(rng);
    }
    const auto r = per_round_lp(ar, p, c, 0.0, Vector(n, 0.0), nullptr, wt);
    CHECK(max_abs_diff(r.clearing, clear_fixed_point(ar, p, c, Vector(n, 0.0))) <= 1e-7);
  }
}

TEST_CASE("sample counts") {
  const double delta = 2.0 / std::exp(2.0);
  CHECK(required_samples(delta, 0.1, 1, 1.0) == 100);
  CHECK(required_samples(delta, 0.1, 2, 1.0) == 400);
  CHECK(required_samples(delta, 1e9, 3, 1.0) == 1);
  CHECK(required_samples(0.05, 0.1, 2, 5.0) == 18445);
  CHECK_THROWS_AS(required_samples(0.0, 0.1, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(required_samples(0.5, -1.0, 1, 1.0), InvalidInput);
}

TEST_CASE("mean and standard error") {
  const auto [m, se] = mean_and_stderr(Vector{1, 2, 3, 4});
  CHECK(m == 2.5);
  CHECK(se == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  const auto [m1, se1] = mean_and_stderr(Vector{7});
  CHECK(m1 == 7.0);
  CHECK(se1 == 0.0);
}

TEST_CASE("deterministic environments aggregate without variance") {
  const auto env = EnvironmentModel::replay(fixture::three_node_path());
  AggregateOptions opts;
  opts.samples = 10;
  const auto est = aggregate_value(env, InitialCondition::empty(3), {2.0, Vector(3, 2.0), std::nullopt}, opts);
  CHECK(est.mean == Approx(10.0).epsilon(1e-12));
  CHECK(est.standard_error == 0.0);
  for (double v : est.samples) CHECK(v == est.samples.front());
}

TEST_CASE("two-point mixture converges to its mean") {
  const SamplePath empty({fixture::zero_shock(1, 3), fixture::zero_shock(2, 3)});
  // zero_shock still owes 1 outside per node and pays nothing, so its value is 0
  const auto env = EnvironmentModel::mixture({{0.5, fixture::three_node_path()}, {0.5, empty}});
  AggregateOptions opts;
  opts.samples = 10000;
  opts.seed = 17;
  opts.threads = 4;
  const auto est = aggregate_value(env, InitialCondition::empty(3), {0.0, Vector(3, 0.0), std::nullopt}, opts);
  CHECK(std::abs(est.mean - 5.0 / 3) <= 3.0 * est.standard_error);
  CHECK(est.standard_error == Approx(5.0 / 3 / 100.0).epsilon(0.05));
}

TEST_CASE("aggregation does not depend on the thread count") {
  const auto env = small_sbm(3);
  InterventionPolicy policy{1.5, Vector(6, 1.0), std::nullopt};
  AggregateOptions opts;
  opts.samples = 12;
  opts.seed = 5;
  const auto one = aggregate_value(env, InitialCondition::empty(6), policy, opts);
  opts.threads = 5;
  const auto many = aggregate_value(env, InitialCondition::empty(6), policy, opts);
  CHECK(one.samples == many.samples);
  CHECK(one.mean == many.mean);
}

TEST_CASE("values are bounded and grow with the budget") {
  const auto env = small_sbm(3);
  AggregateOptions opts;
  opts.samples = 6;
  opts.seed = 8;
  opts.keep_paths = true;
  double prev = -1.0;
  for (double b : {0.0, 0.5, 1.0, 3.0, 20.0}) {
    const auto est = aggregate_value(env, InitialCondition::empty(6), {b, Vector(6, b), std::nullopt}, opts);
    CHECK(est.mean >= prev - 1e-6);
    prev = est.mean;
    for (std::size_t k = 0; k < est.samples.size(); ++k) {
      Rng rng = substream(8, k, Stream::environment);
      const auto path = sample_path(env, 1, 3, rng);
      CHECK(est.samples[k] >= 0.0);
      CHECK(est.samples[k] <= 3.0 * path.max_liability_mass() + 1e-9);
    }
  }
}

TEST_CASE("replaying the chosen interventions reproduces the path value") {
  const auto env = small_sbm(4);
  Rng rng = substream(3, 0);
  const auto path = sample_path(env, 1, 4, rng);
  const auto v = value_given_sample_path(InitialCondition::empty(6), path, {2.0, Vector(6, 1.0), std::nullopt});
  std::vector<Vector> z;
  for (const auto& s : v.steps) z.push_back(s.intervention);
  const auto replay = simulate_interventions(InitialCondition::empty(6), path, z);
  CHECK(replay.value == Approx(v.value).epsilon(1e-7));
}
