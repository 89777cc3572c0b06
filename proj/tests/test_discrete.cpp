#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "fixtures.hpp"
#include "netclear/discrete.hpp"
#include "netclear/error.hpp"
#include "oracles.hpp"

using namespace netclear;
using doctest::Approx;

namespace {

using Actions = std::vector<std::vector<std::int64_t>>;

const InitialCondition kStart = InitialCondition::empty(3);

} // namespace

TEST_CASE("integral caps") {
  CHECK(integral_caps(Vector{0, 1, 2}) == std::vector<std::int64_t>{0, 1, 2});
  CHECK_THROWS_AS(integral_caps(Vector{1.5}), InvalidInput);
  CHECK_THROWS_AS(integral_caps(Vector{-1}), InvalidInput);
}

TEST_CASE("integral fractional schedules round to themselves") {
  Rng rng(1);
  const std::vector<std::int64_t> caps{1, 1, 1};
  for (int k = 0; k < 100; ++k) {
    const auto r = sample_interventions({{1, 0, 0}, {0, 1, 0}}, caps, 1.0, 1, rng);
    CHECK(r.feasible);
    CHECK(r.attempts == 1);
    CHECK(r.actions[0].amounts == std::vector<std::int64_t>{1, 0, 0});
    CHECK(r.actions[1].amounts == std::vector<std::int64_t>{0, 1, 0});
  }
}

TEST_CASE("rounding is unbiased and respects the caps") {
  Rng rng(2);
  const Vector z{0.5, 1.3, 0.0, 2.7};
  const std::vector<std::int64_t> caps{1, 2, 3, 3};
  const int draws = 100000;
  Vector mean(4, 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto r = sample_interventions({z}, caps, 100.0, 1, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(r.actions[0].amounts[i] <= caps[i]);
      mean[i] += double(r.actions[0].amounts[i]);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    mean[i] /= draws;
    const double p = z[i] / double(caps[i]);
    const double sd = std::sqrt(double(caps[i]) * p * (1.0 - p) / draws);
    CHECK(std::abs(mean[i] - z[i]) <= 5.0 * sd + 1e-12);
  }
  CHECK(std::abs(mean[0] - 0.5) <= 0.005);
}

TEST_CASE("a single attempt overshoots the budget a quarter of the time") {
  Rng rng(3);
  const int draws = 100000;
  int infeasible = 0;
  for (int d = 0; d < draws; ++d) {
    const auto r = sample_interventions({{0.5, 0.5}}, std::vector<std::int64_t>{1, 1}, 1.0, 1, rng);
    CHECK(r.attempts == 1);
    if (!r.feasible) {
      ++infeasible;
      CHECK(r.actions[0].amounts == std::vector<std::int64_t>{1, 1});
      CHECK_FALSE(r.actions[0].feasible);
    }
  }
  CHECK(infeasible / double(draws) == Approx(0.25).epsilon(0.03));
}

TEST_CASE("retries recover feasibility") {
  Rng rng(4);
  for (int d = 0; d < 1000; ++d) {
    const auto r = sample_interventions({{0.5, 0.5}, {0.5, 0.5}}, std::vector<std::int64_t>{1, 1}, 1.0, 64, rng);
    CHECK(r.feasible);
    for (const auto& a : r.actions) CHECK(a.amounts[0] + a.amounts[1] <= 1);
  }
}

TEST_CASE("rounding input errors") {
  Rng rng(5);
  CHECK_THROWS_AS(sample_interventions({{0.5}}, std::vector<std::int64_t>{0}, 1.0, 1, rng), InvalidInput);
  CHECK_THROWS_AS(sample_interventions({{1.5}}, std::vector<std::int64_t>{1}, 2.0, 1, rng), InvalidInput);
  CHECK_THROWS_AS(sample_interventions({{0.5}}, std::vector<std::int64_t>{1}, 1.0, 0, rng), InvalidInput);
}

TEST_CASE("three-node pipeline with one unit of budget") {
  const auto path = fixture::three_node_path();
  const InterventionPolicy policy{1.0, Vector(3, 1.0), std::nullopt};
  const auto relaxed = value_given_sample_path(kStart, path, policy);
  for (const auto& s : relaxed.steps) CHECK(max_abs_diff(s.intervention, Vector{1, 0, 0}) <= 1e-9);
  Rng rng(6);
  const auto report = round_and_simulate(kStart, path, relaxed, std::vector<std::int64_t>{1, 1, 1}, 1.0, {}, rng);
  CHECK(report.feasible);
  CHECK(report.value_sol == Approx(20.0 / 3).epsilon(1e-9));
  CHECK(report.value_rel == Approx(20.0 / 3).epsilon(1e-9));
  CHECK(report.ratio == Approx(1.0));
  CHECK(report.realized.steps[0].reward == Approx(10.0 / 3));
  CHECK(report.realized.steps[1].reward == Approx(10.0 / 3));
  CHECK(report.max_beta == Approx(2.0 / 3));
  CHECK(report.bound == Approx(1.0 / 3));
  for (const auto& a : report.actions) CHECK(a.amounts == std::vector<std::int64_t>{1, 0, 0});

  AggregateOptions agg;
  agg.samples = 4;
  const auto est = aggregate_discrete(EnvironmentModel::replay(path), kStart, policy, agg, {});
  CHECK(est.mean == Approx(20.0 / 3).epsilon(1e-9));
  CHECK(est.standard_error == 0.0);
}

TEST_CASE("zero budget: discrete, fractional and zero input coincide") {
  const auto env = EnvironmentModel::replay(fixture::three_node_path());
  const InterventionPolicy policy{0.0, Vector(3, 0.0), std::nullopt};
  AggregateOptions agg;
  const auto d = aggregate_discrete(env, kStart, policy, agg, {});
  CHECK(d.mean == Approx(10.0 / 3).epsilon(1e-9));
  CHECK(d.mean_relaxed == Approx(10.0 / 3).epsilon(1e-9));
  CHECK(brute_force_discrete(kStart, fixture::three_node_path(), 0.0, Vector(3, 0.0)).value ==
        Approx(10.0 / 3).epsilon(1e-9));
}

TEST_CASE("approximation bound cases") {
  const BoundInputs in{1.0, 5.0, 2};
  CHECK(approximation_bound(in, 2.0).lower_bound == Approx(0.1));
  CHECK(approximation_bound(in, 6.0).lower_bound == Approx(0.2));
  CHECK_FALSE(approximation_bound(in, 6.0).gamma_form.has_value());
  CHECK(*approximation_bound(in, 2.0, 2.0 / 3).gamma_form == Approx(1.0 / 3));
  CHECK(approximation_bound({2.0, 2.0, 1}, 3.0, 0.0).lower_bound == 1.0);
  CHECK_THROWS_AS(approximation_bound({0.0, 1.0, 1}, 1.0), InvalidInput);
  CHECK_THROWS_AS(approximation_bound({2.0, 1.0, 1}, 1.0), InvalidInput);
}

TEST_CASE("action enumeration") {
  const auto all = enumerate_actions(std::vector<std::int64_t>{1, 1, 1}, 1);
  CHECK(all == Actions{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  CHECK(enumerate_actions(std::vector<std::int64_t>{2, 2}, 3).size() == 8);
  CHECK(enumerate_actions(std::vector<std::int64_t>{3}, 0) == Actions{{0}});
}

TEST_CASE("exhaustive search on the three-node path") {
  const auto r = brute_force_discrete(kStart, fixture::three_node_path(), 1.0, Vector(3, 1.0));
  CHECK(r.value == Approx(20.0 / 3).epsilon(1e-9));
  CHECK(r.sequences == 16);
  CHECK(r.actions == Actions{{1, 0, 0}, {1, 0, 0}});
  CHECK_THROWS_AS(brute_force_discrete(kStart, fixture::three_node_path(), 1.0, Vector(3, 1.0), 15),
                  InvalidInput);
}

TEST_CASE("exhaustive search matches an independent enumeration") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 2;
    std::vector<ShockRealization> shocks;
    for (int t = 1; t <= 2; ++t) {
      Matrix l(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j && u(rng) < 0.6) l(i, j) = 2.0 * u(rng);
      Vector b(n), c(n);
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = 0.2 + u(rng);
        c[i] = 0.5 * u(rng);
      }
      shocks.emplace_back(t, b, c, l);
    }
    const SamplePath path(shocks);
    const auto start = InitialCondition::empty(n);
    const auto r = brute_force_discrete(start, path, 2.0, Vector(n, 1.0));
    // all pairs of 0/1 vectors with at most two ones, cleared by fictitious default
    double best = -1.0;
    const std::size_t m = std::size_t(1) << n;
    for (std::size_t s1 = 0; s1 < m; ++s1)
      for (std::size_t s2 = 0; s2 < m; ++s2) {
        if (std::popcount(s1) > 2 || std::popcount(s2) > 2) continue;
        SystemState state = start.state;
        Vector clearing = start.clearing;
        double v = 0.0;
        for (int t = 0; t < 2; ++t) {
          const std::size_t mask = t == 0 ? s1 : s2;
          state = advance_state(state, clearing, path[t]);
          const auto a = relative_matrix(state);
          Vector cash = path[t].external_assets();
          for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) cash[i] += 1.0;
          clearing = oracle::fictitious_default(a.entries, state.totals(), cash);
          v += sum(clearing);
        }
        best = std::max(best, v);
      }
    CHECK(r.value == Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("single node: greedy is optimal") {
  const SamplePath path({ShockRealization(1, {3.0}, {1.0}, Matrix(1, 1)),
                         ShockRealization(2, {1.0}, {0.0}, Matrix(1, 1))});
  const InitialCondition start = InitialCondition::empty(1);
  const auto opt = brute_force_discrete(start, path, 1.0, Vector{1.0});
  const auto greedy = value_given_sample_path(start, path, {1.0, Vector{1.0}, std::nullopt});
  CHECK(opt.value == Approx(greedy.value));
  CHECK(opt.value == Approx(3.0));
}

TEST_CASE("integer payment allocation") {
  Matrix m(3, 3);
  m(0, 1) = m(0, 2) = 1.0 / 3;
  const auto a = oracle::wrap(m);
  const auto three = discretize_payments(Vector{3, 1, 1}, a);
  CHECK(three[0] == std::vector<std::int64_t>{0, 1, 1, 1});
  CHECK(three[1] == std::vector<std::int64_t>{0, 0, 0, 1});
  const auto two = discretize_payments(Vector{2, 0, 0}, a);
  CHECK(two[0] == std::vector<std::int64_t>{0, 0, 0, 0});
  for (const auto& row : discretize_payments(Vector{0, 0, 0}, a))
    CHECK(row == std::vector<std::int64_t>{0, 0, 0, 0});

  Matrix skew(3, 3);
  skew(0, 2) = 0.5;
  skew(0, 1) = 0.25;
  const auto s = discretize_payments(Vector{4, 0, 0}, oracle::wrap(skew));
  CHECK(s[0] == std::vector<std::int64_t>{0, 1, 2, 1});

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ar = oracle::wrap(oracle::random_relative(5, 0.9, 0.7, rng));
    Vector p(5);
    for (auto& x : p) x = u(rng);
    const auto alloc = discretize_payments(p, ar);
    for (std::size_t i = 0; i < 5; ++i) {
      std::int64_t total = 0;
      for (auto v : alloc[i]) {
        CHECK(v >= 0);
        total += v;
      }
      CHECK(double(total) <= p[i] + 1e-9);
      CHECK(alloc[i][i] == 0);
    }
  }
}
