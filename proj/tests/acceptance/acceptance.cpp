// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only k[,k...]] [--known-deviation k[,k...]] [--threads n]
//
// Exit status is 0 when every criterion passes. A criterion listed under
// --known-deviation may fail without changing the exit status, but only
// with its documented failure pattern; its line still reads FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "../fixtures.hpp"
#include "../instances.hpp"
#include "netclear/clearing.hpp"
#include "netclear/discrete.hpp"
#include "netclear/experiment.hpp"
#include "netclear/horizon.hpp"
#include "netclear/parallel.hpp"
#include "netclear/policy.hpp"

using namespace netclear;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  /// The failure matches the pattern recorded for a known deviation.
  bool documented_failure = false;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::size_t g_threads = 1;
fs::path g_source_dir = NETCLEAR_SOURCE_DIR;
fs::path g_work_dir;

Outcome zero_input_example() {
  const auto t0 = Clock::now();
  const auto v = value_given_sample_path(InitialCondition::empty(3), fixture::three_node_path(),
                                         {0.0, Vector(3, 0.0), std::nullopt});
  const double secs = seconds_since(t0);
  const auto& p2 = v.steps[1].totals;
  const bool ok = near(v.value, 10.0 / 3, 1e-6) && near(v.steps[0].reward, 5.0 / 3, 1e-6) &&
                  near(v.steps[1].reward, 5.0 / 3, 1e-6) && near(p2[0], 5.0, 1e-9) &&
                  near(p2[1], 5.0 / 3, 1e-9) && near(p2[2], 5.0 / 3, 1e-9) && secs < 1.0;
  return {ok, fmt("value=%.9f rewards=(%.9f, %.9f) P(2)=(%.9f, %.9f, %.9f) %.3fs", v.value,
                  v.steps[0].reward, v.steps[1].reward, p2[0], p2[1], p2[2], secs)};
}

Outcome fractional_example() {
  const auto v = value_given_sample_path(InitialCondition::empty(3), fixture::three_node_path(),
                                         {2.0, Vector(3, 2.0), std::nullopt});
  const bool ok = near(v.value, 10.0, 1e-6) && near(v.steps[0].reward, 5.0, 1e-6) &&
                  near(v.steps[1].reward, 5.0, 1e-6);
  return {ok, fmt("value=%.9f rewards=(%.9f, %.9f)", v.value, v.steps[0].reward, v.steps[1].reward)};
}

Outcome discrete_example() {
  const auto path = fixture::three_node_path();
  const auto start = InitialCondition::empty(3);
  const auto bf = brute_force_discrete(start, path, 1.0, Vector(3, 1.0));
  const std::vector<std::int64_t> unit{1, 0, 0};
  bool ok = near(bf.value, 20.0 / 3, 1e-6) && bf.actions.size() == 2 && bf.actions[0] == unit &&
            bf.actions[1] == unit;
  const InterventionPolicy policy{1.0, Vector(3, 1.0), std::nullopt};
  double lo = 1e300, hi = -1e300;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AggregateOptions agg;
    agg.samples = 5;
    agg.seed = seed;
    const auto est = aggregate_discrete(EnvironmentModel::replay(path), start, policy, agg, {});
    for (const auto& r : est.reports) {
      lo = std::min(lo, r.value_sol);
      hi = std::max(hi, r.value_sol);
      for (const auto& a : r.actions) ok = ok && a.amounts == unit;
    }
  }
  ok = ok && near(lo, 20.0 / 3, 1e-6) && near(hi, 20.0 / 3, 1e-6);
  return {ok, fmt("brute force=%.9f over %zu sequences; rounded values in [%.9f, %.9f] over 100 runs",
                  bf.value, bf.sequences, lo, hi)};
}

Outcome solver_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + k % 8;
    Matrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double rs = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && u(rng) < 0.6) {
          e(i, j) = u(rng);
          rs += e(i, j);
        }
      const double target = 0.99 * u(rng);
      if (rs > 0.0)
        for (std::size_t j = 0; j < n; ++j) e(i, j) *= target / rs;
    }
    RelativeLiabilityMatrix a{e, Vector(n)};
    for (std::size_t i = 0; i < n; ++i) a.row_sums[i] = e.row_sum(i);
    Vector p(n), c(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 10.0 * u(rng);
      c[i] = u(rng) < 0.3 ? 0.0 : 3.0 * u(rng);
      z[i] = u(rng) < 0.5 ? 0.0 : u(rng);
    }
    worst = std::max(worst, max_abs_diff(clear_lp(a, p, c, z), clear_fixed_point(a, p, c, z)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, fmt("max sup-norm difference %.3g over 100 instances, %.3fs", worst, secs)};
}

struct SmallInstance {
  SamplePath path;
  double budget;
  Vector caps;
};

SmallInstance small_discrete_instance(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 2 + k % 3;
  const int horizon = 1 + (k / 3) % 3;
  std::vector<ShockRealization> shocks;
  for (int t = 1; t <= horizon; ++t) {
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && u(rng) < 0.6) l(i, j) = 2.0 * u(rng);
    Vector b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = 0.2 + 1.5 * u(rng);
      c[i] = u(rng) < 0.4 ? 0.0 : u(rng);
    }
    shocks.emplace_back(t, b, c, l);
  }
  Vector caps(n);
  for (auto& v : caps) v = double(1 + (u(rng) < 0.5));
  return {SamplePath(std::move(shocks)), double(1 + k % 3), caps};
}

// Exact expectation of the realized value when every round draws independent
// binomials, with no budget resampling.
double unconditioned_mean(const InitialCondition& start, const SamplePath& path,
                          const PathValue& relaxed, std::span<const std::int64_t> caps) {
  const std::size_t n = caps.size();
  const std::size_t rounds = path.size();
  std::vector<Vector> action(rounds, Vector(n, 0.0));
  double total = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t pos, double prob) {
    if (prob == 0.0) return;
    if (pos == rounds * n) {
      total += prob * simulate_interventions(start, path, action).value;
      return;
    }
    const std::size_t t = pos / n, i = pos % n;
    const auto cap = caps[i];
    const double p = cap ? std::clamp(relaxed.steps[t].intervention[i] / double(cap), 0.0, 1.0) : 0.0;
    double choose = 1.0;
    for (std::int64_t k = 0; k <= cap; ++k) {
      action[t][i] = double(k);
      rec(pos + 1, prob * choose * std::pow(p, double(k)) * std::pow(1.0 - p, double(cap - k)));
      choose = choose * double(cap - k) / double(k + 1);
    }
    action[t][i] = 0.0;
  };
  rec(0, 1.0);
  return total;
}

Outcome approximation_ratio() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::vector<SmallInstance> inst;
  for (int k = 0; k < 50; ++k) inst.push_back(small_discrete_instance(rng, k));
  struct Row {
    double mean_sol = 0, v_opt = 0, v_rel = 0, beta = 0, unconditioned = 0;
  };
  std::vector<Row> rows(inst.size());
  parallel_for(inst.size(), g_threads, [&](std::size_t k) {
    const auto& in = inst[k];
    const std::size_t n = in.caps.size();
    const auto start = InitialCondition::empty(n);
    const auto relaxed = value_given_sample_path(start, in.path, {in.budget, in.caps, std::nullopt});
    const auto caps = integral_caps(in.caps);
    Rng r = substream(77, k, Stream::rounding);
    double total = 0.0, beta = 0.0;
    for (int d = 0; d < 200; ++d) {
      const auto rep = round_and_simulate(start, in.path, relaxed, caps, in.budget, {}, r);
      total += rep.value_sol;
      beta = std::max(beta, rep.max_beta);
    }
    Row row{total / 200.0, brute_force_discrete(start, in.path, in.budget, in.caps).value, relaxed.value,
            beta, 0.0};
    if (row.mean_sol < (1.0 - beta) * row.v_opt - 1e-6)
      row.unconditioned = unconditioned_mean(start, in.path, relaxed, caps);
    rows[k] = row;
  });
  int ratio_fail = 0, dominance_fail = 0, resampling = 0, unexplained = 0;
  double worst_ratio = 1e300, worst_dom = 1e300;
  for (const auto& r : rows) {
    const double target = (1.0 - r.beta) * r.v_opt - 1e-6;
    const double slack = r.mean_sol - target;
    worst_ratio = std::min(worst_ratio, slack);
    // exact dominance, up to the LP's own rounding
    const double dom = r.v_rel - r.v_opt;
    worst_dom = std::min(worst_dom, dom);
    const bool dominated = dom < -1e-9 * std::max(1.0, r.v_opt);
    if (dominated) ++dominance_fail;
    if (slack >= 0.0) continue;
    ++ratio_fail;
    // budget resampling conditions the draws; the bound holds for the raw binomials
    if (r.unconditioned >= target)
      ++resampling;
    else if (!dominated)
      ++unexplained;
  }
  const double secs = seconds_since(t0);
  Outcome o{ratio_fail == 0 && dominance_fail == 0 && secs < 120.0,
            fmt("ratio violations %d/50 (min slack %.4g; %d met by the unresampled expectation), "
                "V_rel < V_opt on %d/50 (min V_rel-V_opt %.4g), %.1fs",
                ratio_fail, worst_ratio, resampling, dominance_fail, worst_dom, secs)};
  o.documented_failure = !o.pass && unexplained == 0 && secs < 120.0;
  return o;
}

Outcome myopic_optimality() {
  std::mt19937_64 rng(606);
  int gap_fail = 0, dual_fail = 0, below = 0, count = 0;
  double worst_gap = 0.0, worst_dual = 0.0;
  while (count < 30) {
    const std::size_t n = 2 + count % 4;
    const int horizon = 1 + (count / 4) % 4;
    const auto inst = instances::constant_proportion(rng, n, horizon);
    const auto rep = verify_myopic_optimality(inst.path, inst.budget, inst.caps);
    if (!rep.applicable) continue;
    ++count;
    if (std::abs(rep.gap) > 1e-6) {
      ++gap_fail;
      if (rep.gap < 0.0) ++below;
    }
    if (std::abs(rep.duality_gap) > 1e-6) ++dual_fail;
    worst_gap = std::max(worst_gap, std::abs(rep.gap));
    worst_dual = std::max(worst_dual, std::abs(rep.duality_gap));
  }
  Outcome o{gap_fail == 0 && dual_fail == 0,
            fmt("|sequential-horizon| > 1e-6 on %d/30 (max %.4g, sequential below horizon on %d), "
                "duality gap > 1e-6 on %d/30 (max %.3g)",
                gap_fail, worst_gap, below, dual_fail, worst_dual)};
  o.documented_failure = !o.pass && dual_fail == 0 && below == gap_fail;
  return o;
}

Outcome fairness_run() {
  const auto t0 = Clock::now();
  auto cfg = load_config(g_source_dir / "configs" / "core_periphery_sgc.json");
  cfg.threads = g_threads;
  cfg.output_dir = g_work_dir / "fairness";
  const auto r = run_experiment(cfg);
  const double secs = seconds_since(t0);
  const double pof = r.pof ? r.pof->pof : std::nan("");
  const bool ok = r.pof && r.max_gini <= 0.5 + 1e-6 && pof >= 1.0 && pof <= 1.1 && secs < 300.0;
  return {ok, fmt("max realized SGC %.6f, PoF %.6f (unconstrained %.4f, constrained %.4f), %.1fs",
                  r.max_gini, pof, r.pof ? r.pof->value_unconstrained : 0.0,
                  r.pof ? r.pof->value_constrained : 0.0, secs)};
}

Outcome concentration() {
  const auto t0 = Clock::now();
  std::vector<ShockRealization> zero;
  for (int t = 1; t <= 2; ++t) zero.emplace_back(t, Vector(3, 1e-6), Vector(3, 0.0), Matrix(3, 3));
  const auto env = EnvironmentModel::mixture({{0.5, fixture::three_node_path()}, {0.5, SamplePath(zero)}});
  const std::size_t n = required_samples(0.05, 0.1, env.horizon(), *env.liability_mass_bound());
  int hits = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    AggregateOptions agg;
    agg.samples = n;
    agg.seed = 1000 + trial;
    agg.threads = g_threads;
    const auto est = aggregate_value(env, InitialCondition::empty(3), {0.0, Vector(3, 0.0), std::nullopt}, agg);
    const double err = std::abs(est.mean - 5.0 / 3);
    worst = std::max(worst, err);
    if (err <= 0.1) ++hits;
  }
  const double secs = seconds_since(t0);
  return {hits >= 90, fmt("N=%zu, |mean-5/3| <= 0.1 in %d/100 meta-trials (target 95, floor 90), max error %.4f, %.1fs",
                          n, hits, worst, secs)};
}

Outcome budget_monotonicity() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    SbmParams p;
    p.n_core = 1 + k % 3;
    p.n_periphery = 2 + k % 4;
    p.p_cc = 0.5 + 0.5 * u(rng);
    p.p_cp = 0.5 * u(rng) + 0.2;
    p.p_pc = 0.5 * u(rng) + 0.2;
    p.p_pp = 0.3 * u(rng);
    p.asset_level = 0.3 * u(rng);
    const auto env = EnvironmentModel::sbm(p, 3);
    const std::size_t n = p.nodes();
    AggregateOptions agg;
    agg.samples = 6;
    agg.seed = 50 + k;
    agg.threads = g_threads;
    double delta = 0.0;
    for (std::size_t s = 0; s < agg.samples; ++s) {
      Rng r = substream(agg.seed, s, Stream::environment);
      delta = std::max(delta, sample_path(env, 1, 3, r).max_liability_mass());
    }
    double prev = -1e300;
    for (double b : {0.0, 1.0, 2.0, 5.0, delta + 1.0}) {
      const auto est = aggregate_value(env, InitialCondition::empty(n), {b, Vector(n, b), std::nullopt}, agg);
      if (est.mean < prev - 1e-6) ++violations;
      worst = std::max(worst, prev - est.mean);
      prev = est.mean;
    }
  }
  return {violations == 0, fmt("decreases beyond 1e-6 on %d of 80 steps (largest drop %.3g)", violations, std::max(worst, 0.0))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path configs = g_source_dir / "configs";
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  for (const char* name : {"three_node_zero_input", "three_node_fractional", "three_node_discrete",
                           "three_node_horizon", "gamma_transactions"})
    runs.emplace_back(name, load_config(configs / (std::string(name) + ".json")));
  runs.emplace_back("core_periphery_sgc", load_config(configs / "core_periphery_sgc.json"));

  int identical = 0;
  std::string differing;
  for (auto& [name, cfg] : runs) {
    std::vector<std::string> traces;
    for (std::size_t threads : {std::size_t(1), std::max<std::size_t>(3, g_threads)}) {
      cfg.threads = threads;
      cfg.write_trace = true;
      cfg.output_dir = g_work_dir / "determinism" / (name + "_" + std::to_string(threads));
      fs::remove_all(cfg.output_dir);
      run_experiment(cfg);
      traces.push_back(slurp(cfg.output_dir / "trace.csv"));
    }
    if (traces[0] == traces[1] && !traces[0].empty())
      ++identical;
    else
      differing += " " + name;
  }
  return {identical == int(runs.size()),
          fmt("trace.csv byte-identical across thread counts for %d/%zu configs%s", identical, runs.size(),
              differing.empty() ? "" : (" (differs:" + differing + ")").c_str())};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only, known;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--only", only, "comma-separated criteria to run");
  app.add_option("--known-deviation", known, "criteria allowed to fail with their documented pattern");
  app.add_option("--threads", threads, "worker threads");
  CLI11_PARSE(app, argc, argv);
  g_threads = threads;
  g_work_dir = fs::temp_directory_path() / "netclear_acceptance";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"golden example, zero input", zero_input_example},
      {"golden example, fractional", fractional_example},
      {"golden example, discrete", discrete_example},
      {"solver equivalence", solver_equivalence},
      {"approximation ratio", approximation_ratio},
      {"myopic optimality", myopic_optimality},
      {"fairness cap and price of fairness", fairness_run},
      {"Monte-Carlo concentration", concentration},
      {"value monotone in budget", budget_monotonicity},
      {"determinism across thread counts", determinism},
  };
  const auto selected = parse_list(only);
  const auto allowed = parse_list(known);

  int failed = 0, tolerated = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d  %-36s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (o.pass) continue;
    if (allowed.count(id) && o.documented_failure) {
      ++tolerated;
      std::printf("         criterion %d fails with its documented pattern (see README)\n", id);
    } else {
      ++failed;
    }
  }
  std::printf("%d failed, %d known deviation(s)\n", failed, tolerated);
  return failed == 0 ? 0 : 1;
}
