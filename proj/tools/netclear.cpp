// Command-line front end: run, validate and oracle subcommands over a JSON
// experiment config.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "netclear/discrete.hpp"
#include "netclear/experiment.hpp"
#include "netclear/format.hpp"
#include "netclear/simd/kernels.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
};

netclear::ExperimentConfig load(const std::string& file, const Overrides& o) {
  netclear::ExperimentConfig cfg = netclear::load_config(file);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.threads) {
    if (*o.threads < 1) throw netclear::ConfigError("--threads: must be >= 1");
    cfg.threads = *o.threads;
  }
  return cfg;
}

int cmd_run(const std::string& file, const Overrides& o) {
  const auto cfg = load(file, o);
  const auto rep = netclear::run_experiment(cfg);
  std::cout << "mode " << netclear::to_string(rep.mode) << ", " << rep.samples << " sample(s), "
            << rep.nodes << " nodes, T=" << rep.horizon << "\n"
            << "value " << netclear::format_double(rep.value_mean) << " +/- "
            << netclear::format_double(rep.value_stderr) << "\n";
  if (rep.pof) std::cout << "price of fairness " << netclear::format_double(rep.pof->pof) << "\n";
  if (rep.discrete)
    std::cout << "rounding: mean ratio " << netclear::format_double(rep.discrete->mean_ratio)
              << ", bound " << netclear::format_double(rep.discrete->bound.lower_bound) << "\n";
  if (rep.horizon_lp)
    std::cout << "horizon LP " << netclear::format_double(rep.horizon_lp->primal)
              << ", sequential " << netclear::format_double(rep.horizon_lp->sequential) << "\n";
  std::cout << "results in " << rep.output_dir.string() << "\n";
  return 0;
}

int cmd_validate(const std::string& file, const Overrides& o) {
  const auto cfg = load(file, o);
  const auto env = netclear::build_environment(cfg);
  netclear::validate_config(cfg, env);
  std::cout << "ok: " << netclear::to_string(env.kind()) << " environment, " << env.nodes()
            << " nodes, T=" << env.horizon() << ", mode " << netclear::to_string(cfg.mode)
            << ", N=" << netclear::resolve_samples(cfg, env) << "\n";
  return 0;
}

int cmd_oracle(const std::string& file, const Overrides& o) {
  const auto cfg = load(file, o);
  const auto env = netclear::build_environment(cfg);
  netclear::validate_config(cfg, env);
  netclear::Rng rng = netclear::substream(cfg.seed, 0, netclear::Stream::environment);
  const auto path = netclear::sample_path(env, 1, env.horizon(), rng);
  const auto best = netclear::brute_force_discrete(netclear::InitialCondition::empty(env.nodes()),
                                                   path, cfg.budget, cfg.caps(env.nodes()));
  nlohmann::ordered_json j;
  j["value"] = best.value;
  j["sequences"] = best.sequences;
  j["actions"] = best.actions;
  const std::string body = j.dump(2) + "\n";
  netclear::write_file_atomic(cfg.output_dir / "oracle.json", body);
  std::cout << body;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic clearing networks with budgeted interventions"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t threads = 1;
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* out_opt = app.add_option("--out-dir", out_dir, "override the output directory");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads");
  std::string simd;
  app.add_option("--simd", simd, "kernel backend (scalar, avx2, neon)");

  std::string file;
  auto* run = app.add_subcommand("run", "run an experiment and write its result files");
  run->add_option("config", file, "JSON config")->required();
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", file, "JSON config")->required();
  auto* oracle = app.add_subcommand("oracle", "exhaustive discrete optimum of the first sample path");
  oracle->add_option("config", file, "JSON config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) o.seed = seed;
  if (*out_opt) o.out_dir = out_dir;
  if (*threads_opt) o.threads = threads;

  try {
    if (!simd.empty()) {
      bool found = false;
      for (auto b : netclear::simd::available_backends())
        if (netclear::simd::backend_name(b) == simd) {
          netclear::simd::set_backend(b);
          found = true;
        }
      if (!found) throw netclear::ConfigError("--simd: backend '" + simd + "' is not available");
    }
    if (*run) return cmd_run(file, o);
    if (*validate) return cmd_validate(file, o);
    if (*oracle) return cmd_oracle(file, o);
  } catch (const netclear::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
