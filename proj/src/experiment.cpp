#include "netclear/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "netclear/format.hpp"
#include "netclear/horizon.hpp"
#include "netclear/parallel.hpp"

namespace netclear {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string to_string(RunMode m) {
  switch (m) {
  case RunMode::zero_input:
    return "zero_input";
  case RunMode::fractional:
    return "fractional";
  case RunMode::discrete:
    return "discrete";
  case RunMode::horizon_lp:
    return "horizon_lp";
  }
  return "unknown";
}

RunMode parse_run_mode(const std::string& s) {
  if (s == "zero_input") return RunMode::zero_input;
  if (s == "fractional") return RunMode::fractional;
  if (s == "discrete") return RunMode::discrete;
  if (s == "horizon_lp") return RunMode::horizon_lp;
  throw ConfigError("mode: unknown mode '" + s +
                    "' (expected zero_input, fractional, discrete or horizon_lp)");
}

Vector ExperimentConfig::caps(std::size_t n) const {
  if (caps_scalar) return Vector(n, *caps_scalar);
  return caps_vector;
}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(join(path, key) + ": unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key) + ": missing required field");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path + ": must be finite");
  return d;
}

double as_nonnegative(const json& v, const std::string& path) {
  const double d = as_number(v, path);
  if (d < 0.0) throw ConfigError(path + ": must be >= 0");
  return d;
}

double as_probability(const json& v, const std::string& path) {
  const double d = as_number(v, path);
  if (d < 0.0 || d > 1.0) throw ConfigError(path + ": must be in [0, 1]");
  return d;
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw ConfigError(path + ": expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

Vector as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vector out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(as_number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<std::uint64_t> as_counts(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of counts");
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(as_count(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

ReplayFiles parse_replay_files(const json& obj, const std::string& path, const fs::path& base) {
  ReplayFiles f;
  f.internal = resolve(base, as_string(require(obj, path, "internal"), join(path, "internal")));
  f.external = resolve(base, as_string(require(obj, path, "external"), join(path, "external")));
  return f;
}

TransactionCounts parse_counts(const json& obj, const std::string& path) {
  check_keys(obj, path, {"internal", "external_out", "external_in"});
  TransactionCounts c;
  const json& rows = require(obj, path, "internal");
  if (!rows.is_array()) throw ConfigError(join(path, "internal") + ": expected a matrix");
  c.n = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = as_counts(rows[i], join(path, "internal") + "[" + std::to_string(i) + "]");
    if (row.size() != c.n)
      throw ConfigError(join(path, "internal") + "[" + std::to_string(i) + "]: expected " +
                        std::to_string(c.n) + " entries");
    c.internal.insert(c.internal.end(), row.begin(), row.end());
  }
  c.external_out = as_counts(require(obj, path, "external_out"), join(path, "external_out"));
  c.external_in = as_counts(require(obj, path, "external_in"), join(path, "external_in"));
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

EnvironmentConfig parse_environment(const json& obj, const fs::path& base) {
  const std::string path = "environment";
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  const std::string kind = as_string(require(obj, path, "kind"), join(path, "kind"));
  EnvironmentConfig env;
  if (kind == "replay") {
    check_keys(obj, path, {"kind", "internal", "external"});
    env.kind = EnvironmentKind::replay;
    env.replay = parse_replay_files(obj, path, base);
  } else if (kind == "sbm_core_periphery") {
    check_keys(obj, path,
               {"kind", "n_core", "n_periphery", "p_cc", "p_cp", "p_pc", "p_pp", "liability_rate",
                "asset_level", "b_floor"});
    env.kind = EnvironmentKind::sbm_core_periphery;
    SbmParams& p = env.sbm;
    p.n_core = as_count(require(obj, path, "n_core"), join(path, "n_core"));
    p.n_periphery = as_count(require(obj, path, "n_periphery"), join(path, "n_periphery"));
    p.p_cc = as_probability(require(obj, path, "p_cc"), join(path, "p_cc"));
    p.p_cp = as_probability(require(obj, path, "p_cp"), join(path, "p_cp"));
    p.p_pc = as_probability(require(obj, path, "p_pc"), join(path, "p_pc"));
    p.p_pp = as_probability(require(obj, path, "p_pp"), join(path, "p_pp"));
    if (const json* v = find(obj, "liability_rate"))
      p.liability_rate = as_number(*v, join(path, "liability_rate"));
    if (const json* v = find(obj, "asset_level"))
      p.asset_level = as_nonnegative(*v, join(path, "asset_level"));
    if (const json* v = find(obj, "b_floor")) p.b_floor = as_number(*v, join(path, "b_floor"));
    try {
      p.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(path + ": " + e.what());
    }
  } else if (kind == "gamma_transactions") {
    check_keys(obj, path, {"kind", "counts", "rounds"});
    env.kind = EnvironmentKind::gamma_transactions;
    const json* one = find(obj, "counts");
    const json* many = find(obj, "rounds");
    if ((one == nullptr) == (many == nullptr))
      throw ConfigError(path + ": give exactly one of 'counts' or 'rounds'");
    if (one) {
      env.gamma.rounds.push_back(parse_counts(*one, join(path, "counts")));
    } else {
      if (!many->is_array() || many->empty())
        throw ConfigError(join(path, "rounds") + ": expected a nonempty array");
      for (std::size_t k = 0; k < many->size(); ++k)
        env.gamma.rounds.push_back(
            parse_counts((*many)[k], join(path, "rounds") + "[" + std::to_string(k) + "]"));
    }
    try {
      env.gamma.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(path + ": " + e.what());
    }
  } else if (kind == "mixture") {
    check_keys(obj, path, {"kind", "components"});
    env.kind = EnvironmentKind::mixture;
    const json& comps = require(obj, path, "components");
    if (!comps.is_array() || comps.empty())
      throw ConfigError(join(path, "components") + ": expected a nonempty array");
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const std::string cp = join(path, "components") + "[" + std::to_string(k) + "]";
      check_keys(comps[k], cp, {"weight", "internal", "external"});
      const double w = as_nonnegative(require(comps[k], cp, "weight"), join(cp, "weight"));
      env.components.emplace_back(w, parse_replay_files(comps[k], cp, base));
    }
  } else {
    throw ConfigError(join(path, "kind") + ": unknown environment kind '" + kind +
                      "' (expected replay, sbm_core_periphery, gamma_transactions or mixture)");
  }
  return env;
}

FairnessConfig parse_fairness(const json& obj) {
  const std::string path = "fairness";
  check_keys(obj, path, {"kind", "g", "per_round", "q", "masked", "method", "paired"});
  FairnessConfig fc;
  try {
    fc.spec.kind = parse_gini_kind(as_string(require(obj, path, "kind"), join(path, "kind")));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(join(path, "kind") + ": " + e.what());
  }
  if (const json* v = find(obj, "g")) fc.spec.budget.g = as_number(*v, join(path, "g"));
  if (const json* v = find(obj, "per_round"))
    fc.spec.budget.per_round = as_vector(*v, join(path, "per_round"));
  if (const json* v = find(obj, "q")) fc.spec.q = as_vector(*v, join(path, "q"));
  if (const json* v = find(obj, "masked")) fc.spec.masked = as_bool(*v, join(path, "masked"));
  if (const json* v = find(obj, "method")) {
    const std::string m = as_string(*v, join(path, "method"));
    if (m == "automatic")
      fc.spec.method = FairnessMethod::automatic;
    else if (m == "explicit_slacks")
      fc.spec.method = FairnessMethod::explicit_slacks;
    else if (m == "cutting_planes")
      fc.spec.method = FairnessMethod::cutting_planes;
    else
      throw ConfigError(join(path, "method") +
                        ": expected automatic, explicit_slacks or cutting_planes");
  }
  if (const json* v = find(obj, "paired")) fc.paired = as_bool(*v, join(path, "paired"));
  try {
    fc.spec.budget.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(join(path, "g") + ": " + e.what());
  }
  if (fc.spec.kind == GiniKind::property && fc.spec.q.empty())
    throw ConfigError(join(path, "q") + ": property fairness needs a q value per node");
  return fc;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  check_keys(root, "",
             {"environment", "horizon", "budget", "caps", "mode", "samples", "accuracy", "retries",
              "recheck_ratio", "fairness", "seed", "threads", "output_dir", "write_trace"});
  ExperimentConfig cfg;
  cfg.environment = parse_environment(require(root, "", "environment"), base_dir);
  if (const json* v = find(root, "mode")) cfg.mode = parse_run_mode(as_string(*v, "mode"));
  if (const json* v = find(root, "horizon")) {
    const auto h = as_count(*v, "horizon");
    if (h < 1 || h > 100000) throw ConfigError("horizon: must be between 1 and 100000");
    cfg.horizon = static_cast<int>(h);
  }
  if (cfg.mode == RunMode::zero_input) {
    if (const json* v = find(root, "budget"); v && as_nonnegative(*v, "budget") != 0.0)
      throw ConfigError("budget: zero_input mode runs without interventions");
  } else {
    cfg.budget = as_nonnegative(require(root, "", "budget"), "budget");
  }
  if (const json* v = find(root, "caps")) {
    if (v->is_array()) {
      cfg.caps_vector = as_vector(*v, "caps");
      for (std::size_t k = 0; k < cfg.caps_vector.size(); ++k)
        if (cfg.caps_vector[k] < 0.0)
          throw ConfigError("caps[" + std::to_string(k) + "]: must be >= 0");
    } else {
      cfg.caps_scalar = as_nonnegative(*v, "caps");
    }
  } else {
    // without a per-node cap only the budget binds
    cfg.caps_scalar = cfg.budget;
  }
  if (const json* v = find(root, "samples")) {
    cfg.samples = as_count(*v, "samples");
    if (cfg.samples < 1) throw ConfigError("samples: must be >= 1");
  }
  if (const json* v = find(root, "accuracy")) {
    if (find(root, "samples"))
      throw ConfigError("accuracy: give either 'samples' or 'accuracy', not both");
    check_keys(*v, "accuracy", {"delta", "epsilon", "liability_mass"});
    AccuracyConfig acc;
    acc.delta = as_number(require(*v, "accuracy", "delta"), "accuracy.delta");
    acc.epsilon = as_number(require(*v, "accuracy", "epsilon"), "accuracy.epsilon");
    if (!(acc.delta > 0.0 && acc.delta < 1.0)) throw ConfigError("accuracy.delta: must be in (0, 1)");
    if (!(acc.epsilon > 0.0)) throw ConfigError("accuracy.epsilon: must be > 0");
    if (const json* m = find(*v, "liability_mass")) {
      acc.liability_mass = as_number(*m, "accuracy.liability_mass");
      if (!(*acc.liability_mass > 0.0)) throw ConfigError("accuracy.liability_mass: must be > 0");
    }
    cfg.accuracy = acc;
  }
  if (const json* v = find(root, "retries")) {
    if (cfg.mode != RunMode::discrete) throw ConfigError("retries: only valid in discrete mode");
    cfg.retries = as_count(*v, "retries");
    if (*cfg.retries < 1) throw ConfigError("retries: must be >= 1");
  }
  if (const json* v = find(root, "recheck_ratio")) {
    if (cfg.mode != RunMode::discrete)
      throw ConfigError("recheck_ratio: only valid in discrete mode");
    cfg.recheck_ratio = as_bool(*v, "recheck_ratio");
  }
  if (const json* v = find(root, "fairness")) {
    if (cfg.mode == RunMode::zero_input || cfg.mode == RunMode::horizon_lp)
      throw ConfigError("fairness: not supported in " + to_string(cfg.mode) + " mode");
    cfg.fairness = parse_fairness(*v);
    if (cfg.fairness->paired && cfg.mode != RunMode::fractional)
      throw ConfigError("fairness.paired: paired runs are only supported in fractional mode");
  }
  if (const json* v = find(root, "seed")) cfg.seed = as_count(*v, "seed");
  if (const json* v = find(root, "threads")) {
    cfg.threads = as_count(*v, "threads");
    if (cfg.threads < 1) throw ConfigError("threads: must be >= 1");
  }
  if (const json* v = find(root, "output_dir"))
    cfg.output_dir = resolve(base_dir, as_string(*v, "output_dir"));
  if (const json* v = find(root, "write_trace")) cfg.write_trace = as_bool(*v, "write_trace");
  return cfg;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

namespace {

SamplePath truncate(const SamplePath& path, int horizon, const std::string& what) {
  if (horizon > path.last_round())
    throw ConfigError("horizon: " + what + " covers only " + std::to_string(path.last_round()) +
                      " rounds, " + std::to_string(horizon) + " requested");
  std::vector<ShockRealization> shocks(path.begin(), path.begin() + horizon);
  return SamplePath(std::move(shocks));
}

SamplePath read_replay_checked(const ReplayFiles& f) {
  try {
    return read_replay_path(f.internal, f.external);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  }
}

} // namespace

EnvironmentModel build_environment(const ExperimentConfig& cfg) {
  const EnvironmentConfig& e = cfg.environment;
  switch (e.kind) {
  case EnvironmentKind::replay: {
    const SamplePath path = read_replay_checked(e.replay);
    return EnvironmentModel::replay(cfg.horizon ? truncate(path, *cfg.horizon, "replay") : path);
  }
  case EnvironmentKind::mixture: {
    std::vector<MixtureComponent> comps;
    for (const auto& [w, files] : e.components) {
      const SamplePath path = read_replay_checked(files);
      comps.push_back({w, cfg.horizon ? truncate(path, *cfg.horizon, "mixture component") : path});
    }
    try {
      return EnvironmentModel::mixture(std::move(comps));
    } catch (const InvalidInput& ex) {
      throw ConfigError(std::string("environment.components: ") + ex.what());
    }
  }
  case EnvironmentKind::sbm_core_periphery:
    if (!cfg.horizon) throw ConfigError("horizon: required for sbm_core_periphery");
    return EnvironmentModel::sbm(e.sbm, *cfg.horizon);
  case EnvironmentKind::gamma_transactions:
    if (!cfg.horizon) throw ConfigError("horizon: required for gamma_transactions");
    if (e.gamma.rounds.size() > 1 && e.gamma.rounds.size() < static_cast<std::size_t>(*cfg.horizon))
      throw ConfigError("environment.rounds: fewer count tables than rounds");
    return EnvironmentModel::gamma(e.gamma, *cfg.horizon);
  }
  throw ConfigError("environment.kind: unsupported");
}

void validate_config(const ExperimentConfig& cfg, const EnvironmentModel& env) {
  const std::size_t n = env.nodes();
  if (!cfg.caps_scalar && cfg.caps_vector.size() != n)
    throw ConfigError("caps: expected " + std::to_string(n) + " entries, got " +
                      std::to_string(cfg.caps_vector.size()));
  if (cfg.mode == RunMode::discrete) {
    const Vector caps = cfg.caps(n);
    for (std::size_t i = 0; i < n; ++i)
      if (caps[i] != std::floor(caps[i]))
        throw ConfigError("caps: discrete mode needs integer caps (node " + std::to_string(i) + ")");
  }
  if (cfg.fairness) {
    if (cfg.fairness->spec.kind == GiniKind::property && cfg.fairness->spec.q.size() != n)
      throw ConfigError("fairness.q: expected " + std::to_string(n) + " entries");
    if (!cfg.fairness->spec.budget.per_round.empty() &&
        cfg.fairness->spec.budget.per_round.size() < static_cast<std::size_t>(env.horizon()))
      throw ConfigError("fairness.per_round: expected " + std::to_string(env.horizon()) +
                        " entries");
  }
  resolve_samples(cfg, env);
}

std::size_t resolve_samples(const ExperimentConfig& cfg, const EnvironmentModel& env) {
  if (!cfg.accuracy) return cfg.samples;
  std::optional<double> mass = cfg.accuracy->liability_mass;
  if (!mass) mass = env.liability_mass_bound();
  if (!mass)
    throw ConfigError("accuracy.liability_mass: required for environments without a known bound");
  return required_samples(cfg.accuracy->delta, cfg.accuracy->epsilon, env.horizon(), *mass);
}

OlsFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("ordinary_least_squares: size mismatch");
  if (x.empty()) throw InvalidInput("ordinary_least_squares: no points");
  OlsFit fit;
  fit.points = x.size();
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  const double scale = std::max(1.0, std::max(std::abs(mx), std::abs(my)));
  const double eps = 1e-24 * scale * scale * m;
  if (sxx <= eps) {
    fit.degenerate = true;
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= eps) {
    fit.degenerate = true;
    fit.slope = 0.0;
    fit.intercept = my;
    return fit;
  }
  fit.r_squared = sxy * sxy / (sxx * syy);
  return fit;
}

ScatterSummary summarize_scatter(const std::vector<PathValue>& traces) {
  if (traces.empty() || traces.front().steps.empty())
    throw InvalidInput("summarize_scatter: no traces");
  const std::size_t n = traces.front().steps.front().clearing.size();
  ScatterSummary out;
  out.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.nodes[i].node = i;
  const double samples = static_cast<double>(traces.size());
  for (const PathValue& pv : traces) {
    const double rounds = static_cast<double>(pv.steps.size());
    for (const auto& step : pv.steps)
      for (std::size_t i = 0; i < n; ++i) {
        out.nodes[i].total_payments += step.clearing[i] / samples;
        out.nodes[i].total_interventions += step.intervention[i] / samples;
        if (!step.connectivity.empty())
          out.nodes[i].mean_beta += step.connectivity[i] / (samples * rounds);
      }
  }
  Vector pay(n), z(n), beta(n);
  for (std::size_t i = 0; i < n; ++i) {
    pay[i] = out.nodes[i].total_payments;
    z[i] = out.nodes[i].total_interventions;
    beta[i] = out.nodes[i].mean_beta;
  }
  out.interventions_on_payments = ordinary_least_squares(pay, z);
  out.interventions_on_beta = ordinary_least_squares(beta, z);
  return out;
}

namespace {

ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

ordered_json fit_json(const OlsFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"degenerate", f.degenerate},
          {"points", f.points}};
}

} // namespace

std::string SummaryReport::to_json() const {
  ordered_json j;
  j["mode"] = netclear::to_string(mode);
  j["seed"] = seed;
  j["samples"] = samples;
  j["horizon"] = horizon;
  j["nodes"] = nodes;
  j["budget"] = budget;
  j["value"] = {{"mean", value_mean}, {"std_error", value_stderr}};
  j["per_round_rewards"] = round_rewards;
  ordered_json per_node = ordered_json::array();
  for (const auto& s : scatter.nodes)
    per_node.push_back({{"node", s.node},
                        {"total_payments", s.total_payments},
                        {"total_interventions", s.total_interventions},
                        {"mean_beta", s.mean_beta}});
  j["per_node"] = per_node;
  j["scatter_fit"] = {{"interventions_on_payments", fit_json(scatter.interventions_on_payments)},
                      {"interventions_on_beta", fit_json(scatter.interventions_on_beta)}};
  j["gini"] = {{"kind", gini_kind}, {"g", round_g}, {"per_round", round_gini}, {"max", max_gini}};
  if (pof)
    j["price_of_fairness"] = {{"value_unconstrained", pof->value_unconstrained},
                              {"value_constrained", pof->value_constrained},
                              {"pof", number_or_null(pof->pof)},
                              {"infinite", std::isinf(pof->pof)}};
  if (discrete) {
    ordered_json b = {{"lower_bound", discrete->bound.lower_bound},
                      {"delta_b", discrete->delta_b},
                      {"liability_mass", discrete->liability_mass}};
    b["gamma_form"] = discrete->bound.gamma_form ? ordered_json(*discrete->bound.gamma_form)
                                                 : ordered_json(nullptr);
    j["discrete"] = {{"mean_relaxed", discrete->mean_relaxed},
                     {"mean_ratio", discrete->mean_ratio},
                     {"min_ratio", discrete->min_ratio},
                     {"max_beta", discrete->max_beta},
                     {"infeasible_reports", discrete->infeasible},
                     {"mean_attempts", discrete->mean_attempts},
                     {"approximation_bound", b}};
  }
  if (horizon_lp)
    j["horizon_lp"] = {{"certificate_valid", horizon_lp->certificate_valid},
                       {"max_violation", horizon_lp->max_violation},
                       {"primal", horizon_lp->primal},
                       {"dual", horizon_lp->dual},
                       {"sequential", horizon_lp->sequential},
                       {"max_abs_myopic_gap", horizon_lp->max_abs_myopic_gap},
                       {"max_abs_duality_gap", horizon_lp->max_abs_duality_gap}};
  j["files"] = files;
  return j.dump(2) + "\n";
}

namespace {

constexpr const char* kReadme = R"(# Result files

All numbers are written in shortest round-trip decimal form. Rounds `t` are
1-based, nodes are 0-based. Means are taken over the Monte-Carlo samples.

| file | columns | contents |
|------|---------|----------|
| `summary.json` | | value estimate, per-round and per-node aggregates, Gini, OLS fits, mode-specific blocks |
| `trace.csv` | `sample,t,node,P,p_tilde,z,reward` | one row per sample, round and node: total liabilities, clearing payment, intervention, round reward |
| `rewards.csv` | `t,mean_reward,std_error` | reward 1^T P~(t) per round |
| `interventions.csv` | `t,node,mean_z` | mean intervention per round and node |
| `gini.csv` | `t,kind,g,gc_realized` | fairness cap and mean realized Gini coefficient per round |
| `scatter.csv` | `node,total_payments,total_interventions,mean_beta,ols_slope,r_squared` | per-node totals; the last two columns repeat the fit of interventions on payments |
| `rounding.csv` | `sample,attempts,feasible,value_sol,value_rel,ratio,bound` | discrete mode only: one rounding per sample |
| `pof.csv` | `kind,g,value_unconstrained,value_constrained,pof` | paired fairness runs only |
)";

std::string csv_number(double v) { return format_double(v); }

struct RunData {
  std::vector<PathValue> paths;
  std::size_t samples = 0;
};

PathValue horizon_path_value(const SamplePath& path, const HorizonSolution& sol,
                             const ConstantProportionCertificate& cert) {
  const std::size_t n = path.nodes();
  PathValue pv;
  Vector carry(n, 0.0);
  Vector beta(n);
  for (std::size_t i = 0; i < n; ++i) beta[i] = cert.zeta.row_sum(i);
  const FairnessWeights weights = standard_weights(n);
  for (std::size_t k = 0; k < path.size(); ++k) {
    const ShockRealization& s = path[k];
    PolicyStepResult step;
    step.round = s.round();
    step.totals.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      step.totals[i] = s.external_liabilities()[i] + s.internal_liabilities().row_sum(i) + carry[i];
    step.clearing = sol.clearing[k];
    step.intervention = sol.intervention[k];
    step.reward = sum(step.clearing);
    step.connectivity = beta;
    step.max_beta = *std::max_element(beta.begin(), beta.end());
    step.gini = gini_coefficient(step.intervention, weights);
    for (std::size_t i = 0; i < n; ++i)
      carry[i] = std::max(0.0, step.totals[i] - step.clearing[i]);
    pv.value += step.reward;
    pv.steps.push_back(std::move(step));
  }
  return pv;
}

} // namespace

SummaryReport run_experiment(const ExperimentConfig& cfg) {
  const EnvironmentModel env = build_environment(cfg);
  validate_config(cfg, env);
  const std::size_t n = env.nodes();
  const int T = env.horizon();
  const std::size_t N = resolve_samples(cfg, env);

  InterventionPolicy policy;
  policy.budget = cfg.mode == RunMode::zero_input ? 0.0 : cfg.budget;
  policy.caps = cfg.caps(n);
  if (cfg.fairness) policy.fairness = cfg.fairness->spec;
  const InitialCondition start = InitialCondition::empty(n);
  AggregateOptions agg;
  agg.samples = N;
  agg.seed = cfg.seed;
  agg.threads = cfg.threads;
  agg.keep_paths = true;

  SummaryReport rep;
  rep.mode = cfg.mode;
  rep.seed = cfg.seed;
  rep.samples = N;
  rep.horizon = T;
  rep.nodes = n;
  rep.budget = policy.budget;
  rep.output_dir = cfg.output_dir;
  if (cfg.fairness) rep.gini_kind = to_string(cfg.fairness->spec.kind);

  std::vector<PathValue> paths;
  std::vector<RoundingReport> rounding;
  switch (cfg.mode) {
  case RunMode::zero_input: {
    paths.resize(N);
    parallel_for(N, cfg.threads, [&](std::size_t i) {
      Rng rng = substream(cfg.seed, i, Stream::environment);
      const SamplePath path = sample_path(env, 1, T, rng);
      paths[i] = simulate_interventions(start, path, std::vector<Vector>(path.size(), Vector(n, 0.0)));
    });
    break;
  }
  case RunMode::fractional: {
    ValueEstimate est = aggregate_value(env, start, policy, agg);
    paths = std::move(est.paths);
    if (cfg.fairness && cfg.fairness->paired) {
      InterventionPolicy open = policy;
      open.fairness.reset();
      AggregateOptions lean = agg;
      lean.keep_paths = false;
      const ValueEstimate base = aggregate_value(env, start, open, lean);
      PofSummary pof;
      pof.value_unconstrained = base.mean;
      pof.value_constrained = est.mean;
      pof.pof = price_of_fairness(base.mean, est.mean);
      rep.pof = pof;
    }
    break;
  }
  case RunMode::discrete: {
    RoundingOptions ropts;
    ropts.tau = cfg.retries.value_or(kDefaultRetries);
    ropts.recheck_ratio = cfg.recheck_ratio;
    ropts.gini_weights = cfg.fairness ? &cfg.fairness->spec : nullptr;
    DiscreteEstimate est = aggregate_discrete(env, start, policy, agg, ropts);
    DiscreteSummary ds;
    ds.mean_relaxed = est.mean_relaxed;
    double ratio_sum = 0.0, attempts = 0.0;
    ds.min_ratio = std::numeric_limits<double>::infinity();
    for (auto& r : est.reports) {
      ratio_sum += r.ratio;
      attempts += static_cast<double>(r.attempts);
      ds.min_ratio = std::min(ds.min_ratio, r.ratio);
      ds.max_beta = std::max(ds.max_beta, r.max_beta);
      if (!r.feasible) ++ds.infeasible;
      paths.push_back(r.realized);
    }
    ds.mean_ratio = ratio_sum / static_cast<double>(N);
    ds.mean_attempts = attempts / static_cast<double>(N);
    std::optional<double> delta_b = env.min_external_liability();
    std::optional<double> mass = env.liability_mass_bound();
    if (!delta_b || !mass) {
      // empirical sup/inf over the sampled paths
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        Rng rng = substream(cfg.seed, i, Stream::environment);
        const SamplePath path = sample_path(env, 1, T, rng);
        lo = std::min(lo, path.min_external_liability());
        hi = std::max(hi, path.max_liability_mass());
      }
      delta_b = lo;
      mass = hi;
    }
    ds.delta_b = *delta_b;
    ds.liability_mass = *mass;
    ds.bound = approximation_bound({*delta_b, *mass, T}, policy.budget, ds.max_beta);
    rep.discrete = ds;
    rounding = std::move(est.reports);
    break;
  }
  case RunMode::horizon_lp: {
    paths.resize(N);
    std::vector<HorizonSummary> per(N);
    parallel_for(N, cfg.threads, [&](std::size_t i) {
      Rng rng = substream(cfg.seed, i, Stream::environment);
      const SamplePath path = sample_path(env, 1, T, rng);
      const auto cert = check_constant_proportions(path);
      if (!cert.valid)
        throw CertificateError("sample " + std::to_string(i) +
                               ": liability proportions change over time (max deviation " +
                               format_double(cert.max_violation) +
                               "); the horizon LP does not apply");
      const HorizonSolution primal = solve_horizon_primal(path, policy.budget, policy.caps, cert);
      const HorizonDual dual = solve_horizon_dual(path, policy.budget, policy.caps, cert);
      const double seq = value_given_sample_path(start, path, policy).value;
      per[i] = {true, cert.max_violation, primal.value, dual.value, seq,
                std::abs(seq - primal.value), std::abs(primal.value - dual.value)};
      paths[i] = horizon_path_value(path, primal, cert);
    });
    HorizonSummary hs;
    for (const auto& h : per) {
      hs.max_violation = std::max(hs.max_violation, h.max_violation);
      hs.primal += h.primal / static_cast<double>(N);
      hs.dual += h.dual / static_cast<double>(N);
      hs.sequential += h.sequential / static_cast<double>(N);
      hs.max_abs_myopic_gap = std::max(hs.max_abs_myopic_gap, h.max_abs_myopic_gap);
      hs.max_abs_duality_gap = std::max(hs.max_abs_duality_gap, h.max_abs_duality_gap);
    }
    rep.horizon_lp = hs;
    break;
  }
  }

  // aggregates, all accumulated in sample order
  Vector values(N);
  for (std::size_t i = 0; i < N; ++i) values[i] = paths[i].value;
  std::tie(rep.value_mean, rep.value_stderr) = mean_and_stderr(values);
  const std::size_t rounds = static_cast<std::size_t>(T);
  rep.round_rewards.assign(rounds, 0.0);
  rep.round_gini.assign(rounds, 0.0);
  rep.round_g.assign(rounds, 1.0);
  Vector round_stderr(rounds, 0.0);
  std::vector<Vector> mean_z(rounds, Vector(n, 0.0));
  for (std::size_t t = 0; t < rounds; ++t) {
    if (cfg.fairness) rep.round_g[t] = cfg.fairness->spec.budget.at(static_cast<int>(t) + 1);
    Vector r(N);
    for (std::size_t i = 0; i < N; ++i) {
      const auto& step = paths[i].steps[t];
      r[i] = step.reward;
      rep.round_gini[t] += step.gini / static_cast<double>(N);
      rep.max_gini = std::max(rep.max_gini, step.gini);
      for (std::size_t k = 0; k < n; ++k) mean_z[t][k] += step.intervention[k] / static_cast<double>(N);
    }
    std::tie(rep.round_rewards[t], round_stderr[t]) = mean_and_stderr(r);
  }
  rep.scatter = summarize_scatter(paths);

  // files, written one after another
  const fs::path& dir = cfg.output_dir;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_file_atomic(dir / name, body);
    rep.files.push_back(name);
  };
  if (cfg.write_trace) {
    std::string s = "sample,t,node,P,p_tilde,z,reward\n";
    for (std::size_t i = 0; i < N; ++i)
      for (const auto& step : paths[i].steps)
        for (std::size_t k = 0; k < n; ++k)
          s += std::to_string(i) + "," + std::to_string(step.round) + "," + std::to_string(k) +
               "," + csv_number(step.totals[k]) + "," + csv_number(step.clearing[k]) + "," +
               csv_number(step.intervention[k]) + "," + csv_number(step.reward) + "\n";
    emit("trace.csv", s);
  }
  {
    std::string s = "t,mean_reward,std_error\n";
    for (std::size_t t = 0; t < rounds; ++t)
      s += std::to_string(t + 1) + "," + csv_number(rep.round_rewards[t]) + "," +
           csv_number(round_stderr[t]) + "\n";
    emit("rewards.csv", s);
  }
  {
    std::string s = "t,node,mean_z\n";
    for (std::size_t t = 0; t < rounds; ++t)
      for (std::size_t k = 0; k < n; ++k)
        s += std::to_string(t + 1) + "," + std::to_string(k) + "," + csv_number(mean_z[t][k]) + "\n";
    emit("interventions.csv", s);
  }
  {
    std::string s = "t,kind,g,gc_realized\n";
    for (std::size_t t = 0; t < rounds; ++t)
      s += std::to_string(t + 1) + "," + rep.gini_kind + "," + csv_number(rep.round_g[t]) + "," +
           csv_number(rep.round_gini[t]) + "\n";
    emit("gini.csv", s);
  }
  {
    std::string s = "node,total_payments,total_interventions,mean_beta,ols_slope,r_squared\n";
    const OlsFit& fit = rep.scatter.interventions_on_payments;
    for (const auto& node : rep.scatter.nodes)
      s += std::to_string(node.node) + "," + csv_number(node.total_payments) + "," +
           csv_number(node.total_interventions) + "," + csv_number(node.mean_beta) + "," +
           csv_number(fit.slope) + "," + csv_number(fit.r_squared) + "\n";
    emit("scatter.csv", s);
  }
  if (!rounding.empty()) {
    std::string s = "sample,attempts,feasible,value_sol,value_rel,ratio,bound\n";
    for (std::size_t i = 0; i < rounding.size(); ++i) {
      const auto& r = rounding[i];
      s += std::to_string(i) + "," + std::to_string(r.attempts) + "," + (r.feasible ? "1" : "0") +
           "," + csv_number(r.value_sol) + "," + csv_number(r.value_rel) + "," +
           csv_number(r.ratio) + "," + csv_number(r.bound) + "\n";
    }
    emit("rounding.csv", s);
  }
  if (rep.pof) {
    std::string s = "kind,g,value_unconstrained,value_constrained,pof\n";
    s += rep.gini_kind + "," + csv_number(cfg.fairness->spec.budget.g) + "," +
         csv_number(rep.pof->value_unconstrained) + "," + csv_number(rep.pof->value_constrained) +
         "," + csv_number(rep.pof->pof) + "\n";
    emit("pof.csv", s);
  }
  emit("README.md", kReadme);
  rep.files.push_back("summary.json");
  write_file_atomic(dir / "summary.json", rep.to_json());
  return rep;
}

} // namespace netclear
