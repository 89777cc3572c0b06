#include "netclear/environment.hpp"

#include <charconv>
#include <limits>
#include <tuple>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "netclear/error.hpp"
#include "netclear/format.hpp"

namespace netclear {

std::string to_string(EnvironmentKind k) {
  switch (k) {
  case EnvironmentKind::sbm_core_periphery:
    return "sbm_core_periphery";
  case EnvironmentKind::gamma_transactions:
    return "gamma_transactions";
  case EnvironmentKind::replay:
    return "replay";
  case EnvironmentKind::mixture:
    return "mixture";
  }
  return "unknown";
}

double SbmParams::edge_probability(std::size_t i, std::size_t j) const noexcept {
  const bool ci = i < n_core;
  const bool cj = j < n_core;
  if (ci && cj) return p_cc;
  if (ci) return p_cp;
  if (cj) return p_pc;
  return p_pp;
}

void SbmParams::validate() const {
  for (double p : {p_cc, p_cp, p_pc, p_pp})
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("sbm: block probabilities must lie in [0, 1]");
  if (!(liability_rate > 0.0)) throw InvalidInput("sbm: liability rate must be positive");
  if (!(asset_level >= 0.0)) throw InvalidInput("sbm: asset level must be >= 0");
  if (!(b_floor > 0.0)) throw InvalidInput("sbm: external liability floor must be positive");
  if (nodes() == 0) throw InvalidInput("sbm: network needs at least one node");
}

void TransactionCounts::validate() const {
  if (n == 0) throw InvalidInput("gamma: network needs at least one node");
  if (internal.size() != n * n || external_out.size() != n || external_in.size() != n)
    throw InvalidInput("gamma: count tables have inconsistent sizes");
  for (std::size_t i = 0; i < n; ++i)
    if (internal[i * n + i] != 0) throw InvalidInput("gamma: self transactions are not allowed");
}

const TransactionCounts& GammaParams::for_round(int round) const {
  if (rounds.size() == 1) return rounds.front();
  if (round < 1 || static_cast<std::size_t>(round) > rounds.size())
    throw InvalidInput("gamma: no transaction counts for round " + std::to_string(round));
  return rounds[static_cast<std::size_t>(round) - 1];
}

void GammaParams::validate() const {
  if (rounds.empty()) throw InvalidInput("gamma: no transaction counts given");
  for (const auto& r : rounds) {
    r.validate();
    if (r.n != rounds.front().n) throw InvalidInput("gamma: node count changes across rounds");
  }
}

EnvironmentModel EnvironmentModel::sbm(SbmParams params, int horizon) {
  params.validate();
  if (horizon < 1) throw InvalidInput("environment horizon must be >= 1");
  EnvironmentModel m;
  m.kind_ = EnvironmentKind::sbm_core_periphery;
  m.nodes_ = params.nodes();
  m.horizon_ = horizon;
  m.params_ = params;
  return m;
}

EnvironmentModel EnvironmentModel::gamma(GammaParams params, int horizon) {
  params.validate();
  if (horizon < 1) throw InvalidInput("environment horizon must be >= 1");
  if (params.rounds.size() != 1 && params.rounds.size() < static_cast<std::size_t>(horizon))
    throw InvalidInput("gamma: fewer count tables than rounds");
  EnvironmentModel m;
  m.kind_ = EnvironmentKind::gamma_transactions;
  m.nodes_ = params.nodes();
  m.horizon_ = horizon;
  m.params_ = std::move(params);
  return m;
}

EnvironmentModel EnvironmentModel::replay(SamplePath path) {
  if (path.empty()) throw InvalidInput("replay: empty path");
  if (path.first_round() != 1) throw InvalidInput("replay: stored path must start at round 1");
  EnvironmentModel m;
  m.kind_ = EnvironmentKind::replay;
  m.nodes_ = path.nodes();
  m.horizon_ = path.last_round();
  m.params_ = std::move(path);
  return m;
}

EnvironmentModel EnvironmentModel::mixture(std::vector<MixtureComponent> components) {
  if (components.empty()) throw InvalidInput("mixture: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw InvalidInput("mixture: weights must be >= 0");
    if (c.path.empty() || c.path.first_round() != 1)
      throw InvalidInput("mixture: component paths must start at round 1");
    if (c.path.nodes() != components.front().path.nodes() ||
        c.path.size() != components.front().path.size())
      throw InvalidInput("mixture: components must share node count and horizon");
    total += c.weight;
  }
  if (!(total > 0.0)) throw InvalidInput("mixture: weights sum to zero");
  EnvironmentModel m;
  m.kind_ = EnvironmentKind::mixture;
  m.nodes_ = components.front().path.nodes();
  m.horizon_ = components.front().path.last_round();
  m.params_ = std::move(components);
  return m;
}

std::optional<double> EnvironmentModel::liability_mass_bound() const {
  switch (kind_) {
  case EnvironmentKind::replay:
    return replay_path().max_liability_mass();
  case EnvironmentKind::mixture: {
    double m = 0.0;
    for (const auto& c : components())
      if (c.weight > 0.0) m = std::max(m, c.path.max_liability_mass());
    return m;
  }
  default:
    return std::nullopt;
  }
}

std::optional<double> EnvironmentModel::min_external_liability() const {
  switch (kind_) {
  case EnvironmentKind::replay:
    return replay_path().min_external_liability();
  case EnvironmentKind::mixture: {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : components())
      if (c.weight > 0.0) m = std::min(m, c.path.min_external_liability());
    return m;
  }
  default:
    return std::nullopt;
  }
}

namespace {

SamplePath slice(const SamplePath& path, int from_round, int to_round) {
  if (from_round < path.first_round() || to_round > path.last_round())
    throw InvalidInput("replay covers rounds " + std::to_string(path.first_round()) + ".." +
                       std::to_string(path.last_round()) + ", requested " +
                       std::to_string(from_round) + ".." + std::to_string(to_round));
  std::vector<ShockRealization> out;
  for (int t = from_round; t <= to_round; ++t)
    out.push_back(path[static_cast<std::size_t>(t - path.first_round())]);
  return SamplePath(std::move(out));
}

double gamma_draw(std::uint64_t shape, Rng& rng) {
  if (shape == 0) return 0.0;
  std::gamma_distribution<double> dist(static_cast<double>(shape), 1.0);
  return dist(rng);
}

} // namespace

ShockRealization sample_sbm_round(const SbmParams& params, int round, Rng& rng) {
  const std::size_t n = params.nodes();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(params.liability_rate);
  Matrix l = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      // draw the coin for every pair so the stream layout does not depend on p
      const bool present = unif(rng) < params.edge_probability(i, j);
      if (present) l(i, j) = expo(rng);
    }
  Vector b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = std::max(expo(rng), params.b_floor);
  Vector c(n, params.asset_level);
  return ShockRealization(round, std::move(b), std::move(c), std::move(l), params.b_floor);
}

ShockRealization sample_gamma_round(const TransactionCounts& counts, int round, Rng& rng) {
  counts.validate();
  const std::size_t n = counts.n;
  Matrix l = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) l(i, j) = gamma_draw(counts.at(i, j), rng);
  Vector b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t out = std::max<std::uint64_t>(1, counts.external_out[i]);
    b[i] = std::max(1.0, gamma_draw(out, rng));
    c[i] = gamma_draw(counts.external_in[i], rng);
  }
  return ShockRealization(round, std::move(b), std::move(c), std::move(l));
}

SamplePath sample_path(const EnvironmentModel& model, int from_round, int to_round, Rng& rng) {
  if (from_round < 1 || to_round < from_round || to_round > model.horizon())
    throw InvalidInput("sample_path: rounds " + std::to_string(from_round) + ".." +
                       std::to_string(to_round) + " outside horizon 1.." +
                       std::to_string(model.horizon()));
  switch (model.kind()) {
  case EnvironmentKind::replay:
    return slice(model.replay_path(), from_round, to_round);
  case EnvironmentKind::mixture: {
    const auto& comps = model.components();
    std::vector<double> w;
    for (const auto& c : comps) w.push_back(c.weight);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return slice(comps[pick(rng)].path, from_round, to_round);
  }
  case EnvironmentKind::sbm_core_periphery: {
    std::vector<ShockRealization> out;
    for (int t = from_round; t <= to_round; ++t)
      out.push_back(sample_sbm_round(model.sbm_params(), t, rng));
    return SamplePath(std::move(out));
  }
  case EnvironmentKind::gamma_transactions: {
    std::vector<ShockRealization> out;
    for (int t = from_round; t <= to_round; ++t)
      out.push_back(sample_gamma_round(model.gamma_params().for_round(t), t, rng));
    return SamplePath(std::move(out));
  }
  }
  throw InvalidInput("sample_path: unknown environment kind");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, std::size_t line,
                             const std::string& what) {
  throw InvalidInput(file.string() + ":" + std::to_string(line) + ": " + what);
}

long parse_index(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0)
    parse_fail(file, line, "expected a nonnegative integer, got '" + s + "'");
  return v;
}

double parse_amount(const std::string& s, const std::filesystem::path& file, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    parse_fail(file, line, "expected a number, got '" + s + "'");
  return v;
}

struct CsvRows {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvRows read_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
                 bool allow_empty = false) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open " + file.string());
  CsvRows out;
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (!seen_header) {
      if (cells != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        parse_fail(file, lineno, "expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size())
      parse_fail(file, lineno,
                 "expected " + std::to_string(header.size()) + " columns, got " +
                     std::to_string(cells.size()));
    out.rows.emplace_back(lineno, std::move(cells));
  }
  if (!seen_header && !(allow_empty && lineno == 0)) parse_fail(file, lineno, "missing header row");
  return out;
}

} // namespace

SamplePath read_replay_path(const std::filesystem::path& internal_csv,
                            const std::filesystem::path& external_csv) {
  const CsvRows ext = read_csv(external_csv, {"t", "i", "b", "c"});
  const CsvRows internal = read_csv(internal_csv, {"t", "i", "j", "amount"}, true);

  struct Ext {
    double b;
    double c;
    std::size_t line;
  };
  std::map<std::pair<long, long>, Ext> ext_rows;
  std::map<std::tuple<long, long, long>, double> int_rows;
  long horizon = 0;
  long max_node = -1;

  for (const auto& [line, cells] : ext.rows) {
    const long t = parse_index(cells[0], external_csv, line);
    const long i = parse_index(cells[1], external_csv, line);
    const double b = parse_amount(cells[2], external_csv, line);
    const double c = parse_amount(cells[3], external_csv, line);
    if (t < 1) parse_fail(external_csv, line, "rounds are 1-based");
    if (!(b > 0.0)) parse_fail(external_csv, line, "external liability b must be positive");
    if (c < 0.0) parse_fail(external_csv, line, "external assets c must be >= 0");
    if (!ext_rows.emplace(std::pair{t, i}, Ext{b, c, line}).second)
      parse_fail(external_csv, line, "duplicate row for this (t, i)");
    horizon = std::max(horizon, t);
    max_node = std::max(max_node, i);
  }
  for (const auto& [line, cells] : internal.rows) {
    const long t = parse_index(cells[0], internal_csv, line);
    const long i = parse_index(cells[1], internal_csv, line);
    const long j = parse_index(cells[2], internal_csv, line);
    const double amount = parse_amount(cells[3], internal_csv, line);
    if (t < 1) parse_fail(internal_csv, line, "rounds are 1-based");
    if (i == j) parse_fail(internal_csv, line, "self liabilities are not allowed");
    if (amount < 0.0) parse_fail(internal_csv, line, "liability amounts must be >= 0");
    if (!int_rows.emplace(std::tuple{t, i, j}, amount).second)
      parse_fail(internal_csv, line, "duplicate row for this (t, i, j)");
    if (t > horizon && !ext.rows.empty())
      parse_fail(internal_csv, line, "round beyond the rounds of the external file");
    max_node = std::max({max_node, i, j});
  }
  if (horizon == 0) throw InvalidInput(external_csv.string() + ": no rounds defined");

  const auto n = static_cast<std::size_t>(max_node + 1);
  std::vector<ShockRealization> shocks;
  for (long t = 1; t <= horizon; ++t) {
    Vector b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto it = ext_rows.find({t, static_cast<long>(i)});
      if (it == ext_rows.end())
        throw InvalidInput(external_csv.string() + ": missing row for t=" + std::to_string(t) +
                           ", i=" + std::to_string(i) + " (b must be positive)");
      b[i] = it->second.b;
      c[i] = it->second.c;
    }
    Matrix l = Matrix::square(n);
    for (const auto& [key, amount] : int_rows)
      if (std::get<0>(key) == t)
        l(static_cast<std::size_t>(std::get<1>(key)), static_cast<std::size_t>(std::get<2>(key))) =
            amount;
    shocks.emplace_back(static_cast<int>(t), std::move(b), std::move(c), std::move(l),
                        std::numeric_limits<double>::min());
  }
  return SamplePath(std::move(shocks));
}

EnvironmentModel load_replay(const std::filesystem::path& internal_csv,
                             const std::filesystem::path& external_csv) {
  return EnvironmentModel::replay(read_replay_path(internal_csv, external_csv));
}

void write_replay(const SamplePath& path, const std::filesystem::path& internal_csv,
                  const std::filesystem::path& external_csv) {
  std::ostringstream li, le;
  li << "t,i,j,amount\n";
  le << "t,i,b,c\n";
  for (const auto& s : path) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
      le << s.round() << ',' << i << ',' << format_double(s.external_liabilities()[i]) << ','
         << format_double(s.external_assets()[i]) << '\n';
      for (std::size_t j = 0; j < n; ++j)
        if (s.internal_liabilities()(i, j) != 0.0)
          li << s.round() << ',' << i << ',' << j << ','
             << format_double(s.internal_liabilities()(i, j)) << '\n';
    }
  }
  write_file_atomic(internal_csv, li.str());
  write_file_atomic(external_csv, le.str());
}

} // namespace netclear
