#pragma once

// Experiment driver behind the command-line tool. Everything writes tables to
// streams so tests can run the same code paths as the binary.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtmarkov/bounds.hpp"
#include "gtmarkov/chain.hpp"
#include "gtmarkov/chain_io.hpp"
#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/exact_bias.hpp"
#include "gtmarkov/oracles.hpp"
#include "gtmarkov/rate_fit.hpp"
#include "gtmarkov/simulate.hpp"
#include "gtmarkov/spectral_params.hpp"

namespace gtm {

inline constexpr std::uint64_t kDefaultSeed = 20240917ULL;

/// GTMARKOV_SEED if set and numeric, else kDefaultSeed.
inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("GTMARKOV_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 0);
    if (end != s && *end == '\0') return v;
  }
  return kDefaultSeed;
}

// ---------------------------------------------------------------------------
// Tables

/// Column-ordered rows of JSON scalars, written as CSV or as a JSON array of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) {
    require(row.size() == columns.size(), "table row width mismatch");
    rows.push_back(std::move(row));
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_number(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << "\n";
  }
}

/// NaN and infinity become null (JSON has no spelling for them).
inline nlohmann::json table_to_json(const Table& t) {
  auto arr = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& v = row[i];
      obj[t.columns[i]] = v.is_number_float() && !std::isfinite(v.get<double>()) ? nlohmann::json() : v;
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

/// null for NaN so CSV leaves the cell empty.
inline nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json() : nlohmann::json(v); }

// ---------------------------------------------------------------------------
// Configuration

enum class Subcommand { Params, ExactBias, Bounds, Simulate, ReproduceTable1, ReproduceFig1, PeriodicCheck, Validate };
enum class OutputFormat { Csv, Json };

inline std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Params: return "params";
    case Subcommand::ExactBias: return "exact-bias";
    case Subcommand::Bounds: return "bounds";
    case Subcommand::Simulate: return "simulate";
    case Subcommand::ReproduceTable1: return "reproduce-table1";
    case Subcommand::ReproduceFig1: return "reproduce-fig1";
    case Subcommand::PeriodicCheck: return "periodic-check";
    case Subcommand::Validate: return "validate";
  }
  return "?";
}

inline Subcommand parse_subcommand(const std::string& s) {
  for (auto c : {Subcommand::Params, Subcommand::ExactBias, Subcommand::Bounds, Subcommand::Simulate,
                 Subcommand::ReproduceTable1, Subcommand::ReproduceFig1, Subcommand::PeriodicCheck,
                 Subcommand::Validate})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown subcommand '" + s + "'");
}

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::Params;
  Family family = Family::P1;
  std::optional<std::size_t> K, K1;
  std::optional<double> kappa;
  std::optional<std::uint64_t> n;
  std::vector<std::uint64_t> n_grid;
  std::size_t r = 2;
  double eta = 0.1;
  std::uint64_t trials = 10000;
  std::uint64_t seed = default_seed();
  BoundConstants consts;
  bool c_given = false;
  std::optional<double> delta;
  std::string corollary = "both";  // 1, 2 or both
  bool per_state = false;
  std::string chain_file;
  std::string output;      // empty: stdout
  std::string fit_output;  // slope table for grid runs; empty: not written
  OutputFormat format = OutputFormat::Csv;
  unsigned threads = 1;
};

/// "a..b" doubles from a to b inclusive; otherwise a comma-separated list.
inline std::vector<std::uint64_t> parse_n_grid(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto parse_one = [&](const std::string& tok) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("n grid: cannot parse '" + tok + "'");
    }
    require(used == tok.size(), "n grid: cannot parse '" + tok + "'");
    return static_cast<std::uint64_t>(v);
  };
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_one(s.substr(0, dots)), hi = parse_one(s.substr(dots + 2));
    require(lo >= 1 && lo <= hi, "n grid: need 1 <= start <= end in '" + s + "'");
    for (std::uint64_t v = lo; v <= hi; v *= 2) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_one(tok));
  return out;
}

inline std::vector<std::uint64_t> doubling_grid(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> g;
  for (std::uint64_t v = lo; v <= hi; v *= 2) g.push_back(v);
  return g;
}

inline void validate_config(const ExperimentConfig& c) {
  c.consts.validate();
  for (std::size_t i = 1; i < c.n_grid.size(); ++i)
    require(c.n_grid[i] > c.n_grid[i - 1], "n grid must be strictly increasing");
  for (auto v : c.n_grid) require(v >= 1, "n grid entries must be positive");
  if (c.kappa) require(*c.kappa > 0.0 && *c.kappa <= 1.0, "kappa must lie in (0, 1]");
  if (c.n) require(*c.n >= 1, "n must be positive");
  require(c.r >= 2, "r must be at least 2");
  require(c.eta >= 0.0 && c.eta <= 1.0, "eta must lie in [0, 1]");
  require(c.trials >= 2, "trials must be at least 2");
  require(c.corollary == "1" || c.corollary == "2" || c.corollary == "both", "corollary must be 1, 2 or both");
  if (c.delta) require(*c.delta > 0.0, "delta must be positive");
  if (c.family == Family::File) require(!c.chain_file.empty(), "family 'file' needs --chain-file");
}

/// Keys mirror the long flag names with '-' replaced by '_' (n_grid, chain_file, ...).
inline void apply_config_json(ExperimentConfig& c, const nlohmann::json& j) {
  require(j.is_object(), "config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "subcommand") c.subcommand = parse_subcommand(v.get<std::string>());
      else if (k == "family") c.family = parse_family(v.get<std::string>());
      else if (k == "K") c.K = v.get<std::size_t>();
      else if (k == "K1") c.K1 = v.get<std::size_t>();
      else if (k == "kappa") c.kappa = v.get<double>();
      else if (k == "n") c.n = v.get<std::uint64_t>();
      else if (k == "n_grid") c.n_grid = v.is_string() ? parse_n_grid(v.get<std::string>()) : v.get<std::vector<std::uint64_t>>();
      else if (k == "r") c.r = v.get<std::size_t>();
      else if (k == "eta") c.eta = v.get<double>();
      else if (k == "trials") c.trials = v.get<std::uint64_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "c") { c.consts.c_exponent = v.get<double>(); c.c_given = true; }
      else if (k == "q") c.consts.q = v.get<double>();
      else if (k == "C") c.consts.C_naor = v.get<double>();
      else if (k == "c1") c.consts.c1 = v.get<double>();
      else if (k == "c2") c.consts.c2 = v.get<double>();
      else if (k == "delta") c.delta = v.get<double>();
      else if (k == "corollary") c.corollary = v.is_string() ? v.get<std::string>() : std::to_string(v.get<int>());
      else if (k == "per_state") c.per_state = v.get<bool>();
      else if (k == "chain_file") c.chain_file = v.get<std::string>();
      else if (k == "output") c.output = v.get<std::string>();
      else if (k == "fit_output") c.fit_output = v.get<std::string>();
      else if (k == "format") {
        const auto f = v.get<std::string>();
        require(f == "csv" || f == "json", "format must be csv or json");
        c.format = f == "csv" ? OutputFormat::Csv : OutputFormat::Json;
      } else if (k == "threads") c.threads = v.get<unsigned>();
      else throw InvalidArgument("unknown key");
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("config key '" + k + "': " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config key '" + k + "': " + e.what());
    }
  }
}

inline void load_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config file '" + path + "': " + e.what());
  }
  apply_config_json(c, j);
}

// ---------------------------------------------------------------------------
// Chain resolution

struct ResolvedChain {
  RowClassChain chain;
  std::size_t K = 0, K1 = 0;  // K1 = 0 when the family has none
};

inline ResolvedChain resolve_chain(const ExperimentConfig& c, std::uint64_t n) {
  const std::size_t K = c.K.value_or(static_cast<std::size_t>(n));
  switch (c.family) {
    case Family::Iid: return {build_iid(Distribution::uniform(K)), K, 0};
    case Family::Sticky: return {build_sticky(K, c.eta), K, 0};
    case Family::P1:
    case Family::P2:
    case Family::P3: {
      require(c.K1 || c.kappa, "family " + to_string(c.family) + " needs --K1 or --kappa");
      const std::size_t K1 = c.K1 ? *c.K1 : family_k1(K, *c.kappa);
      return {build_connected_family(c.family, K, K1), K, K1};
    }
    case Family::Periodic: return {build_periodic_kronecker(K, c.r), K, 0};
    case Family::Reducible: return {build_reducible_two_block(K), K, 0};
    case Family::File: {
      auto ch = load_chain(c.chain_file);
      const std::size_t k = ch.state_count();
      return {std::move(ch), k, 0};
    }
  }
  throw InvalidArgument("unhandled family");
}

inline std::vector<std::uint64_t> grid_of(const ExperimentConfig& c, std::vector<std::uint64_t> fallback = {}) {
  if (!c.n_grid.empty()) return c.n_grid;
  if (c.n) return {*c.n};
  if (!fallback.empty()) return fallback;
  throw InvalidArgument(to_string(c.subcommand) + " needs --n or --n-grid");
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns an exit status and fills `out` (and `fits` when a
// slope table applies); `log` gets human-readable notes.

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInapplicable = 2;

struct RunOutput {
  Table main;
  std::optional<Table> fits;
};

inline Table fit_table() { return Table{{"family", "kappa", "quantity", "slope", "intercept", "r2", "points"}, {}}; }

inline void add_fit(Table& t, const std::string& family, std::optional<double> kappa, const std::string& quantity,
                    const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3) return;
  const auto f = rate_fit(pts);
  t.add({family, kappa ? num(*kappa) : nlohmann::json(), quantity, f.slope, f.intercept, f.r2, f.points});
}

inline int run_params(const ExperimentConfig& c, RunOutput& o) {
  o.main.columns = {"family", "n", "K", "K1", "kind", "lambda2", "beta", "theta", "theta_bar", "lambda_pi",
                    "lambda_pi_bar"};
  std::vector<std::pair<double, double>> pb, pt, pl;
  for (auto n : grid_of(c)) {
    const auto rc = resolve_chain(c, n);
    const auto d = rank2_decompose(rc.chain);
    const auto p = spectral_params(rc.chain, d);
    o.main.add({to_string(c.family), n, rc.K, rc.K1 ? nlohmann::json(rc.K1) : nlohmann::json(), to_string(d.kind), d.lambda2, p.beta, p.theta, p.theta_bar(),
                p.lambda_pi, p.lambda_pi_bar()});
    const double N = static_cast<double>(n);
    if (p.beta > 1e-12) pb.emplace_back(N, p.beta);
    if (p.theta_bar() > 1e-12) pt.emplace_back(N, p.theta_bar());
    if (p.lambda_pi_bar() > 1e-12) pl.emplace_back(N, p.lambda_pi_bar());
  }
  if (o.main.rows.size() >= 3) {
    o.fits = fit_table();
    add_fit(*o.fits, to_string(c.family), c.kappa, "beta", pb);
    add_fit(*o.fits, to_string(c.family), c.kappa, "theta_bar", pt);
    add_fit(*o.fits, to_string(c.family), c.kappa, "lambda_pi_bar", pl);
  }
  return kExitOk;
}

inline int run_exact_bias(const ExperimentConfig& c, RunOutput& o) {
  if (c.per_state)
    o.main.columns = {"n", "x", "pi_x", "gamma_x", "p0", "p1", "contribution"};
  else
    o.main.columns = {"n", "K", "K1", "exact_bias"};
  for (auto n : grid_of(c)) {
    const auto rc = resolve_chain(c, n);
    const auto d = rank2_decompose(rc.chain);
    const auto rep = exact_bias(d, n);
    if (c.per_state) {
      for (const auto& s : rep.per_state) o.main.add({n, s.x, s.pi_x, s.gamma_x, s.p0, s.p1, s.contribution});
    } else {
      o.main.add({n, rc.K, rc.K1 ? nlohmann::json(rc.K1) : nlohmann::json(), rep.exact_bias});
    }
  }
  return kExitOk;
}

inline int run_bounds(const ExperimentConfig& c, RunOutput& o) {
  o.main.columns = {"bound", "n", "delta", "low_mass", "tail", "residual", "total", "exact", "applicable", "reason"};
  bool any_applicable = false;
  auto add = [&](std::uint64_t n, const BoundReport& r, double exact) {
    o.main.add({r.name, n, num(r.delta), num(r.low_mass_term), num(r.tail_term), num(r.residual_term), num(r.total),
                exact, r.applicable, r.reason});
    any_applicable = any_applicable || r.applicable;
  };
  for (auto n : grid_of(c)) {
    const auto rc = resolve_chain(c, n);
    const auto d = rank2_decompose(rc.chain);
    const auto p = spectral_params(rc.chain, d);
    const double exact = exact_bias(d, n).exact_bias;
    if (c.corollary != "2") add(n, corollary1_bound(d, p, n, c.consts), exact);
    if (c.corollary != "1") add(n, corollary2_bound(d, p, n, c.consts), exact);
    if (c.delta) add(n, theorem1_bound(d, p, n, *c.delta, exact_tail_function(d), c.consts), exact);
  }
  return any_applicable ? kExitOk : kExitInapplicable;
}

inline int run_simulate(const ExperimentConfig& c, RunOutput& o) {
  o.main.columns = {"n", "me", "abs_me", "mse", "stderr_me", "stderr_mse"};
  std::vector<std::pair<double, double>> me, mse;
  for (auto n : grid_of(c)) {
    const auto rc = resolve_chain(c, n);
    const auto pi = stationary_distribution(rc.chain, {.allow_reducible = c.family == Family::Reducible});
    const auto s = estimate_bias_mse(rc.chain, pi, n, c.trials, c.seed, c.threads);
    o.main.add({n, s.mean_error, std::abs(s.mean_error), s.mse, s.stderr_me, s.stderr_mse});
    if (s.mean_error != 0.0) me.emplace_back(static_cast<double>(n), std::abs(s.mean_error));
    if (s.mse > 0.0) mse.emplace_back(static_cast<double>(n), s.mse);
  }
  if (o.main.rows.size() >= 3) {
    o.fits = fit_table();
    add_fit(*o.fits, to_string(c.family), c.kappa, "abs_me", me);
    add_fit(*o.fits, to_string(c.family), c.kappa, "mse", mse);
  }
  return kExitOk;
}

/// Exponent table for the three connected families. The bound exponents listed in the
/// target column are the c -> 1/2 limits, so c defaults to 0.49 here.
inline int run_reproduce_table1(const ExperimentConfig& c, RunOutput& o) {
  const double kappa = c.kappa.value_or(0.875);
  const auto grid = grid_of(c, doubling_grid(256, 8192));
  std::vector<std::size_t> g(grid.begin(), grid.end());
  BoundConstants k = c.consts;
  if (!c.c_given) k.c_exponent = 0.49;
  o.main.columns = {"family", "kappa", "quantity", "slope", "target", "zero", "rows", "r2"};
  const double param_target = kappa - 1.0;
  const double cor1_target = -(2.0 * kappa - 1.5), cor2_target = -(3.0 * kappa - 2.0) / 2.0;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  auto fmt_fit = [&](const std::string& fam, const std::string& q, const std::optional<LogLogFit>& f, double target,
                     bool zero, std::size_t rows) {
    o.main.add({fam, kappa, q, f ? num(f->slope) : nlohmann::json(), num(target), zero, rows,
                f ? num(f->r2) : nlohmann::json()});
  };
  for (Family fam : {Family::P1, Family::P2, Family::P3}) {
    const auto name = to_string(fam);
    const auto pf = dominant_term_fit(fam, kappa, g);
    const bool p1 = fam == Family::P1, p2 = fam == Family::P2;
    fmt_fit(name, "beta", pf.beta.fit, param_target, pf.beta.zero, g.size());
    fmt_fit(name, "theta_bar", pf.theta_bar.fit, p1 ? param_target : nan, pf.theta_bar.zero, g.size());
    fmt_fit(name, "lambda_pi_bar", pf.lambda_pi_bar.fit, p2 ? nan : param_target, pf.lambda_pi_bar.zero, g.size());
    const auto bt = bound_rate_table(fam, kappa, g, k, c.threads);
    std::size_t a1 = 0, a2 = 0;
    for (const auto& row : bt.rows) {
      a1 += row.cor1.applicable;
      a2 += row.cor2.applicable;
    }
    fmt_fit(name, "cor1_dominant", bt.cor1_dominant_fit, p1 ? cor1_target : nan, false, g.size());
    fmt_fit(name, "cor2_dominant", bt.cor2_dominant_fit, p2 ? nan : cor2_target, false, g.size());
    fmt_fit(name, "cor1_total", bt.cor1_total_fit, p1 ? cor1_target : nan, false, a1);
    fmt_fit(name, "cor2_total", bt.cor2_total_fit, p2 ? nan : cor2_target, false, a2);
  }
  return kExitOk;
}

inline int run_reproduce_fig1(const ExperimentConfig& c, RunOutput& o, std::ostream& log) {
  const auto grid = grid_of(c, doubling_grid(64, 2048));
  const std::vector<double> kappas = c.kappa ? std::vector<double>{*c.kappa} : std::vector<double>{1.0, 0.25};
  o.main.columns = {"family", "kappa", "n", "K1", "me", "abs_me", "mse", "stderr_me", "stderr_mse", "exact_bias"};
  o.fits = fit_table();
  for (double kappa : kappas) {
    for (Family fam : {Family::P1, Family::P2, Family::P3}) {
      std::vector<std::pair<double, double>> me, mse;
      for (auto n : grid) {
        const std::size_t k1 = family_k1(n, kappa);
        const auto chain = build_connected_family(fam, n, k1);
        const auto d = rank2_decompose(chain);
        const auto s = estimate_bias_mse(chain, d.pi, n, c.trials, c.seed, c.threads);
        const double exact = exact_bias(d, n).exact_bias;
        o.main.add({to_string(fam), kappa, n, k1, s.mean_error, std::abs(s.mean_error), s.mse, s.stderr_me,
                    s.stderr_mse, exact});
        if (s.mean_error != 0.0) me.emplace_back(static_cast<double>(n), std::abs(s.mean_error));
        mse.emplace_back(static_cast<double>(n), s.mse);
      }
      add_fit(*o.fits, to_string(fam), kappa, "abs_me", me);
      add_fit(*o.fits, to_string(fam), kappa, "mse", mse);
      if (me.size() >= 3 && mse.size() >= 3)
        log << to_string(fam) << " kappa=" << kappa << ": |ME| slope " << rate_fit(me).slope << ", MSE slope "
            << rate_fit(mse).slope << "\n";
    }
  }
  return kExitOk;
}

inline int run_periodic_check(const ExperimentConfig& c, RunOutput& o) {
  o.main.columns = {"n", "r", "formula", "exact_counting", "exact_rank2", "mc_me", "mc_stderr", "trials"};
  for (auto n : grid_of(c)) {
    require(n % c.r == 0, "periodic-check needs r | n");
    const auto chain = build_periodic_kronecker(n, c.r);
    const double formula = exact_bias_periodic(static_cast<double>(n), static_cast<double>(c.r));
    const double counting = periodic_bias_exact(n, c.r, n);
    double rank2 = std::numeric_limits<double>::quiet_NaN();
    if (c.r == 2 && n >= 3) rank2 = exact_bias(rank2_decompose(chain), n).exact_bias;
    const auto pi = Distribution::uniform(n);
    const auto s = estimate_bias_mse(chain, pi, n, c.trials, c.seed, c.threads);
    o.main.add({n, c.r, formula, counting, num(rank2), s.mean_error, s.stderr_me, c.trials});
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Validation battery

struct CheckResult {
  std::string check;
  std::string subject;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct BatteryChain {
  std::string name;
  RowClassChain chain;
};

/// Small rank-2 chains for exhaustive checks.
inline std::vector<BatteryChain> small_battery() {
  std::vector<BatteryChain> b;
  b.push_back({"iid(4)", build_iid(Distribution::uniform(4))});
  b.push_back({"iid(3,skewed)", build_iid(Distribution({0.5, 0.3, 0.2}))});
  b.push_back({"p1(4,2)", build_p1(4, 2)});
  b.push_back({"p2(4,2)", build_p2(4, 2)});
  b.push_back({"p3(4,2)", build_p3(4, 2)});
  b.push_back({"p1(8,4)", build_p1(8, 4)});
  b.push_back({"p3(8,2)", build_p3(8, 2)});
  b.push_back({"periodic(4,2)", build_periodic_kronecker(4, 2)});
  b.push_back({"nondiag(3)", from_dense_rows({{1.0 / 3 + 0.1, 1.0 / 3 - 0.1, 1.0 / 3},
                                              {1.0 / 3 + 0.1, 1.0 / 3 - 0.1, 1.0 / 3},
                                              {1.0 / 3 - 0.2, 1.0 / 3 + 0.2, 1.0 / 3}},
                                             "nondiag")});
  return b;
}

inline std::vector<CheckResult> run_validation(const BoundConstants& consts = {}, bool quick = true) {
  std::vector<CheckResult> out;
  auto check = [&](std::string name, std::string subject, double value, double limit, bool pass) {
    out.push_back({std::move(name), std::move(subject), value, limit, pass});
  };

  for (const auto& bc : small_battery()) {
    const auto d = rank2_decompose(bc.chain);
    check("decomposition", bc.name, 0.0, 1e-9, true);  // rank2_decompose throws on reconstruction failure
    const std::uint64_t max_n = bc.chain.state_count() <= 4 ? 8 : 6;
    double worst = 0.0;
    for (std::uint64_t n = 3; n <= max_n; ++n)
      worst = std::fmax(worst, std::abs(exact_bias(d, n).exact_bias - brute_force_bias(bc.chain, d.pi, n)));
    check("exact_vs_enumeration", bc.name, worst, 1e-12, worst <= 1e-12);
    worst = 0.0;
    for (std::uint64_t n : {10, 50}) {
      for (const auto& g : d.groups) {
        const auto a = occupancy_tail(d, g.representative, n);
        const auto b = transfer_matrix_tail(bc.chain, d.pi, g.representative, n);
        worst = std::fmax(worst, std::fmax(std::abs(a.p0 - b.p0), std::abs(a.p1 - b.p1)));
      }
    }
    check("tail_vs_transfer_matrix", bc.name, worst, 1e-10, worst <= 1e-10);
  }

  // refusal paths
  {
    const auto red = build_reducible_two_block(4);
    const auto pi = stationary_distribution(red, {.allow_reducible = true});
    const auto d = rank2_decompose(red, pi, false);
    bool refused = false;
    try {
      exact_bias(d, 5);
    } catch (const ReducibleChain&) {
      refused = true;
    }
    check("reducible_refused", "reducible(4)", refused ? 1.0 : 0.0, 1.0, refused);
    bool not_rank2 = false;
    try {
      rank2_decompose(build_sticky(3, 0.1));
    } catch (const NotRank2&) {
      not_rank2 = true;
    }
    check("full_rank_refused", "sticky(3,0.1)", not_rank2 ? 1.0 : 0.0, 1.0, not_rank2);
  }

  // Claims and bound soundness on the family battery
  const std::vector<std::uint64_t> grid = quick ? std::vector<std::uint64_t>{256, 1024}
                                                : std::vector<std::uint64_t>{256, 512, 1024, 2048, 4096, 8192};
  for (Family fam : {Family::P1, Family::P3})
    for (double kappa : {0.75, 0.875, 1.0})
      for (auto n : grid) {
        const auto chain = build_connected_family(fam, n, family_k1(n, kappa));
        const auto d = rank2_decompose(chain);
        const auto p = spectral_params(chain, d);
        std::ostringstream name;
        name << to_string(fam) << "(kappa=" << kappa << ",n=" << n << ")";
        const double beta = p.beta;
        double min_margin = std::numeric_limits<double>::infinity(), claim2 = 0.0;
        for (const auto& g : d.groups) {
          if (g.pi > beta / 5.0) continue;
          const auto ps = per_state_spectral(d, g.representative);
          min_margin = std::fmin(min_margin, ps.delta_x - beta / 3.0);
          claim2 += static_cast<double>(g.count) * std::abs(d.lambda2 * g.v * g.u);
        }
        if (std::isfinite(min_margin)) check("claim1_delta_gap", name.str(), min_margin, -1e-12, min_margin >= -1e-12);
        check("claim2_weighted_sum", name.str(), claim2, 3.0 + 1e-12, claim2 <= 3.0 + 1e-12);
        const double ex = std::abs(exact_bias(d, n).exact_bias);
        for (const auto& r : {corollary1_bound(d, p, n, consts), corollary2_bound(d, p, n, consts)})
          if (r.applicable) check(r.name + "_soundness", name.str(), r.total, ex, r.total >= ex);
        const double lo = 1.0 / static_cast<double>(n), hi = beta / 5.0;
        if (hi > lo) {
          const auto tail = exact_tail_function(d);
          double worst = std::numeric_limits<double>::infinity();
          for (int i = 1; i <= 10; ++i) {
            const double delta = lo + (hi - lo) * i / 10.0;
            worst = std::fmin(worst, theorem1_bound(d, p, n, delta, tail, consts).total - ex);
          }
          check("theorem1_soundness", name.str(), worst, 0.0, worst >= 0.0);
        }
      }
  return out;
}

inline int run_validate(const ExperimentConfig& c, RunOutput& o) {
  o.main.columns = {"check", "subject", "value", "limit", "pass"};
  bool all = true;
  for (const auto& r : run_validation(c.consts)) {
    o.main.add({r.check, r.subject, r.value, r.limit, r.pass});
    all = all && r.pass;
  }
  return all ? kExitOk : kExitError;
}

// ---------------------------------------------------------------------------

inline void emit(const Table& t, OutputFormat f, std::ostream& os) {
  if (f == OutputFormat::Csv) write_csv(os, t);
  else os << table_to_json(t).dump(2) << "\n";
}

inline void emit_to(const Table& t, OutputFormat f, const std::string& path, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    emit(t, f, fallback);
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  emit(t, f, os);
  if (!os) throw Error("write to '" + path + "' failed");
}

/// Runs one subcommand and writes its tables. Exit 0 success, 2 when every bound was
/// inapplicable, 1 on failure (including failed validation checks).
inline int run(const ExperimentConfig& c, std::ostream& out = std::cout, std::ostream& log = std::cerr) {
  try {
    validate_config(c);
    RunOutput o;
    int status = kExitOk;
    switch (c.subcommand) {
      case Subcommand::Params: status = run_params(c, o); break;
      case Subcommand::ExactBias: status = run_exact_bias(c, o); break;
      case Subcommand::Bounds: status = run_bounds(c, o); break;
      case Subcommand::Simulate: status = run_simulate(c, o); break;
      case Subcommand::ReproduceTable1: status = run_reproduce_table1(c, o); break;
      case Subcommand::ReproduceFig1: status = run_reproduce_fig1(c, o, log); break;
      case Subcommand::PeriodicCheck: status = run_periodic_check(c, o); break;
      case Subcommand::Validate: status = run_validate(c, o); break;
    }
    emit_to(o.main, c.format, c.output, out);
    if (o.fits && !c.fit_output.empty()) emit_to(*o.fits, c.format, c.fit_output, out);
    if (status == kExitInapplicable) log << "note: no applicable bound for this configuration\n";
    return status;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace gtm
