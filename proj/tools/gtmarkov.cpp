// Command-line front end. Flags map one-to-one onto ExperimentConfig; a JSON
// config file (--config) is applied first and explicit flags override it.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gtmarkov/experiment.hpp"

namespace {

struct Flags {
  std::optional<std::string> config, family, n_grid, corollary, chain_file, output, fit_output, format;
  std::optional<std::size_t> K, K1, r;
  std::optional<double> kappa, eta, c, q, C, c1, c2, delta;
  std::optional<std::uint64_t> n, trials, seed;
  std::optional<unsigned> threads;
  bool per_state = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON file with the same keys as the flags");
  sub->add_option("--family", f.family, "iid, sticky, p1, p2, p3, periodic, reducible, file");
  sub->add_option("--K", f.K, "number of states (default: n)");
  sub->add_option("--K1", f.K1, "connecting block size for p1/p2/p3");
  sub->add_option("--kappa", f.kappa, "K1 ~ n^kappa with K = n");
  sub->add_option("--n", f.n, "sample length");
  sub->add_option("--n-grid", f.n_grid, "list a,b,c or doubling range a..b");
  sub->add_option("--r", f.r, "period of the periodic chain");
  sub->add_option("--eta", f.eta, "stay probability of the sticky chain");
  sub->add_option("--trials", f.trials, "Monte Carlo trials");
  sub->add_option("--seed", f.seed, "64-bit seed (default from GTMARKOV_SEED)");
  sub->add_option("--c", f.c, "exponent c in (0, 0.5) for the TV-gap bound");
  sub->add_option("--q", f.q, "moment order for the L2(pi) tail (default 3 ln n)");
  sub->add_option("--C", f.C, "constant of the moment tail bound");
  sub->add_option("--c1", f.c1, "low-mass constant c1");
  sub->add_option("--c2", f.c2, "low-mass constant c2");
  sub->add_option("--delta", f.delta, "also evaluate the general bound at this delta with exact tails");
  sub->add_option("--corollary", f.corollary, "1, 2 or both");
  sub->add_flag("--per-state", f.per_state, "per-state rows for exact-bias");
  sub->add_option("--chain-file", f.chain_file, "chain JSON or dense CSV for --family file");
  sub->add_option("-o,--output", f.output, "output path (default stdout)");
  sub->add_option("--fit-output", f.fit_output, "path for the fitted log-log slopes");
  sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", f.threads, "worker threads, 0 = all cores");
}

void apply(const Flags& f, gtm::ExperimentConfig& c) {
  using gtm::parse_family;
  if (f.family) c.family = parse_family(*f.family);
  if (f.K) c.K = f.K;
  if (f.K1) c.K1 = f.K1;
  if (f.kappa) c.kappa = f.kappa;
  if (f.n) c.n = f.n;
  if (f.n_grid) c.n_grid = gtm::parse_n_grid(*f.n_grid);
  if (f.r) c.r = *f.r;
  if (f.eta) c.eta = *f.eta;
  if (f.trials) c.trials = *f.trials;
  if (f.seed) c.seed = *f.seed;
  if (f.c) {
    c.consts.c_exponent = *f.c;
    c.c_given = true;
  }
  if (f.q) c.consts.q = *f.q;
  if (f.C) c.consts.C_naor = *f.C;
  if (f.c1) c.consts.c1 = *f.c1;
  if (f.c2) c.consts.c2 = *f.c2;
  if (f.delta) c.delta = f.delta;
  if (f.corollary) c.corollary = *f.corollary;
  if (f.per_state) c.per_state = true;
  if (f.chain_file) c.chain_file = *f.chain_file;
  if (f.output) c.output = *f.output;
  if (f.fit_output) c.fit_output = *f.fit_output;
  if (f.format) c.format = *f.format == "json" ? gtm::OutputFormat::Json : gtm::OutputFormat::Csv;
  if (f.threads) c.threads = *f.threads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Good-Turing missing-mass bias for rank-2 Markov chains"};
  app.require_subcommand(1);
  Flags flags;
  const char* names[] = {"params", "exact-bias", "bounds", "simulate", "reproduce-table1",
                         "reproduce-fig1", "periodic-check", "validate"};
  const char* help[] = {"spectral gap, TV gap and weighted norm of a chain",
                        "exact E[G0 - M0]",
                        "bias bounds next to the exact bias",
                        "Monte Carlo mean error and MSE",
                        "fitted exponents of parameters and bounds for p1/p2/p3",
                        "Monte Carlo |ME| and MSE curves with fitted slopes",
                        "periodic chain: formula, exact and Monte Carlo",
                        "built-in invariant battery"};
  for (std::size_t i = 0; i < std::size(names); ++i) add_common(app.add_subcommand(names[i], help[i]), flags);
  CLI11_PARSE(app, argc, argv);

  try {
    gtm::ExperimentConfig cfg;
    const auto* sub = app.get_subcommands().front();
    if (flags.config) gtm::load_config_file(cfg, *flags.config);
    cfg.subcommand = gtm::parse_subcommand(sub->get_name());
    apply(flags, cfg);
    return gtm::run(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gtm::kExitError;
  }
}
