// Command-line front end: thermo, ness, verify, fig2a, fig2b.
//
// Exit codes: 0 success, 2 bad input or configuration, 3 a verification or
// numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "linfermi/linfermi.hpp"

namespace {

using namespace linfermi;
using namespace linfermi::experiment;

struct Overrides {
  std::string config;
  std::string out;
  bool oracle = false;
  std::optional<long> chi;
  std::optional<double> tau;
  std::string branch;
};

ExperimentConfig load(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.oracle) cfg.solver.oracle = true;
  if (o.chi) {
    if (*o.chi < 1) throw ConfigError("--chi must be positive");
    cfg.solver.policy.max_bond = *o.chi;
  }
  if (o.tau) {
    if (*o.tau < 0.0) throw ConfigError("--tau must be nonnegative");
    cfg.solver.policy.threshold = *o.tau;
  }
  if (!o.branch.empty()) {
    if (o.branch == "plus") cfg.bath.branch = Branch::plus;
    else if (o.branch == "minus") cfg.bath.branch = Branch::minus;
    else throw ConfigError("--branch must be plus or minus");
  }
  return cfg;
}

void save_snapshot(const CanonicalMps& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  s.write(os);
}

int cmd_thermo(const Overrides& o) {
  const ExperimentConfig cfg = load(o);
  const PointInputs in = inputs_at(cfg);
  const ThermoState th = build_thermo_state(in.h_thermo, in.thermo, cfg.solver.policy);
  const PartitionFunction xi = partition_function_from_state(th.state);
  const PartitionFunction closed = grand_partition_closed_form(th.matched.spectrum.energies, in.thermo);
  std::cout << "sites " << cfg.n_sites << "  beta " << in.thermo.beta << "  beta*mu " << in.thermo.beta_mu() << '\n'
            << "gates " << th.schedule.size() << "  max bond " << th.state.max_bond_dim()
            << "  discarded weight " << format_number(th.state.discarded_weight()) << '\n'
            << "log Xi (state) " << format_number(xi.log_xi) << "  log Xi (closed form) "
            << format_number(closed.log_xi) << '\n';
  const Eigen::VectorXd occ = occupations_from_state(th.state, th.matched.spectrum);
  std::cout << "mode  energy  occupation  fermi-dirac\n";
  for (int k = 0; k < cfg.n_sites; ++k)
    std::cout << k + 1 << "  " << format_number(th.matched.spectrum.energies[k]) << "  " << format_number(occ[k])
              << "  " << format_number(fermi_dirac(th.matched.spectrum.energies[k], in.thermo)) << '\n';
  if (cfg.solver.oracle && cfg.n_sites <= 6) {
    const Eigen::VectorXcd dense = dense_thermo_oracle(in.h_thermo, in.thermo);
    std::cout << "dense oracle max deviation " << format_number((th.state.to_dense() - dense).cwiseAbs().maxCoeff())
              << '\n';
  }
  if (!o.out.empty()) save_snapshot(th.state, o.out);
  return 0;
}

int cmd_ness(const Overrides& o) {
  const ExperimentConfig cfg = load(o);
  const PointInputs in = inputs_at(cfg);
  const NessResult ness = compute_ness(cfg, in);
  const StationarityReport st = verify_stationarity(ness.state, in.h_ness, in.baths, cfg.solver.verify_tol);
  std::cout << "method " << ness.method << '\n';
  if (!ness.note.empty()) std::cout << "note " << ness.note << '\n';
  std::cout << "max bond " << ness.state.max_bond_dim() << '\n'
            << "residual total " << format_number(st.total) << "  hamiltonian " << format_number(st.hamiltonian)
            << "  bath " << format_number(st.bath) << "  (" << st.method << ")\n";
  if (in.theorem2) {
    const ThermalMatch m = thermal_match_theorem2(in.theorem2->x_per_site(), in.h_ness);
    std::cout << "thermal match " << to_string(m.kind);
    if (m.kind == ThermalKind::thermal) std::cout << "  beta " << format_number(m.beta) << "  mu " << format_number(m.mu);
    std::cout << '\n';
  } else if (in.theorem1 && !cfg.bath.ratio) {
    const ThermalMatch m = thermal_match_theorem1(in.theorem1->x);
    std::cout << "thermal match " << to_string(m.kind) << "  beta 0  beta*mu " << format_number(m.beta_mu) << '\n';
  }
  if (!o.out.empty()) save_snapshot(ness.state, o.out);
  if (!st.pass) {
    std::cerr << "stationarity residual " << st.total << " exceeds " << st.tol << '\n';
    return 3;
  }
  return 0;
}

int cmd_verify(const Overrides& o) {
  const VerifyReport rep = run_verify(load(o));
  print_report(std::cout, rep);
  return rep.all_pass() ? 0 : 3;
}

int cmd_sweep(const Overrides& o, bool fig_a) {
  const ExperimentConfig cfg = load(o);
  const SweepResult r = fig_a ? run_fig2a(cfg) : run_fig2b(cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& row : r.rows)
    if (row.oracle_overlap)
      std::cerr << "oracle " << r.parameter << "=" << row.param << ": overlap deviation "
                << format_number(std::abs(*row.oracle_overlap - row.overlap)) << '\n';
  const std::string path = o.out.empty() ? cfg.csv_path : o.out;
  if (path.empty() || path == "-") {
    write_csv(std::cout, r);
  } else {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    write_csv(os, r);
  }
  std::cerr << r.peak_message << (r.monotone ? "; overlap decreases monotonically" : "; overlap is not monotone")
            << '\n';
  return r.peak_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic and stationary states of quadratic fermion chains"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output path (CSV for sweeps, MPS snapshot otherwise)");
    sub->add_flag("--oracle", o.oracle, "cross-check against dense references where small enough");
    sub->add_option("--chi", o.chi, "maximum bond dimension");
    sub->add_option("--tau", o.tau, "discarded-weight threshold");
    sub->add_option("--branch", o.branch, "bath ratio branch (plus or minus)");
  };
  auto* thermo = app.add_subcommand("thermo", "build the thermodynamic state");
  auto* ness = app.add_subcommand("ness", "build and verify the stationary state");
  auto* verify = app.add_subcommand("verify", "run the verification report");
  auto* fig2a = app.add_subcommand("fig2a", "overlap sweep over beta");
  auto* fig2b = app.add_subcommand("fig2b", "overlap sweep over omega");
  for (auto* s : {thermo, ness, verify, fig2a, fig2b}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (thermo->parsed()) return cmd_thermo(o);
    if (ness->parsed()) return cmd_ness(o);
    if (verify->parsed()) return cmd_verify(o);
    if (fig2a->parsed()) return cmd_sweep(o, true);
    return cmd_sweep(o, false);
  } catch (const linfermi::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
}
