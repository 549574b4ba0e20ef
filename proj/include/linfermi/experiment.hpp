#pragma once

// Configuration-driven runners: thermodynamic state, stationary state,
// verification report, and the overlap sweeps comparing the two.
//
// Config (JSON, unknown keys rejected):
//   n_sites      positive integer
//   hamiltonian  {kind: "tridiagonal", hopping, onsite}
//              | {kind: "dense", matrix}
//              | {kind: "diagonal_plus_uniform_offdiag", diagonal (default 1..N), omega}
//   thermo       {beta, mu, beta_mu (optional; fixes the product beta*mu)}
//   sweep        {parameter: "beta" | "mu" | "omega", from, to, points}   (optional)
//   bath         {kind: "none"}
//              | {kind: "theorem1", x, b (number or list), branch, ratio (optional override)}
//              | {kind: "theorem2", x (list per block) | x_rule: "thermal", b, blocks (sizes), branch}
//              | {kind: "explicit", B (rows = baths, 2N columns)}
//   ness         {hamiltonian: "same" | "diagonal_part"}
//   solver       {max_bond, threshold, kernel_tol, verify_tol, oracle}
//   output       {csv}

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "linfermi/errors.hpp"
#include "linfermi/liouvillian.hpp"
#include "linfermi/mps.hpp"
#include "linfermi/quadratic_model.hpp"
#include "linfermi/stationary.hpp"
#include "linfermi/thermo_state.hpp"

namespace linfermi::experiment {

using json = nlohmann::json;

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

enum class HamiltonianKind { dense, tridiagonal, diagonal_plus_uniform };
enum class SweepParameter { beta, mu, omega };
enum class BathKind { none, theorem1, theorem2, explicit_coefficients };
enum class NessHamiltonian { same, diagonal_part };

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::beta: return "beta";
    case SweepParameter::mu: return "mu";
    default: return "omega";
  }
}

struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::tridiagonal;
  Eigen::MatrixXd matrix;
  double hopping = 1.0;
  double onsite = 0.0;
  Eigen::VectorXd diagonal;
  double omega = 0.0;

  CoefficientMatrix build(int n, std::optional<double> omega_override = std::nullopt) const {
    switch (kind) {
      case HamiltonianKind::dense: return CoefficientMatrix(matrix);
      case HamiltonianKind::tridiagonal: return CoefficientMatrix::tridiagonal(n, hopping, onsite);
      default: {
        Eigen::VectorXd d = diagonal;
        if (d.size() == 0) d = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
        return CoefficientMatrix::diagonal_plus_uniform(d, omega_override.value_or(omega));
      }
    }
  }
};

struct SweepSpec {
  SweepParameter parameter = SweepParameter::beta;
  double from = 0.0;
  double to = 1.0;
  int points = 41;

  std::vector<double> grid() const {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
      g[i] = i + 1 == points ? to : from + (to - from) * static_cast<double>(i) / (points - 1);
    return g;
  }
};

struct BathSpec {
  BathKind kind = BathKind::none;
  double x = 0.0;
  std::vector<double> x_blocks;
  bool x_thermal = false;
  Eigen::VectorXd b;
  Branch branch = Branch::plus;
  std::optional<double> ratio;
  std::vector<int> blocks;
  Eigen::MatrixXd B;
};

struct SolverSpec {
  TruncationPolicy policy{1024, 0.0};
  double kernel_tol = 1e-9;
  double verify_tol = 1e-10;
  bool oracle = false;
};

struct ExperimentConfig {
  int n_sites = 0;
  HamiltonianSpec hamiltonian;
  ThermoParams thermo;
  std::optional<SweepSpec> sweep;
  BathSpec bath;
  NessHamiltonian ness_hamiltonian = NessHamiltonian::same;
  SolverSpec solver;
  std::string csv_path;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

inline double number_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

inline std::string text(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

inline Eigen::VectorXd vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + " must contain numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  if (!out.allFinite()) throw ConfigError(where + " must be finite");
  return out;
}

inline Eigen::MatrixXd matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Eigen::VectorXd row = vector(v[r], where);
    if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(where + " rows must have equal length");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

inline Branch branch(const json& obj, const std::string& where) {
  if (!obj.contains("branch")) return Branch::plus;
  const std::string s = text(obj, "branch", where);
  if (s == "plus" || s == "+") return Branch::plus;
  if (s == "minus" || s == "-") return Branch::minus;
  throw ConfigError(where + ".branch must be 'plus' or 'minus'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, {"n_sites", "hamiltonian", "thermo", "sweep", "bath", "ness", "solver", "output"}, "config");
  ExperimentConfig cfg;
  if (!j.contains("n_sites") || !j.at("n_sites").is_number_integer()) throw ConfigError("n_sites must be an integer");
  cfg.n_sites = j.at("n_sites").get<int>();
  if (cfg.n_sites < 1 || cfg.n_sites > 30) throw ConfigError("n_sites must lie in 1..30");
  const int n = cfg.n_sites;

  if (!j.contains("hamiltonian")) throw ConfigError("hamiltonian is required");
  {
    const json& h = j.at("hamiltonian");
    check_keys(h, {"kind", "matrix", "hopping", "onsite", "diagonal", "omega"}, "hamiltonian");
    const std::string kind = text(h, "kind", "hamiltonian");
    auto& hs = cfg.hamiltonian;
    if (kind == "dense") {
      check_keys(h, {"kind", "matrix"}, "hamiltonian");
      hs.kind = HamiltonianKind::dense;
      if (!h.contains("matrix")) throw ConfigError("hamiltonian.matrix is required");
      hs.matrix = matrix(h.at("matrix"), "hamiltonian.matrix");
      if (hs.matrix.rows() != n || hs.matrix.cols() != n) throw ConfigError("hamiltonian.matrix must be n_sites x n_sites");
    } else if (kind == "tridiagonal") {
      check_keys(h, {"kind", "hopping", "onsite"}, "hamiltonian");
      hs.kind = HamiltonianKind::tridiagonal;
      hs.hopping = number_or(h, "hopping", 1.0, "hamiltonian");
      hs.onsite = number_or(h, "onsite", 0.0, "hamiltonian");
    } else if (kind == "diagonal_plus_uniform_offdiag") {
      check_keys(h, {"kind", "diagonal", "omega"}, "hamiltonian");
      hs.kind = HamiltonianKind::diagonal_plus_uniform;
      if (h.contains("diagonal")) {
        hs.diagonal = vector(h.at("diagonal"), "hamiltonian.diagonal");
        if (hs.diagonal.size() != n) throw ConfigError("hamiltonian.diagonal must have n_sites entries");
      }
      hs.omega = number_or(h, "omega", 0.0, "hamiltonian");
    } else {
      throw ConfigError("unknown hamiltonian kind '" + kind + "'");
    }
    try {
      (void)hs.build(n);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("hamiltonian: ") + e.what());
    }
  }

  if (j.contains("thermo")) {
    const json& t = j.at("thermo");
    check_keys(t, {"beta", "mu", "beta_mu"}, "thermo");
    cfg.thermo.beta = number_or(t, "beta", 0.0, "thermo");
    cfg.thermo.mu = number_or(t, "mu", 0.0, "thermo");
    if (t.contains("beta_mu")) cfg.thermo.fixed_beta_mu = number(t, "beta_mu", "thermo");
    try {
      cfg.thermo.validate();
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("thermo: ") + e.what());
    }
  }

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"parameter", "from", "to", "points"}, "sweep");
    SweepSpec sw;
    const std::string p = text(s, "parameter", "sweep");
    if (p == "beta") sw.parameter = SweepParameter::beta;
    else if (p == "mu") sw.parameter = SweepParameter::mu;
    else if (p == "omega") sw.parameter = SweepParameter::omega;
    else throw ConfigError("sweep.parameter must be beta, mu or omega");
    sw.from = number(s, "from", "sweep");
    sw.to = number(s, "to", "sweep");
    if (s.contains("points")) {
      if (!s.at("points").is_number_integer()) throw ConfigError("sweep.points must be an integer");
      sw.points = s.at("points").get<int>();
    }
    if (sw.points < 2) throw ConfigError("sweep.points must be at least 2");
    if (sw.parameter == SweepParameter::beta && std::min(sw.from, sw.to) < 0.0)
      throw ConfigError("a beta sweep must stay nonnegative");
    if (sw.parameter == SweepParameter::mu && cfg.thermo.fixed_beta_mu)
      throw ConfigError("a mu sweep conflicts with a fixed beta_mu");
    if (sw.parameter == SweepParameter::omega && cfg.hamiltonian.kind != HamiltonianKind::diagonal_plus_uniform)
      throw ConfigError("an omega sweep needs the diagonal_plus_uniform_offdiag Hamiltonian");
    cfg.sweep = sw;
  }

  if (j.contains("bath")) {
    const json& b = j.at("bath");
    check_keys(b, {"kind", "x", "x_rule", "b", "branch", "ratio", "blocks", "B"}, "bath");
    const std::string kind = text(b, "kind", "bath");
    auto& bs = cfg.bath;
    auto amplitudes = [&]() {
      if (!b.contains("b")) return Eigen::VectorXd::Ones(n).eval();
      if (b.at("b").is_number()) return Eigen::VectorXd::Constant(n, b.at("b").get<double>()).eval();
      Eigen::VectorXd v = vector(b.at("b"), "bath.b");
      if (v.size() != n) throw ConfigError("bath.b must have n_sites entries");
      return v;
    };
    if (kind == "none") {
      check_keys(b, {"kind"}, "bath");
      bs.kind = BathKind::none;
    } else if (kind == "theorem1") {
      check_keys(b, {"kind", "x", "b", "branch", "ratio"}, "bath");
      bs.kind = BathKind::theorem1;
      bs.x = number(b, "x", "bath");
      bs.b = amplitudes();
      bs.branch = branch(b, "bath");
      if (b.contains("ratio")) bs.ratio = number(b, "ratio", "bath");
      try {
        Theorem1Config{bs.x, bs.b, bs.branch}.validate();
      } catch (const PreconditionError& e) {
        throw ConfigError(std::string("bath: ") + e.what());
      }
    } else if (kind == "theorem2") {
      check_keys(b, {"kind", "x", "x_rule", "b", "branch", "blocks"}, "bath");
      bs.kind = BathKind::theorem2;
      bs.b = amplitudes();
      bs.branch = branch(b, "bath");
      if (b.contains("x") == b.contains("x_rule")) throw ConfigError("bath needs exactly one of x and x_rule");
      if (b.contains("x")) {
        const Eigen::VectorXd xs = vector(b.at("x"), "bath.x");
        bs.x_blocks.assign(xs.data(), xs.data() + xs.size());
      } else if (text(b, "x_rule", "bath") == "thermal") {
        bs.x_thermal = true;
      } else {
        throw ConfigError("bath.x_rule must be 'thermal'");
      }
      if (b.contains("blocks")) {
        const Eigen::VectorXd sizes = vector(b.at("blocks"), "bath.blocks");
        int total = 0;
        for (Eigen::Index i = 0; i < sizes.size(); ++i) {
          const int d = static_cast<int>(sizes[i]);
          if (d < 1 || d != sizes[i]) throw ConfigError("bath.blocks must be positive integers");
          bs.blocks.push_back(d);
          total += d;
        }
        if (total != n) throw ConfigError("bath.blocks must add up to n_sites");
      }
    } else if (kind == "explicit") {
      check_keys(b, {"kind", "B"}, "bath");
      bs.kind = BathKind::explicit_coefficients;
      if (!b.contains("B")) throw ConfigError("bath.B is required");
      bs.B = matrix(b.at("B"), "bath.B");
      if (bs.B.cols() != 2 * n) throw ConfigError("bath.B must have 2 n_sites columns");
    } else {
      throw ConfigError("unknown bath kind '" + kind + "'");
    }
  }

  if (j.contains("ness")) {
    const json& s = j.at("ness");
    check_keys(s, {"hamiltonian"}, "ness");
    const std::string which = text(s, "hamiltonian", "ness");
    if (which == "same") cfg.ness_hamiltonian = NessHamiltonian::same;
    else if (which == "diagonal_part") cfg.ness_hamiltonian = NessHamiltonian::diagonal_part;
    else throw ConfigError("ness.hamiltonian must be 'same' or 'diagonal_part'");
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"max_bond", "threshold", "kernel_tol", "verify_tol", "oracle"}, "solver");
    if (s.contains("max_bond")) {
      if (!s.at("max_bond").is_number_integer() || s.at("max_bond").get<long>() < 1)
        throw ConfigError("solver.max_bond must be a positive integer");
      cfg.solver.policy.max_bond = s.at("max_bond").get<long>();
    }
    cfg.solver.policy.threshold = number_or(s, "threshold", 0.0, "solver");
    if (cfg.solver.policy.threshold < 0.0) throw ConfigError("solver.threshold must be nonnegative");
    cfg.solver.kernel_tol = number_or(s, "kernel_tol", cfg.solver.kernel_tol, "solver");
    cfg.solver.verify_tol = number_or(s, "verify_tol", cfg.solver.verify_tol, "solver");
    if (s.contains("oracle")) {
      if (!s.at("oracle").is_boolean()) throw ConfigError("solver.oracle must be a boolean");
      cfg.solver.oracle = s.at("oracle").get<bool>();
    }
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"csv"}, "output");
    if (o.contains("csv")) cfg.csv_path = text(o, "csv", "output");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Per-point inputs

struct PointInputs {
  CoefficientMatrix h_thermo;
  ThermoParams thermo;
  CoefficientMatrix h_ness;
  BathSet baths;
  std::optional<Theorem1Config> theorem1;
  std::optional<Theorem2Config> theorem2;
};

inline PointInputs inputs_at(const ExperimentConfig& cfg, std::optional<double> sweep_value = std::nullopt) {
  const int n = cfg.n_sites;
  std::optional<double> omega;
  ThermoParams p = cfg.thermo;
  if (cfg.sweep && sweep_value) {
    switch (cfg.sweep->parameter) {
      case SweepParameter::beta:
        p.beta = *sweep_value;
        break;
      case SweepParameter::mu:
        p.mu = *sweep_value;
        break;
      case SweepParameter::omega:
        omega = *sweep_value;
        break;
    }
  }
  PointInputs in{cfg.hamiltonian.build(n, omega), p, {}, BathSet::none(n), std::nullopt, std::nullopt};
  if (cfg.ness_hamiltonian == NessHamiltonian::same) {
    in.h_ness = in.h_thermo;
  } else {
    in.h_ness = CoefficientMatrix(Eigen::MatrixXd(in.h_thermo.matrix().diagonal().asDiagonal()));
  }

  const auto& bs = cfg.bath;
  switch (bs.kind) {
    case BathKind::none:
      break;
    case BathKind::theorem1: {
      Theorem1Config c{bs.x, bs.b, bs.branch};
      in.theorem1 = c;
      if (bs.ratio) {
        in.baths = single_site_baths(bs.b, Eigen::VectorXd::Constant(n, *bs.ratio));
      } else {
        in.baths = theorem1_baths(c);
      }
      break;
    }
    case BathKind::theorem2: {
      std::vector<int> sizes = bs.blocks;
      if (sizes.empty()) {
        const BlockPartition part = irreducibility_check(in.h_ness);
        int next = 0;
        for (const auto& blk : part.blocks) {
          for (int s : blk)
            if (s != next++) throw ConfigError("Hamiltonian blocks are not contiguous; give bath.blocks explicitly");
          sizes.push_back(static_cast<int>(blk.size()));
        }
      }
      Theorem2Config c;
      c.branch = bs.branch;
      if (!bs.x_thermal && bs.x_blocks.size() != sizes.size())
        throw ConfigError("bath.x needs one entry per block (" + std::to_string(sizes.size()) + ")");
      int off = 0;
      const ThermoParams base = cfg.thermo;
      for (std::size_t l = 0; l < sizes.size(); ++l) {
        Theorem2Block blk;
        blk.b = bs.b.segment(off, sizes[l]);
        if (bs.x_thermal) {
          if (sizes[l] != 1) throw ConfigError("x_rule 'thermal' needs single-site blocks");
          blk.x = std::tanh(0.5 * (base.beta_mu() - base.beta * in.h_ness(off, off)));
        } else {
          blk.x = bs.x_blocks[l];
        }
        c.blocks.push_back(std::move(blk));
        off += sizes[l];
      }
      try {
        c.validate();
      } catch (const PreconditionError& e) {
        throw ConfigError(std::string("bath: ") + e.what());
      }
      in.baths = theorem2_baths(c);
      in.theorem2 = std::move(c);
      break;
    }
    case BathKind::explicit_coefficients:
      in.baths = BathSet(bs.B);
      break;
  }
  return in;
}

// ---------------------------------------------------------------------------
// Stationary state

struct NessResult {
  CanonicalMps state;  // trace-normalized: 2^N (0...0|rho) = 1
  std::string method;
  std::string note;
  int kernel_dim = -1;  // -1 when not computed
};

inline NessResult compute_ness(const ExperimentConfig& cfg, const PointInputs& in) {
  const int n = cfg.n_sites;
  const auto& policy = cfg.solver.policy;
  NessResult out;
  if (in.theorem1) {
    out.state = theorem1_state(in.theorem1->x, n, policy);
    out.method = "closed form (single irreducible block)";
    if (cfg.bath.ratio) out.note = "bath ratio overridden; the closed form is tested, not guaranteed";
    return out;
  }
  if (in.theorem2) {
    out.state = theorem2_state(*in.theorem2, policy);
    out.method = "closed form (block product)";
    return out;
  }
  if (cfg.bath.kind == BathKind::none) {
    out.note = "no baths: the stationary state is not unique; ";
  }
  NessProductForm pf = ness_product_form(build_structure_matrix(in.h_ness, in.baths), policy);
  if (pf.state) {
    out.state = std::move(*pf.state);
    out.method = "normal-mode product";
    return out;
  }
  out.note += pf.message + "; falling back to the kernel solver";
  KernelOptions opt;
  opt.tol = cfg.solver.kernel_tol;
  const NessKernel k = ness_kernel(build_superoperator(in.h_ness, in.baths), opt);
  out.state = CanonicalMps::from_dense(k.trace_normalized, 2 * n, policy);
  out.kernel_dim = k.kernel_dim;
  out.method = "kernel solver";
  if (!k.note.empty()) out.note += "; " + k.note;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double param = 0.0;
  double overlap = 0.0;
  double norm_th = 0.0;   // 2-norm of the trace-normalized thermodynamic vector
  double norm_ss = 0.0;   // 2-norm of the trace-normalized stationary vector
  double log_xi = 0.0;    // log of the partition function read from the state
  double residual = 0.0;  // relative difference between that partition function and the closed form
  double discarded = 0.0;
  Eigen::Index max_bond = 0;
  std::optional<double> oracle_overlap;
};

struct SweepResult {
  std::string parameter;
  std::vector<SweepRow> rows;
  bool peak_checked = false;
  bool peak_ok = true;
  std::string peak_message;
  bool monotone = true;  // overlap non-increasing away from the first grid point
  std::vector<std::string> warnings;
};

namespace detail {

inline double dense_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace detail

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("a sweep block is required");
  SweepResult out;
  out.parameter = to_string(cfg.sweep->parameter);
  for (double value : cfg.sweep->grid()) {
    const PointInputs in = inputs_at(cfg, value);
    const ThermoState th = build_thermo_state(in.h_thermo, in.thermo, cfg.solver.policy);
    const NessResult ness = compute_ness(cfg, in);
    SweepRow row;
    row.param = value;
    row.overlap = std::min(1.0, normalized_overlap(th.state, ness.state));
    const PartitionFunction xi = partition_function_from_state(th.state);
    const PartitionFunction closed = grand_partition_closed_form(th.matched.spectrum.energies, in.thermo);
    row.log_xi = xi.log_xi;
    row.residual = std::abs(std::expm1(xi.log_xi - closed.log_xi));
    row.norm_th = std::exp(th.state.log_norm() - xi.log_xi);
    row.norm_ss = ness.state.norm();
    row.discarded = th.state.discarded_weight();
    row.max_bond = th.state.max_bond_dim();
    if (cfg.solver.policy.threshold > 0.0 && row.discarded > 1e-12) {
      std::ostringstream w;
      w << out.parameter << "=" << value << ": truncation discarded weight " << row.discarded;
      out.warnings.push_back(w.str());
    }
    if (cfg.solver.oracle && cfg.n_sites <= 6)
      row.oracle_overlap = detail::dense_overlap(dense_thermo_oracle(in.h_thermo, in.thermo), ness.state.to_dense());
    out.rows.push_back(row);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].overlap > out.rows[i - 1].overlap + 1e-12) out.monotone = false;
  return out;
}

/// The overlap must peak at the grid point where the swept parameter is zero, with value 1.
inline void check_peak_at_zero(SweepResult& r, double tol = 1e-6) {
  r.peak_checked = true;
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    if (r.rows[i].overlap > r.rows[best].overlap) best = i;
  std::ostringstream msg;
  if (r.rows[best].param != 0.0) {
    r.peak_ok = false;
    msg << "overlap peaks at " << r.parameter << "=" << r.rows[best].param << ", not at 0";
  } else if (std::abs(r.rows[best].overlap - 1.0) > tol) {
    r.peak_ok = false;
    msg << "peak overlap " << r.rows[best].overlap << " differs from 1 by more than " << tol;
  } else {
    msg << "peak at " << r.parameter << "=0 with overlap " << r.rows[best].overlap;
  }
  r.peak_message = msg.str();
}

inline SweepResult run_fig2a(const ExperimentConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->parameter != SweepParameter::beta)
    throw ConfigError("fig2a sweeps beta");
  if (cfg.bath.kind != BathKind::theorem1) throw ConfigError("fig2a uses single-block closed-form baths (theorem1)");
  SweepResult r = run_sweep(cfg);
  check_peak_at_zero(r);
  return r;
}

inline SweepResult run_fig2b(const ExperimentConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->parameter != SweepParameter::omega)
    throw ConfigError("fig2b sweeps omega");
  if (cfg.bath.kind != BathKind::theorem2) throw ConfigError("fig2b uses block closed-form baths (theorem2)");
  SweepResult r = run_sweep(cfg);
  check_peak_at_zero(r);
  return r;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const SweepResult& r) {
  os << "param,overlap,norm_th,norm_ss,log_xi,residual\n";
  for (const auto& row : r.rows)
    os << format_number(row.param) << ',' << format_number(row.overlap) << ',' << format_number(row.norm_th) << ','
       << format_number(row.norm_ss) << ',' << format_number(row.log_xi) << ',' << format_number(row.residual)
       << '\n';
}

// ---------------------------------------------------------------------------
// Verification report

struct CheckLine {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckLine> checks;
  std::vector<std::string> notes;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
  }

  void add(std::string name, double value, double tol, std::string detail = {}) {
    checks.push_back({std::move(name), value, tol, value <= tol, std::move(detail)});
  }
};

inline VerifyReport run_verify(const ExperimentConfig& cfg) {
  VerifyReport rep;
  const int n = cfg.n_sites;
  const PointInputs in = inputs_at(cfg);

  // thermodynamic state
  const ThermoState th = build_thermo_state(in.h_thermo, in.thermo, cfg.solver.policy);
  const PartitionFunction from_state = partition_function_from_state(th.state);
  const PartitionFunction closed = grand_partition_closed_form(th.matched.spectrum.energies, in.thermo);
  const PartitionFunction from_pairs = partition_function_from_factorization(th.matched.fact, th.matched.args.A0);
  rep.add("partition function: state vs eigenvalue product", std::abs(std::expm1(from_state.log_xi - closed.log_xi)), 1e-9);
  rep.add("partition function: pair product vs eigenvalue product", std::abs(std::expm1(from_pairs.log_xi - closed.log_xi)), 1e-9);
  {
    const Eigen::VectorXd occ = occupations_from_reduced(th.reduced, th.matched.fact);
    const Eigen::VectorXd occ_full = occupations_from_state(th.state, th.matched.spectrum);
    double dev = 0.0, dev_full = 0.0;
    for (int k = 0; k < n; ++k) {
      const double fd = fermi_dirac(th.matched.spectrum.energies[k], in.thermo);
      dev = std::max(dev, std::abs(occ[k] - fd));
      dev_full = std::max(dev_full, std::abs(occ_full[k] - fd));
    }
    rep.add("occupations (reduced state) vs Fermi-Dirac", dev, 1e-9);
    rep.add("occupations (unfolded state) vs Fermi-Dirac", dev_full, 1e-9);
  }
  if (n <= 4) {
    const Eigen::VectorXcd oracle = dense_thermo_oracle(in.h_thermo, in.thermo);
    rep.add("thermodynamic state vs dense exponential (max abs)", (th.state.to_dense() - oracle).cwiseAbs().maxCoeff(), 1e-9);
  }
  if (th.state.discarded_weight() > 1e-12)
    rep.notes.push_back("truncation discarded weight " + format_number(th.state.discarded_weight()));

  // stationary state
  if (cfg.bath.kind == BathKind::none) {
    rep.notes.push_back("no baths: the Liouvillian is purely Hamiltonian and its kernel is degenerate");
    if (n <= 4) {
      KernelOptions opt;
      opt.tol = cfg.solver.kernel_tol;
      const NessKernel k = ness_kernel(build_superoperator(in.h_ness, in.baths), opt);
      rep.notes.push_back("even-sector kernel dimension " + std::to_string(k.kernel_dim));
    }
    return rep;
  }
  const double full_occ_expected = in.baths.fully_occupied_eigenvalue();
  if (n <= 6) {
    const SuperOperator su = build_superoperator(in.h_ness, in.baths);
    Eigen::VectorXcd ones = Eigen::VectorXcd::Zero(su.dim());
    ones[su.dim() - 1] = 1.0;
    const Eigen::VectorXcd image = su.apply(ones);
    rep.add("fully occupied eigenpair", (image - full_occ_expected * ones).norm() / std::max(1.0, std::abs(full_occ_expected)), 1e-10);
  }
  const NessResult ness = compute_ness(cfg, in);
  rep.notes.push_back("stationary state: " + ness.method + (ness.note.empty() ? "" : " (" + ness.note + ")"));
  const StationarityReport st = verify_stationarity(ness.state, in.h_ness, in.baths, cfg.solver.verify_tol);
  rep.add("stationarity residual (total, " + st.method + ")", st.total, cfg.solver.verify_tol,
          "hamiltonian " + format_number(st.hamiltonian) + ", bath " + format_number(st.bath));
  if (in.theorem1) {
    const double r = in.baths.coefficients()(0, 1) / in.baths.coefficients()(0, 0);
    const double x = in.theorem1->x;
    rep.add("bath identity 2 B1 B2 + x (B1^2 + B2^2)", std::abs(2.0 * r + x * (1.0 + r * r)), 1e-12);
  }
  if (n <= 4) {
    KernelOptions opt;
    opt.tol = cfg.solver.kernel_tol;
    const NessKernel k = ness_kernel(build_superoperator(in.h_ness, in.baths), opt);
    const Eigen::VectorXcd v = ness.state.to_dense();
    const double fid = std::norm(k.unit.dot(v)) / v.squaredNorm();
    rep.add("dense kernel dimension - 1", std::abs(k.kernel_dim - 1.0), 0.0);
    rep.add("1 - fidelity(stationary state, dense kernel)", std::max(0.0, 1.0 - fid), 1e-10);
  }
  if (in.theorem1 && !cfg.bath.ratio) {
    const ThermalMatch m = thermal_match_theorem1(in.theorem1->x);
    rep.notes.push_back(std::string("thermal match: ") + to_string(m.kind) + ", beta = 0, beta*mu = " + format_number(m.beta_mu));
  } else if (in.theorem2) {
    const ThermalMatch m = thermal_match_theorem2(in.theorem2->x_per_site(), in.h_ness);
    std::string line = std::string("thermal match: ") + to_string(m.kind);
    if (m.kind == ThermalKind::thermal) line += ", beta = " + format_number(m.beta) + ", mu = " + format_number(m.mu);
    if (!m.note.empty()) line += " (" + m.note + ")";
    rep.notes.push_back(line);
  }
  return rep;
}

inline void print_report(std::ostream& os, const VerifyReport& rep) {
  for (const auto& c : rep.checks) {
    os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  value=" << format_number(c.value)
       << "  tol=" << format_number(c.tol);
    if (!c.detail.empty()) os << "  [" << c.detail << "]";
    os << '\n';
  }
  for (const auto& n : rep.notes) os << "note  " << n << '\n';
}

}  // namespace linfermi::experiment
