// metroq: batch sweeps over the library, written as CSV.
//
// Every option can also be given in a TOML config file passed with
// --config; keys are the long option names without the leading dashes. Exit
// status: 0 success, 2 configuration error, 3 a solver did not converge
// (rows are still written and carry a converged column where relevant).

#include <CLI11.hpp>

#include <boost/crc.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "metroq/metroq.hpp"

using namespace metroq;

namespace {

struct Settings {
  double p = 0.95;
  double q = 0.9;
  double eta = 0.1;
  double p_dark = 0.01;
  double lambda0 = 27.0;
  double ratio = 0.65;
  double r = 0.7;
  double tail_tol = 1e-9;
  int cutoff = 100;
  int n_max = 0;  // 0 selects the per-command default
  int k_max = 3;
  int grid = 5;
  int restarts = 16;
  std::uint64_t seed = 1;
  std::string readout = "bitflip";
  std::string out;
};

struct Row {
  std::vector<double> cells;
  bool converged = true;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

std::string format_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_table(std::ostream& os, const Table& t, const std::string& header) {
  os << header << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) os << (i ? "," : "") << format_cell(row.cells[i]);
    os << '\n';
  }
}

int probes(const Settings& s, int fallback) { return s.n_max > 0 ? s.n_max : fallback; }

Table sweep(std::vector<std::string> columns, int n, const std::function<Row(int)>& fn) {
  Table t{std::move(columns), {}};
  t.rows = parallel_map<Row>(static_cast<std::size_t>(n), [&](std::size_t i) { return fn(static_cast<int>(i) + 1); });
  return t;
}

PoissonReadout nv_readout(const Settings& s) {
  PoissonReadout r;
  r.lambda0 = s.lambda0;
  r.lambda1 = s.ratio * s.lambda0;
  r.cutoff = s.cutoff;
  r.tail_tol = s.tail_tol;
  r.validate();
  return r;
}

Povm readout_povm(const Settings& s) {
  if (s.readout == "photonic")
    return povm_from_detection(single_photon_channel(s.eta, s.p_dark), ProjectiveMeasurement::computational(2),
                               hadamard());
  return bit_flip_povm(s.p, s.q);
}

Table run_gamma(const Settings& s) {
  GammaOptions opt;
  opt.seed = s.seed;
  const auto g = gamma_coefficient(bit_flip_povm(s.p, s.q), opt);
  return {{"p", "q", "gamma", "closed_form", "converged"},
          {{{s.p, s.q, g.value, f2bin_bar(s.p, s.q).value, double(g.report.converged)}, g.report.converged}}};
}

Table run_nv(const Settings& s) {
  const auto r = nv_readout(s);
  const double full = max_over_phi(poisson_detection_channel(r)).value;
  const auto two = optimize_binning(r, 2), three = optimize_binning(r, 3);
  return {{"lambda0", "lambda1", "F_exact", "F_2bin", "F_3bin", "ratio_2bin", "ratio_3bin", "x_star"},
          {{{r.lambda0, r.lambda1, full, two.value, three.value, two.value / full, three.value / full,
             double(two.scheme.boundaries.at(0))}}}};
}

Table run_binning(const Settings& s) {
  const auto r = nv_readout(s);
  const auto p = poisson_detection_channel(r);
  const double full = max_over_phi(p).value;
  Table t{{"bins", "F_binned", "ratio", "phi", "first_boundary", "last_boundary"}, {}};
  for (int k = 2; k <= std::max(2, s.k_max); ++k) {
    const auto b = optimize_binning(p, k);
    t.rows.push_back({{double(k), b.value, b.value / full, b.phi, double(b.scheme.boundaries.front()),
                       double(b.scheme.boundaries.back())}});
  }
  return t;
}

Table run_moments(const Settings& s) {
  const auto r = nv_readout(s);
  const auto p = poisson_detection_channel(r);
  const auto best = max_over_phi(p);
  const auto [prob, dprob] = nv_distribution(p, best.phi);
  RVec w(prob.size());
  for (Index x = 0; x < w.size(); ++x) w(x) = (double(x) - r.lambda0) / r.lambda0;
  Table t{{"K", "moment_bound", "F_exact", "ratio"}, {}};
  for (int k = 1; k <= s.k_max; ++k) {
    const auto b = moment_lower_bound(prob, dprob, k, w);
    t.rows.push_back({{double(k), b.value, best.value, b.value / best.value}, b.converged});
  }
  return t;
}

Table run_ghz(const Settings& s) {
  return sweep({"N", "f_lower", "f_exact", "f_perfect", "r", "werner_lower", "werner_exact"}, probes(s, 50),
               [&](int n) -> Row {
                 return {{double(n), ghz_lower_bound(n, s.p, s.q).f_lower, exact_fn_ghz(n, s.p, s.q),
                          double(n) * n, s.r, werner_lower_bound(n, s.p, s.q, s.r).value,
                          werner_exact(n, s.p, s.q, s.r)}};
               });
}

Table run_local(const Settings& s) {
  const double phi = std::asin(f2bin_bar(s.p, s.q).sin_phi);
  const double gam = f2bin_bar(s.p, s.q).value, ce = bitflip_ce_closed_form(s.p, s.q);
  const auto m = bit_flip_povm(s.p, s.q);
  const auto channel = DetectionChannel::bit_flip(s.p, s.q);
  return sweep({"N", "mse_squeezed", "mse_parity", "inv_ce_finite", "inv_ce_asymptotic", "brute_force",
                "uncorrelated_baseline"},
               probes(s, 6), [&](int n) -> Row {
                 double squeezed = std::nan("");
                 if (n >= 2) squeezed = jx_mse(one_axis_squeezed(n, std::pow(n, -8.0 / 9)), 0.0, s.p, s.q, phi);
                 const auto local = local_ce_bound(m, n);
                 double bf = std::nan("");
                 if (n <= 6) {
                   BruteForceConfig cfg;
                   cfg.restarts = s.restarts;
                   cfg.seed = derive_seed(s.seed, static_cast<std::uint64_t>(n));
                   bf = 1.0 / brute_force_imperfect_qfi(n, channel, cfg).value;
                 }
                 return {{double(n), squeezed, parity_mse_ghz_opt(n, s.p, s.q).mse,
                          1.0 / local.value, 1.0 / (n * ce), bf, 1.0 / (n * gam)},
                         local.converged};
               });
}

Table run_ce(const Settings& s) {
  const auto m = readout_povm(s);
  const UnitaryEncoding enc(pauli_z() / 2.0);
  auto t = sweep({"N", "bound_finite", "bound_asymptotic", "per_probe_c", "solver_iters", "converged"},
                 probes(s, 20), [&](int n) -> Row {
                   const auto r = finite_ce_bound(m, enc, identity(2), n);
                   return {{double(n), r.bound_finite, r.bound_asymptotic, r.per_probe_c, double(r.iterations),
                            double(r.converged)},
                           r.converged};
                 });
  return t;
}

Table run_audit(const Settings& s) {
  const int g = std::max(1, s.grid);
  auto axis = [&](int i) { return g == 1 ? 0.75 : 0.55 + 0.4 * i / (g - 1); };
  return sweep({"p", "q", "feasible", "phase_cov_qfi_min", "imperfect_qfi", "qc_channel_qfi", "compact_channel_qfi"},
               g * g, [&](int k) -> Row {
                 const double p = axis((k - 1) / g), q = axis((k - 1) % g);
                 const auto m = bit_flip_povm(p, q);
                 GammaOptions go;
                 go.seed = derive_seed(s.seed, static_cast<std::uint64_t>(k));
                 SeesawConfig sc;
                 sc.seed = go.seed;
                 const auto gam = gamma_coefficient(m, go);
                 const auto qc = seesaw_channel_qfi(pauli_z() / 2.0, conjugate_map_qc(m), sc);
                 const auto compact = seesaw_channel_qfi(pauli_z() / 2.0, conjugate_map_compact(m), sc);
                 const auto cov = phase_cov_qfi_min(p, q);
                 return {{p, q, double(cov.has_value()), cov ? *cov : std::nan(""), gam.value, qc.report.value,
                          compact.report.value},
                         gam.report.converged && qc.report.converged && compact.report.converged};
               });
}

Table run_photon(const Settings& s) {
  return sweep({"N", "eta", "p_dark", "gamma", "noon_fi", "phi_opt"}, probes(s, 50), [&](int n) -> Row {
    const auto g = gamma_photonic_opt(s.eta, s.p_dark, n);
    return {{double(n), s.eta, s.p_dark, g.gamma, noon_fi(n, s.eta), g.varphi}};
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-information sweeps for quantum metrology with noisy readout", "metroq"};
  app.set_version_flag("--version", METROQ_VERSION);
  app.set_config("--config", "", "TOML configuration file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);

  Settings s;
  const auto unit = CLI::Range(0.0, 1.0);
  app.add_option("--p", s.p, "probability of reading 0 given 0")->check(CLI::Range(0.5, 1.0))->capture_default_str();
  app.add_option("--q", s.q, "probability of reading 1 given 1")->check(CLI::Range(0.5, 1.0))->capture_default_str();
  app.add_option("--eta", s.eta, "photon detection efficiency")->check(unit)->capture_default_str();
  app.add_option("--p-dark", s.p_dark, "dark-count probability per mode")->check(unit)->capture_default_str();
  app.add_option("--lambda0", s.lambda0, "mean photon count of the bright state")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--ratio", s.ratio, "dark-to-bright count ratio")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--r", s.r, "GHZ weight of the Werner state")->check(unit)->capture_default_str();
  app.add_option("--cutoff", s.cutoff, "photon-count cutoff")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tail-tol", s.tail_tol, "allowed Poisson mass above the cutoff")->capture_default_str();
  app.add_option("--n-max", s.n_max, "largest probe number in a sweep (0: command default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--k-max", s.k_max, "largest number of bins or moments")
      ->check(CLI::Range(1, 8))
      ->capture_default_str();
  app.add_option("--grid", s.grid, "points per axis in the audit grid")->check(CLI::Range(1, 50))->capture_default_str();
  app.add_option("--restarts", s.restarts, "optimiser restarts for the brute-force search")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  app.add_option("--seed", s.seed, "base seed for every randomised optimiser")->capture_default_str();
  app.add_option("--readout", s.readout, "readout model for ce-sweep")
      ->check(CLI::IsMember({"bitflip", "photonic"}))
      ->capture_default_str();
  app.add_option("--out", s.out, "output file (default: standard output)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gamma", "gamma coefficient of a bit-flip readout"},
      {"nv-fi", "NV readout Fisher information with optimal 2 and 3 bins"},
      {"binning", "optimal k-bin coarse-grainings of the NV readout"},
      {"moments", "moment-based lower bounds for the NV readout"},
      {"ghz-sweep", "GHZ and Werner Fisher information with global control"},
      {"local-sweep", "local-control estimators against the channel-extension bound"},
      {"ce-sweep", "channel-extension bounds versus probe number"},
      {"covariance-audit", "phase-covariant and Kraus-decomposition bounds on a (p, q) grid"},
      {"photon-sweep", "N00N-state gamma under loss and dark counts"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  Table table;
  try {
    if (cmd == "gamma") table = run_gamma(s);
    else if (cmd == "nv-fi") table = run_nv(s);
    else if (cmd == "binning") table = run_binning(s);
    else if (cmd == "moments") table = run_moments(s);
    else if (cmd == "ghz-sweep") table = run_ghz(s);
    else if (cmd == "local-sweep") table = run_local(s);
    else if (cmd == "ce-sweep") table = run_ce(s);
    else if (cmd == "covariance-audit") table = run_audit(s);
    else table = run_photon(s);
  } catch (const capacity_exceeded& e) {
    std::cerr << "metroq: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "metroq: " << e.what() << '\n';
    return 2;
  }

  boost::crc_32_type crc;
  const std::string effective = cmd + '\n' + app.config_to_str(true, false);
  crc.process_bytes(effective.data(), effective.size());
  std::ostringstream header;
  header << "# metroq " << METROQ_VERSION << " seed=" << s.seed << " config_crc32=" << std::hex << crc.checksum();

  if (s.out.empty()) {
    write_table(std::cout, table, header.str());
  } else {
    std::ofstream f(s.out);
    if (!f) {
      std::cerr << "metroq: cannot open " << s.out << '\n';
      return 2;
    }
    write_table(f, table, header.str());
  }
  for (const auto& row : table.rows)
    if (!row.converged) return 3;
  return 0;
}
