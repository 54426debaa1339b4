// Command-line front end for the reduced ABJM vortex solver suite.
//
//   abjm-vortex matrix --a <value> --m <int>
//   abjm-vortex check  --config PATH
//   abjm-vortex solve  --config PATH [--out DIR]
//   abjm-vortex scan   --config PATH --param lambda|area --range lo:hi:steps [--out DIR]
//
// Exit codes: 0 success (check: all existence conditions hold),
//             1 numerical failure (check: some condition fails),
//             2 certified nonexistence (solve on an infeasible torus config),
//             64 usage or configuration error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "abjm/background.hpp"
#include "abjm/config.hpp"
#include "abjm/coupling.hpp"
#include "abjm/diagnostics.hpp"
#include "abjm/errors.hpp"
#include "abjm/io.hpp"
#include "abjm/planar.hpp"
#include "abjm/torus.hpp"

namespace {

using namespace abjm;

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitNonexistent = 2;
constexpr int kExitUsage = 64;

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n"
            << "usage:\n"
            << "  abjm-vortex matrix --a <value> --m <int>\n"
            << "  abjm-vortex check  --config PATH\n"
            << "  abjm-vortex solve  --config PATH [--out DIR]\n"
            << "  abjm-vortex scan   --config PATH --param lambda|area --range lo:hi:steps"
            << " [--out DIR]\n";
  std::exit(kExitUsage);
}

std::map<std::string, std::string> parse_flags(int argc, char** argv, int first) {
  std::map<std::string, std::string> flags;
  for (int i = first; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) != 0) usage_error("unexpected argument '" + a + "'");
    if (i + 1 >= argc) usage_error("flag '" + a + "' needs a value");
    flags[a.substr(2)] = argv[++i];
  }
  return flags;
}

std::string require_flag(const std::map<std::string, std::string>& flags,
                         const std::string& name) {
  auto it = flags.find(name);
  if (it == flags.end()) usage_error("missing required flag --" + name);
  return it->second;
}

void print_matrix(const char* name, const SquareMatrix& M) {
  std::printf("%s:\n", name);
  for (int i = 0; i < M.size(); ++i) {
    std::printf(" ");
    for (int j = 0; j < M.size(); ++j) std::printf(" %.12g", M(i, j));
    std::printf("\n");
  }
}

void print_vector(const char* name, const std::vector<double>& v) {
  std::printf("%s = (", name);
  for (std::size_t i = 0; i < v.size(); ++i) std::printf("%s%.12g", i ? ", " : "", v[i]);
  std::printf(")\n");
}

int cmd_matrix(const std::map<std::string, std::string>& flags) {
  double a = 0.0;
  int m = 0;
  try {
    a = std::stod(require_flag(flags, "a"));
    m = std::stoi(require_flag(flags, "m"));
  } catch (const std::exception&) {
    usage_error("--a expects a real number and --m an integer");
  }
  CouplingMatrix cm;
  try {
    cm = make_coupling_matrix(a, m);
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
  std::printf("coupling matrix family: a = %.12g, m = %d\n", a, m);
  print_matrix("R", cm.R);
  print_vector("minors", cm.minors);
  print_matrix("L", cm.L);
  print_matrix("Linv", cm.Linv);
  print_matrix("Rinv", cm.Rinv);
  print_vector("r", cm.r);
  std::printf("lambda0 = %.12g\n", cm.lambda0);
  return kExitOk;
}

int cmd_check(const std::map<std::string, std::string>& flags) {
  RunConfig cfg = parse_config_file(require_flag(flags, "config"));
  if (cfg.kind != RunConfig::Kind::Torus)
    throw ConfigError("domain.kind: existence conditions apply to torus domains only");
  cfg.vortices.validate(cfg.model.m);

  const CouplingMatrix cm = make_coupling_matrix(cfg.model.a, cfg.model.m);
  const ExistenceCheck chk = check_torus_existence(cm, cfg.model.lambda, cfg.vortices.counts(),
                                                   cfg.L1 * cfg.L2);
  for (std::size_t i = 0; i < chk.conditions.size(); ++i) {
    const ExistenceCondition& c = chk.conditions[i];
    std::printf("condition %zu: lhs = %.12g  rhs = %.12g  holds = %d  K = %.12g\n", i + 1, c.lhs,
                c.rhs, c.holds ? 1 : 0, c.K);
  }
  if (chk.all_hold) {
    std::printf("verdict: all %zu conditions hold\n", chk.conditions.size());
    return kExitOk;
  }
  std::printf("verdict: condition %d violated (no doubly periodic solution)\n",
              chk.first_violated());
  return kExitNumerical;
}

// Resolve nu and the disk grid together; the auto radius depends on nu
// through the 5 sqrt(nu) term, so tune on the provisional grid and rebuild
// until the value settles.
struct DiskSetup {
  DiskGrid grid;
  double nu = 1.0;
  int nu_doublings = 0;
  bool nu_tuned = false;
};

DiskGrid build_disk_grid(const RunConfig& cfg, const CouplingMatrix& cm, double nu) {
  if (cfg.radius_auto && cfg.disk_n_auto) return auto_disk_grid(cfg.model, cm, cfg.vortices, nu);
  const double rate = std::sqrt(cfg.model.lambda * cm.lambda0);
  double radius = cfg.radius;
  if (cfg.radius_auto)
    radius = std::max({20.0 / rate, 3.0 * cfg.vortices.max_radius(), 5.0 * std::sqrt(nu)});
  int n = cfg.disk_n;
  if (cfg.disk_n_auto) n = 2 * std::max(8, static_cast<int>(std::ceil(radius / (0.2 / rate)))) + 1;
  return DiskGrid::make(radius, n);
}

DiskSetup resolve_disk(const RunConfig& cfg, const CouplingMatrix& cm) {
  DiskSetup s;
  if (!cfg.nu_auto) {
    s.nu = cfg.model.nu;
    s.grid = build_disk_grid(cfg, cm, s.nu);
    return s;
  }
  s.nu = 1.0;
  s.nu_tuned = true;
  for (int round = 0; round < 6; ++round) {
    s.grid = build_disk_grid(cfg, cm, s.nu);
    const NuTuneResult tuned = autotune_nu(cfg.vortices, s.grid, cm, cfg.model.lambda);
    s.nu_doublings = tuned.doublings;
    if (tuned.nu == s.nu) return s;
    s.nu = tuned.nu;
  }
  s.grid = build_disk_grid(cfg, cm, s.nu);
  return s;
}

void add_model_keys(Report& rep, const ModelParams& p) {
  rep.add("model.m", p.m);
  rep.add("model.N", p.m + 1);
  rep.add("model.a", p.a);
  rep.add("model.lambda", p.lambda);
  rep.add("model.mu", p.mu());
  rep.add("model.k", p.k);
  rep.add("model.s", p.s);
}

void add_vortex_keys(Report& rep, const VortexConfiguration& v) {
  const std::vector<int> n = v.counts();
  std::string counts;
  for (std::size_t i = 0; i < n.size(); ++i) counts += (i ? "," : "") + std::to_string(n[i]);
  rep.add("vortex.counts", counts);
  rep.add("vortex.total", v.total());
}

void add_convergence_keys(Report& rep, const FieldState& st) {
  rep.add("result.converged", st.converged);
  rep.add("result.iterations", st.iterations);
  rep.add("result.residual_sup", st.residual_sup);
  rep.add("result.gradient_sup", st.gradient_sup);
  rep.add("result.functional", st.functional_value);
}

void add_quantized_keys(Report& rep, const std::vector<QuantizedIntegral>& qi) {
  for (std::size_t i = 0; i < qi.size(); ++i) {
    const std::string base = "quantized." + std::to_string(i + 1);
    rep.add(base + ".computed", qi[i].computed);
    rep.add(base + ".target", qi[i].target);
    rep.add(base + ".abs_error", std::abs(qi[i].computed - qi[i].target));
  }
}

void write_state_files(const std::filesystem::path& dir, const FieldState& st, double dx,
                       double dy) {
  for (int i = 0; i < st.u.species(); ++i) {
    write_field(dir / ("u_" + std::to_string(i + 1) + ".f64"), st.u.field(i), st.u.nx(),
                st.u.ny(), dx, dy);
    write_field(dir / ("exp_u_" + std::to_string(i + 1) + ".f64"), st.exp_u.field(i),
                st.exp_u.nx(), st.exp_u.ny(), dx, dy);
  }
}

int solve_disk(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const CouplingMatrix cm = make_coupling_matrix(cfg.model.a, cfg.model.m);
  const DiskSetup setup = resolve_disk(cfg, cm);
  const PlanarBackground bg =
      make_planar_background(cfg.vortices, setup.grid, setup.nu, cm, cfg.model.lambda);

  PlanarOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.boundary = cfg.boundary;

  FieldState st = solve_planar(cfg.vortices, cfg.model, setup.grid, cm, bg, opts);
  const DecayFit fit = decay_fit(st, cm, cfg.model, setup.grid);
  const auto qi = quantized_integrals(st, cm, cfg.model, cfg.vortices.counts(), setup.grid);

  Report rep;
  add_model_keys(rep, cfg.model);
  rep.add("domain.kind", std::string("disk"));
  rep.add("domain.radius", setup.grid.radius);
  rep.add("grid.n", setup.grid.n);
  rep.add("grid.spacing", setup.grid.h);
  rep.add("grid.interior_nodes", static_cast<int>(setup.grid.interior_count));
  add_vortex_keys(rep, cfg.vortices);
  rep.add("solver.tol", cfg.tol);
  rep.add("solver.max_iter", cfg.max_iter);
  rep.add("solver.boundary",
          std::string(cfg.boundary == PlanarBoundary::AsymptoticLnR ? "lnr" : "zero"));
  rep.add("solver.nu", setup.nu);
  rep.add("solver.nu_autotuned", setup.nu_tuned);
  if (setup.nu_tuned) rep.add("solver.nu_doublings", setup.nu_doublings);
  rep.add("background.regularized_nodes", bg.regularized_nodes);
  add_convergence_keys(rep, st);
  add_quantized_keys(rep, qi);
  rep.add("decay.skipped", fit.skipped);
  rep.add("decay.degenerate", fit.degenerate);
  if (!fit.skipped && !fit.degenerate) {
    rep.add("decay.sigma_fit", fit.sigma_fit);
    rep.add("decay.reference", fit.reference);
    rep.add("decay.samples", fit.samples);
    rep.add("decay.pass", fit.pass);
  }

  write_text_file(out_dir / "report.txt", rep.text());
  write_state_files(out_dir, st, setup.grid.h, setup.grid.h);

  std::vector<std::pair<double, std::size_t>> samples;
  const int mid = (setup.grid.n - 1) / 2;
  for (int ix = mid; ix < setup.grid.n; ++ix)
    samples.emplace_back(setup.grid.x(ix), setup.grid.idx(ix, mid));
  write_profile_csv(out_dir / "profile.csv", st, samples, "r");

  std::printf("converged in %d iterations, residual %.3e\n", st.iterations, st.residual_sup);
  std::printf("report: %s\n", (out_dir / "report.txt").c_str());
  return kExitOk;
}

int solve_torus_cmd(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const CouplingMatrix cm = make_coupling_matrix(cfg.model.a, cfg.model.m);
  const TorusGrid grid = TorusGrid::make(cfg.L1, cfg.L2, cfg.nx, cfg.ny);
  const TorusBackground bg = make_torus_background(cfg.vortices, grid);

  TorusOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.near_threshold_max_iter = std::max(cfg.max_iter, 2000);

  TorusSolveResult res = solve_torus(cfg.vortices, cfg.model, grid, cm, bg, opts);

  Report rep;
  add_model_keys(rep, cfg.model);
  rep.add("domain.kind", std::string("torus"));
  rep.add("domain.L1", grid.L1);
  rep.add("domain.L2", grid.L2);
  rep.add("domain.area", grid.area());
  rep.add("grid.nx", grid.nx);
  rep.add("grid.ny", grid.ny);
  add_vortex_keys(rep, cfg.vortices);
  rep.add("solver.tol", cfg.tol);
  rep.add("solver.max_iter", cfg.max_iter);
  rep.add("background.source_residual", bg.source_residual);

  for (std::size_t i = 0; i < res.report.existence.conditions.size(); ++i) {
    const ExistenceCondition& c = res.report.existence.conditions[i];
    const std::string base = "existence." + std::to_string(i + 1);
    rep.add(base + ".lhs", c.lhs);
    rep.add(base + ".rhs", c.rhs);
    rep.add(base + ".holds", c.holds);
    rep.add(base + ".K", c.K);
  }
  rep.add("existence.all", res.report.existence.all_hold);

  if (res.report.nonexistent) {
    rep.add("result.converged", false);
    rep.add("result.nonexistent", true);
    rep.add("result.violated_condition", res.report.existence.first_violated());
    write_text_file(out_dir / "report.txt", rep.text());
    std::printf("nonexistence certificate: condition %d fails (K_%d <= 0)\n",
                res.report.existence.first_violated(), res.report.existence.first_violated());
    std::printf("report: %s\n", (out_dir / "report.txt").c_str());
    return kExitNonexistent;
  }

  rep.add("result.nonexistent", false);
  add_convergence_keys(rep, res.state);
  for (std::size_t i = 0; i < res.report.K.size(); ++i) {
    const std::string base = "constraint." + std::to_string(i + 1);
    rep.add(base + ".K", res.report.K[i]);
    rep.add(base + ".integral", res.report.constraint_integral[i]);
    rep.add(base + ".residual", res.report.constraint_residual[i]);
  }

  const auto qi = quantized_integrals(res.state, cm, cfg.model, bg.counts, grid);
  add_quantized_keys(rep, qi);

  const FluxResult flux = total_flux(res.state, cm, cfg.model, grid, bg);
  rep.add("flux.numeric", flux.numeric);
  rep.add("flux.closed_form", flux.closed_form);
  rep.add("flux.rel_error", flux.rel_error);
  if (cfg.model.a == 0.0) {
    rep.add("energy.a0", energy_a0(cfg.model, bg.counts));
  }

  write_text_file(out_dir / "report.txt", rep.text());
  write_state_files(out_dir, res.state, grid.dx(), grid.dy());

  std::vector<std::pair<double, std::size_t>> samples;
  for (int ix = 0; ix < grid.nx; ++ix) samples.emplace_back(grid.x(ix), grid.idx(ix, 0));
  write_profile_csv(out_dir / "profile.csv", res.state, samples, "x");

  std::printf("converged in %d iterations, residual %.3e\n", res.state.iterations,
              res.state.residual_sup);
  std::printf("report: %s\n", (out_dir / "report.txt").c_str());
  return kExitOk;
}

int cmd_solve(const std::map<std::string, std::string>& flags) {
  RunConfig cfg = parse_config_file(require_flag(flags, "config"));
  cfg.vortices.validate(cfg.model.m);
  std::filesystem::path out_dir = cfg.out_dir.empty() ? "out" : cfg.out_dir;
  if (auto it = flags.find("out"); it != flags.end()) out_dir = it->second;
  std::filesystem::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  int code;
  try {
    code = (cfg.kind == RunConfig::Kind::Disk) ? solve_disk(cfg, out_dir)
                                               : solve_torus_cmd(cfg, out_dir);
  } catch (const NonConvergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (!e.residual_history.empty()) {
      std::cerr << "residual history:";
      for (double r : e.residual_history) std::cerr << " " << r;
      std::cerr << "\n";
    }
    return kExitNumerical;
  } catch (const DivergedIterateError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
  // Timing stays on stdout; report files are byte-stable across runs.
  std::printf("wall_time_seconds %.3f\n", elapsed.count());
  return code;
}

int cmd_scan(const std::map<std::string, std::string>& flags) {
  RunConfig cfg = parse_config_file(require_flag(flags, "config"));
  cfg.vortices.validate(cfg.model.m);
  if (cfg.kind != RunConfig::Kind::Torus)
    throw ConfigError("domain.kind: scans apply to torus domains only");

  const std::string param = require_flag(flags, "param");
  if (param != "lambda" && param != "area")
    usage_error("--param must be 'lambda' or 'area'");

  const std::string range = require_flag(flags, "range");
  double lo = 0.0, hi = 0.0;
  int steps = 0;
  {
    const std::size_t c1 = range.find(':');
    const std::size_t c2 = (c1 == std::string::npos) ? std::string::npos : range.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      usage_error("--range expects lo:hi:steps");
    try {
      lo = std::stod(range.substr(0, c1));
      hi = std::stod(range.substr(c1 + 1, c2 - c1 - 1));
      steps = std::stoi(range.substr(c2 + 1));
    } catch (const std::exception&) {
      usage_error("--range expects lo:hi:steps with numeric bounds");
    }
    if (steps < 1 || hi < lo) usage_error("--range expects lo <= hi and steps >= 1");
  }

  std::filesystem::path out_dir = cfg.out_dir.empty() ? "out" : cfg.out_dir;
  if (auto it = flags.find("out"); it != flags.end()) out_dir = it->second;
  std::filesystem::create_directories(out_dir);

  std::vector<double> values(steps);
  for (int i = 0; i < steps; ++i)
    values[i] = (steps == 1) ? lo : lo + (hi - lo) * i / static_cast<double>(steps - 1);

  const CouplingMatrix cm = make_coupling_matrix(cfg.model.a, cfg.model.m);
  TorusOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.near_threshold_max_iter = std::max(cfg.max_iter, 2000);

  std::vector<ScanRow> rows;
  if (param == "lambda") {
    const TorusGrid grid = TorusGrid::make(cfg.L1, cfg.L2, cfg.nx, cfg.ny);
    const TorusBackground bg = make_torus_background(cfg.vortices, grid);
    rows = threshold_scan(cfg.vortices, cfg.model, grid, cm, bg, values, opts);
  } else {
    // Area scan: rescale the cell isotropically to each target area.
    for (double area : values) {
      const double scale = std::sqrt(area / (cfg.L1 * cfg.L2));
      const TorusGrid grid = TorusGrid::make(cfg.L1 * scale, cfg.L2 * scale, cfg.nx, cfg.ny);
      const TorusBackground bg = make_torus_background(cfg.vortices, grid);
      std::vector<ScanRow> one =
          threshold_scan(cfg.vortices, cfg.model, grid, cm, bg, {cfg.model.lambda}, opts);
      one[0].value = area;
      rows.push_back(std::move(one[0]));
    }
  }

  const std::filesystem::path csv = out_dir / "scan.csv";
  write_scan_csv(csv, rows, param, cfg.model.m);
  int flips = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].feasible != rows[i - 1].feasible) ++flips;
  std::printf("scan rows: %zu, verdict flips: %d\n", rows.size(), flips);
  std::printf("csv: %s\n", csv.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) usage_error("missing subcommand");
  const std::string cmd = argv[1];
  try {
    const auto flags = parse_flags(argc, argv, 2);
    if (cmd == "matrix") return cmd_matrix(flags);
    if (cmd == "check") return cmd_check(flags);
    if (cmd == "solve") return cmd_solve(flags);
    if (cmd == "scan") return cmd_scan(flags);
    usage_error("unknown subcommand '" + cmd + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
