#include "ks/cli.hpp"

#include "ks/io.hpp"
#include "ks/testfn.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace ks {

ProbeKind parse_probe(const std::string& s) {
  if (s == "dirichlet_slope") return ProbeKind::dirichlet_slope;
  if (s == "mean_slope") return ProbeKind::mean_slope;
  if (s == "mt") return ProbeKind::mt;
  if (s == "exp_lower") return ProbeKind::exp_lower;
  if (s == "l2_upper") return ProbeKind::l2_upper;
  throw Error(ErrorKind::parse, "unknown probe '" + s + "'");
}

std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::dirichlet_slope: return "dirichlet_slope";
    case ProbeKind::mean_slope: return "mean_slope";
    case ProbeKind::mt: return "mt";
    case ProbeKind::exp_lower: return "exp_lower";
    case ProbeKind::l2_upper: return "l2_upper";
  }
  return "?";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::guaranteed_nontrivial: return 0;
    case Verdict::not_guaranteed: return 1;
    case Verdict::degenerate: return 2;
  }
  return 3;
}

int exit_code(const SeedReport& r) {
  if (r.found_nontrivial()) return 0;
  return r.solutions.empty() ? 3 : 1;
}

int exit_code(StopReason s) { return s == StopReason::completed ? 0 : 1; }

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

real to_real(const std::string& s) {
  std::size_t used = 0;
  real x = 0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse, "not a number: '" + s + "'");
  }
  if (used != s.size()) throw Error(ErrorKind::parse, "not a number: '" + s + "'");
  return x;
}

vec2 parse_point(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw Error(ErrorKind::parse, "expected 'x,y', got '" + s + "'");
  return {to_real(parts[0]), to_real(parts[1])};
}

// "x,y,tag" or "x,y,tag,w"; unweighted atoms share the mass equally.
std::vector<Atom> parse_atoms(const std::vector<std::string>& specs) {
  std::vector<Atom> atoms;
  bool weighted = false;
  for (const auto& s : specs) {
    const auto parts = split(s, ',');
    if (parts.size() != 3 && parts.size() != 4) throw Error(ErrorKind::parse, "expected 'x,y,tag[,w]', got '" + s + "'");
    Atom a{{to_real(parts[0]), to_real(parts[1])}, 1, parse_atom_tag(parts[2])};
    if (parts.size() == 4) {
      a.weight = to_real(parts[3]);
      weighted = true;
    }
    atoms.push_back(a);
  }
  if (!weighted)
    for (auto& a : atoms) a.weight = 1.0 / real(atoms.size());
  return atoms;
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) out << text;
  else write_file(cfg.out, text);
}

// Spectrum large enough that every requested threshold is bracketed.
SpectralBasis spectrum_for(const FeSpace& space, const RunConfig& cfg, const std::vector<real>& thresholds) {
  Eigen::Index count = std::max<Eigen::Index>(cfg.eigen_count, 1);
  const Eigen::Index cap = space.size() - 1;
  for (;;) {
    count = std::min(count, cap);
    SpectralBasis b = eigenpairs(space.mesh(), count);
    bool enough = true;
    for (real th : thresholds)
      if (b.eigenvalues(b.size() - 1) < -th) enough = false;
    if (enough || count == cap) return b;
    count *= 2;
  }
}

BarycenterMeasure probe_measure(const Mesh& mesh, const RunConfig& cfg) {
  BarycenterMeasure mu;
  if (cfg.atoms.empty()) {
    // default: one boundary atom at the bottom of the domain
    vec2 c = mesh.vertices.rowwise().mean();
    vec2 p = nearest_boundary_point(mesh, vec2(c.x(), mesh.vertices.row(1).minCoeff() - 1));
    mu.atoms.push_back({p, 1, AtomTag::boundary});
  } else {
    mu.atoms = cfg.atoms;
  }
  validate(mesh, mu);
  return mu;
}

std::string pass(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

Mesh build_mesh(const RunConfig& cfg) {
  Mesh m = cfg.mesh_path.empty() ? build_builtin(cfg.domain, cfg.resolution) : load_mesh(read_file(cfg.mesh_path));
  if (cfg.refine_at) m = refine_toward(m, *cfg.refine_at, cfg.refine_h);
  return m;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  FeSpace space(build_mesh(cfg));
  const Parameters p{cfg.beta, cfg.rho};
  const SpectralBasis b = spectrum_for(space, cfg, {p.beta, p.beta - p.rho / space.area()});
  const ConditionReport r = analyze(p, space.area(), space.mesh().genus, b.eigenvalues);
  emit(cfg, out, cfg.format == OutputFormat::json ? to_json(r).dump(2) + "\n" : render_report(r));
  return exit_code(r.verdict);
}

int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  const SpectralBasis b = eigenpairs(build_mesh(cfg), cfg.eigen_count);
  if (cfg.format == OutputFormat::csv) {
    emit(cfg, out, spectrum_csv(b.eigenvalues));
  } else {
    json j = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) j.push_back(round12(b.eigenvalues(i)));
    emit(cfg, out, json{{"eigenvalues", j}}.dump(2) + "\n");
  }
  return 0;
}

int cmd_probe(const RunConfig& cfg, std::ostream& out) {
  FeSpace space(build_mesh(cfg));
  const Parameters p{cfg.beta, cfg.rho};
  const Eigen::Index tail = cfg.sigma.empty() ? 1 : Eigen::Index(cfg.sigma.size());
  RunConfig sized = cfg;
  sized.eigen_count = std::max(cfg.eigen_count, tail);
  const SpectralBasis b = spectrum_for(space, sized, {});
  JoinPoint z;
  z.t = cfg.t;
  if (cfg.t < 1) z.measure = probe_measure(space.mesh(), cfg);
  z.sphere = vec::Zero(tail);
  if (cfg.sigma.empty()) z.sphere(0) = 1;
  else
    for (Eigen::Index i = 0; i < tail; ++i) z.sphere(i) = cfg.sigma[i];
  if (cfg.t > 0) {
    const real n = z.sphere.norm();
    if (!(n > 0)) throw Error(ErrorKind::invalid_argument, "sigma must be nonzero");
    z.sphere /= n;
  }

  const auto rows = probe_grid(space, b, z, cfg.lambda_grid, p);
  std::ostringstream line;
  bool ok = true;
  const FrozenBounds fb;
  std::vector<real> bubble_scales;
  for (real L : cfg.lambda_grid) bubble_scales.push_back(L * (1 - cfg.t));

  switch (cfg.probe) {
    case ProbeKind::dirichlet_slope: {
      if (cfg.t < 1) {
        const int k = z.measure.weighted_count();
        const real expected = 16 * pi * k, tol = k >= 3 ? 0.04 : 0.03;
        const SlopeFit f = dirichlet_slope(space, z.measure, bubble_scales);
        ok = std::abs(f.slope - expected) <= tol * expected;
        line << "slope " << fmt12(f.slope) << " expected " << fmt12(expected);
      } else {
        // pure tail: the Dirichlet energy grows like lambda_I log Lambda at most
        std::vector<real> x, y;
        for (const auto& r : rows) {
          x.push_back(std::log(r.lambda));
          y.push_back(r.dirichlet);
        }
        const SlopeFit f = fit_line(x, y);
        const real bound = b.eigenvalues(tail - 1);
        ok = f.slope <= bound * (1 + 1e-8) + 1e-8;
        line << "slope " << fmt12(f.slope) << " expected <= " << fmt12(bound);
      }
      break;
    }
    case ProbeKind::mean_slope: {
      if (cfg.t >= 1) throw Error(ErrorKind::invalid_argument, "mean_slope needs a bubble (t < 1)");
      const SlopeFit f = mean_slope(space, z.measure, bubble_scales);
      ok = std::abs(f.slope + 4) <= 0.05 * 4;
      line << "slope " << fmt12(f.slope) << " expected -4";
      break;
    }
    case ProbeKind::mt: {
      if (cfg.t >= 1) throw Error(ErrorKind::invalid_argument, "mt needs a bubble (t < 1)");
      const Mesh& mesh = space.mesh();
      real first = 0, worst = -std::numeric_limits<real>::infinity();
      for (std::size_t s = 0; s < bubble_scales.size(); ++s) {
        Field u = bubble_raw(mesh, z.measure, bubble_scales[s]);
        if (cfg.compact) {
          // cut off at the largest boundary value
          real top = -std::numeric_limits<real>::infinity();
          for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v)
            if (mesh.boundary_vertex[v]) top = std::max(top, u(v));
          u = (u.array() - top).max(0.0);
        }
        const real stat = mt_probe(space, u, cfg.compact);
        if (s == 0) first = stat;
        worst = std::max(worst, stat);
      }
      ok = worst <= first + 1;
      line << "max statistic " << fmt12(worst) << " expected <= " << fmt12(first + 1);
      break;
    }
    case ProbeKind::exp_lower: {
      real worst = std::numeric_limits<real>::infinity();
      for (real L : cfg.lambda_grid)
        worst = std::min(worst, exp_lower_statistic(space, phi_lambda(space, b, {L, z}), L, cfg.t, fb.exp_c));
      ok = worst > fb.exp_floor;
      line << "min statistic " << fmt12(worst) << " expected > " << fmt12(fb.exp_floor);
      break;
    }
    case ProbeKind::l2_upper: {
      real worst = -std::numeric_limits<real>::infinity();
      for (real L : cfg.lambda_grid)
        worst = std::max(worst, l2_upper_statistic(space, phi_lambda(space, b, {L, z}), L, cfg.t, fb.l2_c));
      ok = worst < fb.l2_ceiling;
      line << "max statistic " << fmt12(worst) << " expected < " << fmt12(fb.l2_ceiling);
      break;
    }
  }
  line << ' ' << pass(ok) << '\n';
  emit(cfg, out, probe_csv(rows));
  out << line.str();
  return ok ? 0 : 1;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  FeSpace space(build_mesh(cfg));
  const Parameters p{cfg.beta, cfg.rho};
  const SpectralBasis b = spectrum_for(space, cfg, {p.beta, p.beta - p.rho / space.area()});
  const SeedReport rep = find_nontrivial(space, b, p, cfg.solver, cfg.exhaustive);
  const int code = exit_code(rep);
  if (rep.solutions.empty()) throw Error(ErrorKind::convergence, "no seed converged");
  const SolveResult& best = rep.solutions.front();
  json j = to_json(best);
  j["distinct_solutions"] = rep.solutions.size();
  j["seeds_tried"] = rep.seeds_tried;
  if (best.classification == Classification::nontrivial) j["blowup"] = to_json(local_mass(space, best.u, p, 0.2));
  emit(cfg, out, j.dump(2) + "\n");
  std::cerr << to_string(best.classification) << " residual " << fmt12(best.residual) << " energy " << fmt12(best.energy)
            << " seeds " << rep.seeds_tried << '\n';
  return code;
}

int cmd_continuation(const RunConfig& cfg, std::ostream& out) {
  FeSpace space(build_mesh(cfg));
  const Parameters start{cfg.beta, cfg.rho};
  const Parameters end{cfg.beta_end.value_or(cfg.beta), cfg.rho_end.value_or(cfg.rho)};
  const SpectralBasis b = spectrum_for(space, cfg,
                                       {start.beta, end.beta, start.beta - start.rho / space.area(),
                                        end.beta - end.rho / space.area()});
  const SeedReport rep = find_nontrivial(space, b, start, cfg.solver, false);
  if (rep.solutions.empty()) throw Error(ErrorKind::convergence, "no starting solution");
  const ContinuationResult c = continuation(space, b.eigenvalues, start, end, cfg.steps, rep.solutions.front().u, cfg.solver);
  if (cfg.format == OutputFormat::csv) {
    emit(cfg, out, continuation_csv(space, c));
  } else {
    json steps = json::array();
    for (const auto& s : c.steps) steps.push_back(to_json(s));
    emit(cfg, out, json{{"stop", to_string(c.stop)}, {"note", c.note}, {"steps", steps}}.dump(2) + "\n");
  }
  std::cerr << "stop " << to_string(c.stop) << (c.note.empty() ? "" : ": " + c.note) << '\n';
  return exit_code(c.stop);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical toolkit for the Neumann mean-field equation -Lu + beta u = rho (e^u / int e^u - 1/|Omega|)"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; flags override it");

  RunConfig cfg;
  std::string format = "json", probe = "dirichlet_slope", refine_at;
  std::vector<std::string> atoms;
  real beta_end = 0, rho_end = 0;

  app.add_option("--domain", cfg.domain, "builtin domain: unit_square, disk, annulus");
  app.add_option("--mesh", cfg.mesh_path, "mesh file (V T header, vertex and triangle lines)");
  app.add_option("--res", cfg.resolution, "builtin resolution");
  app.add_option("--refine-at", refine_at, "graded refinement towards x,y");
  app.add_option("--refine-h", cfg.refine_h, "finest edge length of the refinement");
  app.add_option("--beta", cfg.beta);
  app.add_option("--rho", cfg.rho);
  app.add_option("--eigs", cfg.eigen_count, "number of eigenpairs");
  app.add_option("--out", cfg.out, "output file (stdout by default)");
  app.add_option("--format", format, "json or csv");
  app.add_option("--lambda-grid", cfg.lambda_grid, "Lambda values")->delimiter(',');
  app.add_option("--probe", probe, "dirichlet_slope, mean_slope, mt, exp_lower, l2_upper");
  app.add_option("--atom", atoms, "probe atom x,y,tag[,w] (repeatable)");
  app.add_option("--sigma", cfg.sigma, "probe sphere point")->delimiter(',');
  app.add_option("--t", cfg.t, "join coordinate in [0, 1]");
  app.add_flag("--compact", cfg.compact, "mt probe on a field cut off at the boundary");
  app.add_option("--steps", cfg.steps, "continuation steps");
  auto* be = app.add_option("--beta-end", beta_end, "continuation end beta");
  auto* re = app.add_option("--rho-end", rho_end, "continuation end rho");
  app.add_flag("--exhaustive", cfg.exhaustive, "try every seed instead of stopping at the first solution");
  app.add_option("--newton-tol", cfg.solver.newton_tol);
  app.add_option("--newton-max-it", cfg.solver.newton_max_iterations);
  app.add_option("--dedup-tol", cfg.solver.dedup_tol);

  auto* analyze_cmd = app.add_subcommand("analyze", "indices, homology and existence verdict");
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Neumann eigenvalues");
  auto* probe_cmd = app.add_subcommand("probe", "test-function estimates over the Lambda grid");
  auto* solve_cmd = app.add_subcommand("solve", "seeded search for a nontrivial solution");
  auto* cont_cmd = app.add_subcommand("continuation", "Newton continuation in (beta, rho)");
  for (auto* s : {analyze_cmd, spectrum_cmd, probe_cmd, solve_cmd, cont_cmd}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 3;
  }

  try {
    if (const char* threads = std::getenv("KS_THREADS")) Eigen::setNbThreads(std::max(1, std::atoi(threads)));
    if (format == "json") cfg.format = OutputFormat::json;
    else if (format == "csv") cfg.format = OutputFormat::csv;
    else throw Error(ErrorKind::parse, "unknown format '" + format + "'");
    cfg.probe = parse_probe(probe);
    cfg.atoms = parse_atoms(atoms);
    if (!refine_at.empty()) cfg.refine_at = parse_point(refine_at);
    if (be->count() > 0) cfg.beta_end = beta_end;
    if (re->count() > 0) cfg.rho_end = rho_end;
    if (cfg.t < 0 || cfg.t > 1) throw Error(ErrorKind::invalid_argument, "t must lie in [0, 1]");
    if (cfg.steps < 1) throw Error(ErrorKind::invalid_argument, "steps must be positive");

    if (analyze_cmd->parsed()) return cmd_analyze(cfg, out);
    if (spectrum_cmd->parsed()) return cmd_spectrum(cfg, out);
    if (probe_cmd->parsed()) return cmd_probe(cfg, out);
    if (solve_cmd->parsed()) return cmd_solve(cfg, out);
    return cmd_continuation(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace ks
