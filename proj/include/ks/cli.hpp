#ifndef KS_CLI_HPP
#define KS_CLI_HPP

#include "ks/solver.hpp"
#include "ks/topology.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ks {

enum class OutputFormat { json, csv };

enum class ProbeKind { dirichlet_slope, mean_slope, mt, exp_lower, l2_upper };
ProbeKind parse_probe(const std::string& s);
std::string to_string(ProbeKind k);

/// Everything a subcommand needs. Defaults: unit square at resolution 64,
/// beta = rho = 0, 12 eigenpairs (grown automatically when a bracket needs
/// more), Lambda grid {10, 20, 40, 80}, 10 continuation steps.
struct RunConfig {
  std::string domain = "unit_square";
  std::string mesh_path;  // overrides domain when set
  int resolution = 64;
  std::optional<vec2> refine_at;  // graded refinement towards a point
  real refine_h = 1e-3;
  real beta = 0;
  real rho = 0;
  Eigen::Index eigen_count = 12;
  std::string out;  // stdout when empty
  OutputFormat format = OutputFormat::json;
  std::vector<real> lambda_grid{10, 20, 40, 80};
  ProbeKind probe = ProbeKind::dirichlet_slope;
  std::vector<Atom> atoms;  // probe measure; a default boundary atom when empty
  std::vector<real> sigma;  // probe sphere point; e_1 when empty
  real t = 0;
  bool compact = false;  // mt probe on a field cut off at the boundary
  int steps = 10;
  std::optional<real> beta_end, rho_end;
  bool exhaustive = false;
  SolverOptions solver;
};

/// Exit codes: analyze 0 guaranteed, 1 not guaranteed, 2 degenerate; solve 0
/// nontrivial, 1 trivial only; 3 for any error.
int exit_code(Verdict v);
int exit_code(const SeedReport& r);
int exit_code(StopReason s);

Mesh build_mesh(const RunConfig& cfg);

int cmd_analyze(const RunConfig& cfg, std::ostream& out);
int cmd_spectrum(const RunConfig& cfg, std::ostream& out);
int cmd_probe(const RunConfig& cfg, std::ostream& out);
int cmd_solve(const RunConfig& cfg, std::ostream& out);
int cmd_continuation(const RunConfig& cfg, std::ostream& out);

/// Parses flags (and an optional key=value config file) and dispatches.
/// Errors are reported on `err` and mapped to exit code 3.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ks

#endif  // KS_CLI_HPP
