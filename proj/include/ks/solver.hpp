#ifndef KS_SOLVER_HPP
#define KS_SOLVER_HPP

#include "ks/barycenter.hpp"
#include "ks/common.hpp"
#include "ks/energy.hpp"
#include "ks/testfn.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ks {

enum class Classification { trivial, nontrivial, diverged };
std::string to_string(Classification c);
Classification parse_classification(const std::string& s);

struct SolverOptions {
  real flow_tol = 1e-6;
  int flow_budget = 2000;
  real newton_tol = 1e-10;  // relative to max(1, initial residual)
  int newton_max_iterations = 30;
  real morse_guard = 1e-8;
  Eigen::Index morse_count = 12;
  real blowup_norm_cap = 1e3;
  real dedup_tol = 1e-3;
};

struct SolveResult {
  Field u;
  Parameters params;
  real residual = 0;
  real energy = 0;
  Classification classification = Classification::diverged;
  std::optional<Eigen::Index> morse_index;
  int iterations = 0;
  std::optional<TestConfig> seed;  // absent for the zero seed or plain fields
  std::string note;
};

/// ||u||_{H1} below 1e-4 (1 + |beta| + rho) counts as the trivial solution.
real triviality_tol(const Parameters& p);

/// Explicit gradient flow u <- u - tau G(u). The step halves when the energy
/// would increase and grows by 1.2 after an accepted step. Stops when the
/// residual drops below flow_tol; results that do not converge within the
/// budget or blow up are classified diverged.
SolveResult flow(const FeSpace& space, const Field& seed, const Parameters& p, int step_budget,
                 const SolverOptions& opt = {});

/// Damped Newton iteration on the zero-mean space. Each step solves the
/// bordered system
///   [ A   b     m ] [du]   [-r]
///   [ b'  -1/rho 0 ] [s ] = [ 0]
///   [ m'  0     0 ] [mu]   [ 0]
/// which is the Hessian A + rho b b' with the mean constraint. Throws a
/// singular error when the system cannot be factored and a convergence error
/// after newton_max_iterations.
SolveResult newton(const FeSpace& space, const Field& u0, const Parameters& p, const SolverOptions& opt = {});

/// Newton on the deflated residual (prod_r (1/|u - r|^2 + 1)) F(u), which
/// keeps the iteration away from the known critical points r (H1 norm).
SolveResult deflated_newton(const FeSpace& space, const Field& u0, const Parameters& p,
                            const std::vector<Field>& known, const SolverOptions& opt = {});

/// Lowest `count` eigenvalues of the Hessian pencil (J''(u), M) on zero-mean
/// fields, ascending.
vec hessian_eigenvalues(const FeSpace& space, const Field& u, const Parameters& p, Eigen::Index count);

/// Number of negative Hessian eigenvalues among the lowest `count`. Throws a
/// singular error when one of them is within `guard` of zero and a
/// precondition error when all of them are negative.
Eigen::Index morse_index_at(const FeSpace& space, const Field& u, const Parameters& p, Eigen::Index count,
                            real guard = 1e-8);

enum class BlowupKind { interior_like, boundary_like, none };
std::string to_string(BlowupKind k);

struct BlowupCandidate {
  vec2 point = vec2::Zero();
  real local_mass = 0;  // rho times the share of e^u in the ball
  AtomTag tag = AtomTag::interior;
};

struct BlowupDiagnostic {
  std::vector<BlowupCandidate> candidates;  // heaviest first
  BlowupKind interpretation = BlowupKind::none;
};

/// Local maxima of e^u whose ball of the given radius holds more than twice
/// the uniform share, with their local masses. The heaviest candidate is
/// compared with 8 pi and 4 pi at 15% tolerance.
BlowupDiagnostic local_mass(const FeSpace& space, const Field& u, const Parameters& p, real radius);

enum class StopReason { completed, resonance, newton_failure, blowup };
std::string to_string(StopReason r);

struct ContinuationResult {
  std::vector<SolveResult> steps;
  StopReason stop = StopReason::completed;
  std::string note;
};

/// Newton continuation along the straight path from `start` to `end` in
/// `steps` steps, warm-started from u0. Every parameter point is checked for
/// resonance against the eigenvalues, and a change of the mass index K
/// between consecutive points (crossing 4 pi N) stops the run.
ContinuationResult continuation(const FeSpace& space, const vec& eigenvalues, const Parameters& start,
                                const Parameters& end, int steps, const Field& u0, const SolverOptions& opt = {});

struct SeedReport {
  std::vector<SolveResult> solutions;  // distinct critical points, nontrivial first
  int seeds_tried = 0;
  int newton_failures = 0;
  bool found_nontrivial() const;
};

/// Test-function seeds: measures with 2l + m <= K on interior and boundary
/// lattice candidates, sphere points +-e_i (i <= I), t in {0, 1/2, 1} and
/// Lambda in {30, 100}, followed by small multiples of the eigenfunctions
/// near the trivial solution. Stops at the first nontrivial critical point
/// unless `exhaustive` is set.
std::vector<TestConfig> seed_configs(const FeSpace& space, Eigen::Index k, Eigen::Index i);
SeedReport find_nontrivial(const FeSpace& space, const SpectralBasis& basis, const Parameters& p,
                           const SolverOptions& opt = {}, bool exhaustive = false);

}  // namespace ks

#endif  // KS_SOLVER_HPP
