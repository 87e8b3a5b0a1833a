#include "ks/solver.hpp"

#include "ks/topology.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ks {

std::string to_string(Classification c) {
  switch (c) {
    case Classification::trivial: return "trivial";
    case Classification::nontrivial: return "nontrivial";
    case Classification::diverged: return "diverged";
  }
  return "?";
}

Classification parse_classification(const std::string& s) {
  if (s == "trivial") return Classification::trivial;
  if (s == "nontrivial") return Classification::nontrivial;
  if (s == "diverged") return Classification::diverged;
  throw Error(ErrorKind::parse, "unknown classification '" + s + "'");
}

std::string to_string(BlowupKind k) {
  switch (k) {
    case BlowupKind::interior_like: return "interior_like";
    case BlowupKind::boundary_like: return "boundary_like";
    case BlowupKind::none: return "none";
  }
  return "?";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::completed: return "completed";
    case StopReason::resonance: return "resonance";
    case StopReason::newton_failure: return "newton_failure";
    case StopReason::blowup: return "blowup";
  }
  return "?";
}

real triviality_tol(const Parameters& p) { return 1e-4 * (1 + std::abs(p.beta) + p.rho); }

namespace {

Classification classify(const FeSpace& space, const Field& u, const Parameters& p) {
  return space.h1_norm(u) < triviality_tol(p) ? Classification::trivial : Classification::nontrivial;
}

bool finite(const Field& u) { return u.allFinite(); }

}  // namespace

SolveResult flow(const FeSpace& space, const Field& seed, const Parameters& p, int step_budget,
                 const SolverOptions& opt) {
  SolveResult out;
  out.params = p;
  Field u = space.zero_mean(seed);
  real e = energy(space, u, p);
  Field g = gradient(space, u, p);
  real res = residual_norm(space, u, p);
  // explicit steps are stable below 2 / lambda_max(M^-1 K); start there
  const real h = space.mesh().min_edge_length();
  real tau = 0.1 * h * h;
  int it = 0;
  for (; it < step_budget && res >= opt.flow_tol; ++it) {
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      const Field trial = space.zero_mean(u - tau * g);
      const real et = energy(space, trial, p);
      // near a critical point the decrease falls below the rounding of log int e^u
      const real slack = 64 * std::numeric_limits<real>::epsilon() * (1 + std::abs(e) + std::abs(p.rho));
      if (std::isfinite(et) && et <= e + slack) {
        u = trial;
        e = et;
        accepted = true;
        tau *= 1.2;
      } else {
        tau *= 0.5;
      }
    }
    if (!accepted) {
      out.note = "step size underflow";
      break;
    }
    if (u.cwiseAbs().maxCoeff() > opt.blowup_norm_cap) {
      out.note = "sup norm exceeded the blow-up cap";
      break;
    }
    g = gradient(space, u, p);
    res = residual_norm(space, u, p);
  }
  out.u = u;
  out.energy = e;
  out.residual = res;
  out.iterations = it;
  if (!finite(u) || !std::isfinite(e)) out.classification = Classification::diverged;
  else if (res < opt.flow_tol) out.classification = classify(space, u, p);
  else {
    out.classification = Classification::diverged;
    if (out.note.empty()) out.note = "step budget exhausted";
  }
  return out;
}

namespace {

// Bordered Newton matrix; see the header for the block layout.
sparse bordered(const FeSpace& space, const HessianParts& h) {
  const Eigen::Index n = space.size();
  const bool rank_one = h.c != 0;
  const Eigen::Index size = n + 1 + (rank_one ? 1 : 0);
  const Eigen::Index row_m = rank_one ? n + 1 : n;
  std::vector<Eigen::Triplet<real>> trips;
  trips.reserve(h.a.nonZeros() + 4 * n + 1);
  for (Eigen::Index k = 0; k < h.a.outerSize(); ++k)
    for (sparse::InnerIterator it(h.a, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rank_one) {
      trips.emplace_back(i, n, h.b(i));
      trips.emplace_back(n, i, h.b(i));
    }
    trips.emplace_back(i, row_m, space.lumped()(i));
    trips.emplace_back(row_m, i, space.lumped()(i));
  }
  if (rank_one) trips.emplace_back(n, n, -1 / h.c);
  sparse out(size, size);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

// Product of the deflation factors 1/|u - r|^2 + 1 over the known roots, in
// the H1 norm, and the logarithmic derivative of that product along du.
struct Deflation {
  const FeSpace& space;
  const std::vector<Field>& roots;
  sparse h1;

  real factor(const Field& u) const {
    real f = 1;
    for (const auto& r : roots) {
      const Field d = u - r;
      f *= 1 / std::max(d.dot(h1 * d), real(1e-300)) + 1;
    }
    return f;
  }
  real log_slope(const Field& u, const Field& du) const {
    real s = 0;
    for (const auto& r : roots) {
      const Field d = u - r;
      const real q = std::max(d.dot(h1 * d), real(1e-300));
      s += (-2 * d.dot(h1 * du) / (q * q)) / (1 / q + 1);
    }
    return s;
  }
};

SolveResult newton_impl(const FeSpace& space, const Field& u0, const Parameters& p, const SolverOptions& opt,
                        const std::vector<Field>& roots) {
  SolveResult out;
  out.params = p;
  Field u = space.zero_mean(u0);
  if (!finite(u)) throw Error(ErrorKind::invalid_argument, "Newton start is not finite");
  const Deflation defl{space, roots, roots.empty() ? sparse() : sparse(space.stiffness() + space.mass())};
  auto residual_of = [&](const vec& r) { return std::sqrt(std::max(real(0), r.dot(space.mass_solve(r)))); };
  vec r = gradient_dual(space, u, p);
  real res = residual_of(r);
  real merit = res * (roots.empty() ? 1 : defl.factor(u));
  const real target = opt.newton_tol * std::max(real(1), res);
  const Eigen::Index n = space.size();
  int it = 0;
  for (; res >= target; ++it) {
    if (it == opt.newton_max_iterations)
      throw Error(ErrorKind::convergence, "Newton did not converge in " + std::to_string(it) +
                                              " iterations (residual " + std::to_string(res) + ")");
    const auto h = hessian_parts(space, u, p);
    const sparse k = bordered(space, h);
    Eigen::SparseLU<sparse> lu;
    lu.compute(k);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::singular, "Hessian system is singular");
    vec rhs = vec::Zero(k.rows());
    rhs.head(n) = -r;
    const vec sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !sol.allFinite()) throw Error(ErrorKind::singular, "Hessian solve failed");
    if ((k * sol - rhs).norm() > 1e-6 * (1 + rhs.norm())) throw Error(ErrorKind::singular, "Hessian is numerically singular");
    Field du = sol.head(n);
    if (!roots.empty()) {
      // Newton step of the deflated residual: a rescaling of the plain step
      const real denom = 1 - defl.log_slope(u, du);
      if (std::abs(denom) < 1e-12) throw Error(ErrorKind::convergence, "deflated Newton step is undefined");
      du /= denom;
    }

    // backtracking on the (deflated) residual norm
    real step = 1;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, step *= 0.5) {
      const Field trial = space.zero_mean(u + step * du);
      if (!finite(trial) || trial.cwiseAbs().maxCoeff() > opt.blowup_norm_cap) continue;
      const vec rt = gradient_dual(space, trial, p);
      const real rest = residual_of(rt);
      const real mt = rest * (roots.empty() ? 1 : defl.factor(trial));
      if (std::isfinite(mt) && mt < (1 - 1e-4 * step) * merit) {
        u = trial;
        r = rt;
        res = rest;
        merit = mt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (res < 1e3 * target) break;  // rounding floor just above the target
      throw Error(ErrorKind::convergence, "Newton line search failed (residual " + std::to_string(res) + ")");
    }
  }
  out.u = u;
  out.residual = res;
  out.energy = energy(space, u, p);
  out.iterations = it;
  out.classification = classify(space, u, p);
  return out;
}

}  // namespace

SolveResult newton(const FeSpace& space, const Field& u0, const Parameters& p, const SolverOptions& opt) {
  return newton_impl(space, u0, p, opt, {});
}

SolveResult deflated_newton(const FeSpace& space, const Field& u0, const Parameters& p,
                            const std::vector<Field>& known, const SolverOptions& opt) {
  return newton_impl(space, u0, p, opt, known);
}

vec hessian_eigenvalues(const FeSpace& space, const Field& u, const Parameters& p, Eigen::Index count) {
  const Eigen::Index n = space.size();
  if (count < 1 || count > n - 2) throw Error(ErrorKind::invalid_argument, "Hessian eigenvalue count out of range");
  const auto h = hessian_parts(space, u, p);
  const vec& m = space.lumped();
  if (n <= 2000) {
    mat a = mat(h.a);
    if (h.c != 0) a += h.c * h.b * h.b.transpose();
    const mat md = mat(space.mass());
    // lift the constant mode above everything: H 1 = beta M 1
    real lift = 0;
    for (Eigen::Index i = 0; i < n; ++i) lift = std::max(lift, a.row(i).cwiseAbs().sum() / md(i, i));
    lift = 4 * lift + std::abs(p.beta) + 1;
    a += (lift / space.area()) * m * m.transpose();
    Eigen::GeneralizedSelfAdjointEigenSolver<mat> es(a, md, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::convergence, "dense Hessian eigensolver failed");
    return es.eigenvalues().head(count);
  }
  // shift below the spectrum: E <= max(e^u) / Q M and the rank-one part is positive
  const Field w = space.zero_mean(u);
  const real peak = std::exp(w.maxCoeff() - log_integral_exp(space, w));
  const real shift = p.beta - std::max(real(0), p.rho) * peak - 1;
  const sparse shifted = h.a - shift * space.mass();
  Eigen::SimplicialLLT<sparse> llt(shifted);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::convergence, "shifted Hessian factorization failed");
  vec wb = vec::Zero(n);
  real denom = 1;
  if (h.c != 0) {
    wb = llt.solve(h.b);
    denom = 1 + h.c * h.b.dot(wb);
  }
  auto solve = [&](const vec& y) -> vec {
    vec z = llt.solve(y);
    if (h.c != 0) z -= (h.c * h.b.dot(z) / denom) * wb;
    return z;
  };
  auto apply = [&](const vec& v) -> vec { return h.apply(v); };
  const vec ones = vec::Ones(n);
  return lowest_pencil_eigenpairs(solve, apply, space.mass(), ones, count, 1e-9, 1000, n).values;
}

Eigen::Index morse_index_at(const FeSpace& space, const Field& u, const Parameters& p, Eigen::Index count,
                            real guard) {
  const vec vals = hessian_eigenvalues(space, u, p, count);
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (std::abs(vals(i)) <= guard)
      throw Error(ErrorKind::singular, "Hessian eigenvalue " + std::to_string(vals(i)) + " is within the guard: not a Morse point");
  const Eigen::Index neg = (vals.array() < 0).count();
  if (neg == vals.size()) throw Error(ErrorKind::precondition, "all computed Hessian eigenvalues are negative; raise the count");
  return neg;
}

namespace {

std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nbr(mesh.num_vertices());
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) nbr[mesh.triangles(a, t)].push_back(mesh.triangles(b, t));
  return nbr;
}

}  // namespace

BlowupDiagnostic local_mass(const FeSpace& space, const Field& u, const Parameters& p, real radius) {
  const Mesh& mesh = space.mesh();
  if (!(radius > 0)) throw Error(ErrorKind::invalid_argument, "radius must be positive");
  BlowupDiagnostic out;
  const Field f = exp_density(space, u);
  const vec w = f.cwiseProduct(space.lumped()) / f.dot(space.lumped());
  const auto nbr = vertex_neighbors(mesh);
  std::vector<std::pair<real, Eigen::Index>> peaks;
  for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
    bool peak = true, strict = false;
    for (int q : nbr[v]) {
      if (u(q) > u(v)) peak = false;
      if (u(q) < u(v)) strict = true;
    }
    if (peak && strict) peaks.emplace_back(u(v), v);
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [val, v] : peaks) {
    const vec2 x = mesh.vertex(v);
    const bool shadowed = std::any_of(out.candidates.begin(), out.candidates.end(),
                                      [&](const BlowupCandidate& c) { return (c.point - x).norm() < radius; });
    if (shadowed) continue;
    real share = 0, uniform = 0;
    for (Eigen::Index q = 0; q < mesh.num_vertices(); ++q)
      if ((mesh.vertex(q) - x).norm() < radius) share += w(q), uniform += space.lumped()(q);
    uniform /= space.area();
    if (share <= 2 * uniform) continue;
    const AtomTag tag = distance_to_boundary_edges(mesh, x) < radius ? AtomTag::boundary : AtomTag::interior;
    out.candidates.push_back({x, p.rho * share, tag});
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const auto& a, const auto& b) { return a.local_mass > b.local_mass; });
  if (!out.candidates.empty()) {
    const real m = out.candidates.front().local_mass;
    if (std::abs(m - 8 * pi) <= 0.15 * 8 * pi) out.interpretation = BlowupKind::interior_like;
    else if (std::abs(m - 4 * pi) <= 0.15 * 4 * pi) out.interpretation = BlowupKind::boundary_like;
  }
  return out;
}

ContinuationResult continuation(const FeSpace& space, const vec& eigenvalues, const Parameters& start,
                                const Parameters& end, int steps, const Field& u0, const SolverOptions& opt) {
  if (steps < 1) throw Error(ErrorKind::invalid_argument, "continuation needs at least one step");
  ContinuationResult out;
  Field u = u0;
  Eigen::Index last_k = -1;
  for (int s = 0; s <= steps; ++s) {
    const real a = real(s) / steps;
    const Parameters p{start.beta + a * (end.beta - start.beta), start.rho + a * (end.rho - start.rho)};
    try {
      const Eigen::Index k = mass_index(p.rho);
      bracket_index(eigenvalues, p.beta);
      bracket_index(eigenvalues, p.beta - p.rho / space.area());
      if (last_k >= 0 && k != last_k) {
        out.stop = StopReason::resonance;
        out.note = "path crosses rho = 4 pi " + std::to_string(std::max(k, last_k));
        return out;
      }
      last_k = k;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::resonance && e.kind() != ErrorKind::invalid_argument) throw;
      out.stop = StopReason::resonance;
      out.note = e.what();
      return out;
    }
    SolveResult r;
    try {
      r = newton(space, u, p, opt);
    } catch (const Error& e) {
      out.stop = StopReason::newton_failure;
      out.note = "step " + std::to_string(s) + ": " + e.what();
      return out;
    }
    if (r.u.cwiseAbs().maxCoeff() > opt.blowup_norm_cap) {
      out.stop = StopReason::blowup;
      out.note = "sup norm exceeded the blow-up cap";
      return out;
    }
    u = r.u;
    out.steps.push_back(std::move(r));
  }
  return out;
}

bool SeedReport::found_nontrivial() const {
  return std::any_of(solutions.begin(), solutions.end(),
                     [](const SolveResult& r) { return r.classification == Classification::nontrivial; });
}

std::vector<TestConfig> seed_configs(const FeSpace& space, Eigen::Index k, Eigen::Index i) {
  const Mesh& mesh = space.mesh();
  // four boundary candidates spread along the boundary walk, and interior
  // candidates on a coarse grid pushed away from the boundary
  std::vector<vec2> bnd, inner;
  const Eigen::Index ne = mesh.boundary_edges.cols();
  for (int q = 0; q < 4; ++q) bnd.push_back(mesh.vertex(mesh.boundary_edges(0, (q * ne) / 4)));
  const vec2 lo = mesh.vertices.rowwise().minCoeff(), hi = mesh.vertices.rowwise().maxCoeff();
  const real margin = 0.15 * (hi - lo).minCoeff();
  for (int gy = 1; gy <= 3; ++gy)
    for (int gx = 1; gx <= 3; ++gx) {
      const vec2 x(lo.x() + (hi.x() - lo.x()) * gx / 4, lo.y() + (hi.y() - lo.y()) * gy / 4);
      if (contains(mesh, x) && distance_to_boundary_edges(mesh, x) > margin) inner.push_back(x);
    }

  std::vector<BarycenterMeasure> measures;
  for (Eigen::Index l = 0; 2 * l <= k; ++l)
    for (Eigen::Index m = 0; 2 * l + m <= k; ++m) {
      if (l + m == 0 || l > Eigen::Index(inner.size()) || m > Eigen::Index(bnd.size())) continue;
      for (int rot = 0; rot < 4; ++rot) {
        BarycenterMeasure mu;
        const real w = 1.0 / real(l + m);
        for (Eigen::Index a = 0; a < l; ++a)
          mu.atoms.push_back({inner[(a + rot) % inner.size()], w, AtomTag::interior});
        for (Eigen::Index b = 0; b < m; ++b)
          mu.atoms.push_back({bnd[(b + rot) % bnd.size()], w, AtomTag::boundary});
        measures.push_back(std::move(mu));
        if (l == 0 && m == 0) break;
      }
    }

  std::vector<vec> spheres;
  for (Eigen::Index j = 0; j < i; ++j)
    for (real sgn : {1.0, -1.0}) {
      vec s = vec::Zero(i);
      s(j) = sgn;
      spheres.push_back(s);
    }

  std::vector<TestConfig> out;
  for (real lambda : {30.0, 100.0}) {
    for (real t : {0.0, 0.5, 1.0}) {
      const bool need_mu = t < 1, need_sigma = t > 0;
      if (need_mu && measures.empty()) continue;
      if (need_sigma && spheres.empty()) continue;
      const std::size_t nm = need_mu ? measures.size() : 1, ns = need_sigma ? spheres.size() : 1;
      for (std::size_t a = 0; a < nm; ++a)
        for (std::size_t b = 0; b < ns; ++b) {
          TestConfig cfg;
          cfg.lambda = lambda;
          cfg.zeta.t = t;
          if (need_mu) cfg.zeta.measure = measures[a];
          if (need_sigma) cfg.zeta.sphere = spheres[b];
          out.push_back(std::move(cfg));
        }
    }
  }
  return out;
}

namespace {

// Appends r unless an equivalent critical point is already known.
bool add_distinct(std::vector<SolveResult>& list, SolveResult r, const FeSpace& space, real tol) {
  for (const auto& s : list)
    if (space.h1_norm(s.u - r.u) < tol) return false;
  list.push_back(std::move(r));
  return true;
}

void attach_morse(const FeSpace& space, SolveResult& r, const SolverOptions& opt) {
  try {
    r.morse_index = morse_index_at(space, r.u, r.params, opt.morse_count, opt.morse_guard);
  } catch (const Error& e) {
    r.note += std::string("morse index unavailable: ") + e.what();
  }
}

}  // namespace

SeedReport find_nontrivial(const FeSpace& space, const SpectralBasis& basis, const Parameters& p,
                           const SolverOptions& opt, bool exhaustive) {
  SeedReport rep;
  const Eigen::Index k = p.rho > 0 ? mass_index(p.rho) : 0;
  const Eigen::Index i = bracket_index(basis.eigenvalues, p.beta);
  const Eigen::Index j = bracket_index(basis.eigenvalues, p.beta - p.rho / space.area());

  auto is_known = [&](const SolveResult& r) {
    for (const auto& s : rep.solutions)
      if (space.h1_norm(r.u - s.u) < opt.dedup_tol * (1 + space.h1_norm(s.u))) return true;
    return r.classification == Classification::trivial;
  };

  auto consider = [&](const Field& u0, std::optional<TestConfig> seed) -> bool {
    ++rep.seeds_tried;
    SolveResult r;
    bool ok = false;
    try {
      r = newton(space, u0, p, opt);
      ok = true;
    } catch (const Error&) {
    }
    // plain Newton fell back onto a known point: deflate the known ones and
    // polish the result without deflation
    if ((!ok || is_known(r)) && !rep.solutions.empty()) {
      std::vector<Field> known;
      for (const auto& s : rep.solutions) known.push_back(s.u);
      try {
        r = newton(space, deflated_newton(space, u0, p, known, opt).u, p, opt);
        ok = true;
      } catch (const Error&) {
      }
    }
    if (!ok) {
      ++rep.newton_failures;
      return false;
    }
    r.seed = std::move(seed);
    if (r.classification == Classification::trivial) {
      r.u.setZero();
      r.energy = energy(space, r.u, p);
    }
    const bool nontrivial = r.classification == Classification::nontrivial;
    attach_morse(space, r, opt);
    add_distinct(rep.solutions, std::move(r), space, opt.dedup_tol);
    return nontrivial && !exhaustive;
  };

  bool done = consider(Field::Zero(space.size()), std::nullopt);
  if (!done)
    for (const auto& cfg : seed_configs(space, k, i)) {
      if ((done = consider(phi_lambda(space, basis, cfg), cfg))) break;
    }
  // displacements along eigenfunctions; the bifurcating branches sit far
  // from the trivial solution once rho is well past the crossing
  const Eigen::Index top = std::min<Eigen::Index>(basis.size(), j + 3);
  for (Eigen::Index q = 0; q < top && !done; ++q)
    for (real amp : {1.0, -1.0, 3.0, -3.0, 6.0, -6.0, 10.0, -10.0}) {
      if ((done = consider(amp * basis.eigenvectors.col(q), std::nullopt))) break;
    }
  std::stable_partition(rep.solutions.begin(), rep.solutions.end(),
                        [](const SolveResult& r) { return r.classification == Classification::nontrivial; });
  return rep;
}

}  // namespace ks
