#include "ks/barycenter.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

namespace ks {

std::string to_string(AtomTag t) { return t == AtomTag::interior ? "interior" : "boundary"; }

AtomTag parse_atom_tag(const std::string& s) {
  if (s == "interior") return AtomTag::interior;
  if (s == "boundary") return AtomTag::boundary;
  throw Error(ErrorKind::parse, "unknown atom tag '" + s + "'");
}

int BarycenterMeasure::weighted_count() const {
  int c = 0;
  for (const auto& a : atoms) c += a.tag == AtomTag::interior ? 2 : 1;
  return c;
}

real BarycenterMeasure::total_weight() const {
  real s = 0;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

int CaptureFamily::weighted_count() const {
  int c = 0;
  for (const auto& p : points) c += p.tag == AtomTag::interior ? 2 : 1;
  return c;
}

int SpreadResult::weighted_count() const {
  int c = 0;
  for (const auto& p : points) c += p.tag == AtomTag::interior ? 2 : 1;
  return c;
}

void validate(const Mesh& mesh, const BarycenterMeasure& mu, int k) {
  if (mu.atoms.empty()) throw Error(ErrorKind::precondition, "barycenter measure has no atoms");
  for (const auto& a : mu.atoms) {
    if (!(a.weight > 0)) throw Error(ErrorKind::precondition, "atom weights must be positive");
    const real d = boundary_distance(mesh, a.point);  // throws outside
    const real tol = 1e-9 * std::max(real(1), mesh.diameter());
    if (a.tag == AtomTag::boundary && d > tol) throw Error(ErrorKind::precondition, "boundary atom is off the boundary");
    if (a.tag == AtomTag::interior && d <= 0) throw Error(ErrorKind::precondition, "interior atom lies on the boundary");
  }
  if (std::abs(mu.total_weight() - 1) > 1e-12) throw Error(ErrorKind::precondition, "atom weights do not sum to 1");
  if (k >= 0 && mu.weighted_count() > k)
    throw Error(ErrorKind::precondition, "weighted atom count " + std::to_string(mu.weighted_count()) + " exceeds K = " + std::to_string(k));
}

bool equivalent(const JoinPoint& a, const JoinPoint& b, real tol) {
  if (std::abs(a.t - b.t) > tol) return false;
  const bool need_measure = a.t < 1 - tol;
  const bool need_sphere = a.t > tol;
  if (need_sphere) {
    if (a.sphere.size() != b.sphere.size() || (a.sphere - b.sphere).norm() > tol) return false;
  }
  if (need_measure) {
    if (a.measure.atoms.size() != b.measure.atoms.size()) return false;
    for (std::size_t i = 0; i < a.measure.atoms.size(); ++i) {
      const auto &x = a.measure.atoms[i], &y = b.measure.atoms[i];
      if ((x.point - y.point).norm() > tol || std::abs(x.weight - y.weight) > tol || x.tag != y.tag) return false;
    }
  }
  return true;
}

DiscreteMeasure to_discrete(const BarycenterMeasure& mu) {
  DiscreteMeasure d;
  d.points.resize(2, mu.atoms.size());
  d.weights.resize(mu.atoms.size());
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    d.points.col(i) = mu.atoms[i].point;
    d.weights(i) = mu.atoms[i].weight;
  }
  return d;
}

DiscreteMeasure density_measure(const FeSpace& space, const Field& f) {
  return {space.mesh().vertices, f.cwiseProduct(space.lumped())};
}

DiscreteMeasure normalized_density_measure(const FeSpace& space, const Field& f) {
  auto d = density_measure(space, f);
  const real total = d.weights.sum();
  if (!(total > 0)) throw Error(ErrorKind::precondition, "density has no positive mass");
  d.weights /= total;
  return d;
}

// --- bounded-Lipschitz distance -------------------------------------------

namespace {

// Min-cost transportation from sources to sinks with uncapacitated arcs, by
// successive shortest paths with Dijkstra on reduced costs.
real min_cost_transport(const vec& supply_in, const vec& demand_in, const std::function<real(int, int)>& cost) {
  const int ns = int(supply_in.size()), nt = int(demand_in.size());
  if (ns == 0 || nt == 0) return 0;
  vec supply = supply_in, demand = demand_in;
  const real scale = std::max(supply.sum(), demand.sum());
  const real zero = 1e-15 * scale;

  mat c(ns, nt);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) c(i, j) = cost(i, j);
  mat flow = mat::Zero(ns, nt);
  std::vector<std::vector<int>> senders(nt);  // sources with positive flow into each sink

  vec pot = vec::Zero(ns + nt);
  const real inf = std::numeric_limits<real>::infinity();
  vec dist(ns + nt);
  std::vector<int> parent(ns + nt);
  std::vector<char> done(ns + nt);

  real total = 0;
  for (int guard = 0; guard < 100 * (ns + nt) + 1000; ++guard) {
    int src = -1;
    for (int i = 0; i < ns; ++i)
      if (supply(i) > zero) {
        src = i;
        break;
      }
    if (src < 0) break;
    dist.setConstant(inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    using item = std::pair<real, int>;
    std::priority_queue<item, std::vector<item>, std::greater<item>> heap;
    dist(src) = 0;
    heap.emplace(0, src);
    int target = -1;
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (done[u] || d > dist(u)) continue;
      done[u] = 1;
      if (u >= ns && demand(u - ns) > zero) {
        target = u;
        break;
      }
      if (u < ns) {
        for (int j = 0; j < nt; ++j) {
          const int v = ns + j;
          const real nd = d + std::max(c(u, j) + pot(u) - pot(v), real(0));
          if (!done[v] && nd < dist(v)) dist(v) = nd, parent[v] = u, heap.emplace(nd, v);
        }
      } else {
        const int j = u - ns;
        for (int i : senders[j]) {
          if (flow(i, j) <= zero) continue;
          // rounding can leave a slightly negative reduced cost; clamp it so
          // settled nodes never get a new parent
          const real nd = d + std::max(-c(i, j) + pot(u) - pot(i), real(0));
          if (!done[i] && nd < dist(i)) dist(i) = nd, parent[i] = u, heap.emplace(nd, i);
        }
      }
    }
    if (target < 0) throw Error(ErrorKind::convergence, "transport problem is infeasible");
    const real dt = dist(target);
    for (int v = 0; v < ns + nt; ++v) pot(v) += std::min(dist(v), dt);

    // bottleneck along the path
    real amount = std::min(supply(src), demand(target - ns));
    for (int v = target; parent[v] >= 0; v = parent[v]) {
      const int u = parent[v];
      if (u >= ns) amount = std::min(amount, flow(v, u - ns));  // reverse arc sink u -> source v
    }
    for (int v = target; parent[v] >= 0; v = parent[v]) {
      const int u = parent[v];
      if (u < ns) {
        const int j = v - ns;
        if (flow(u, j) <= zero) senders[j].push_back(u);
        flow(u, j) += amount;
      } else {
        flow(v, u - ns) -= amount;
      }
    }
    supply(src) -= amount;
    demand(target - ns) -= amount;
    for (int j = 0; j < nt; ++j)
      std::erase_if(senders[j], [&](int i) { return flow(i, j) <= zero; });
  }
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j)
      if (flow(i, j) > 0) total += flow(i, j) * c(i, j);
  return total;
}

}  // namespace

real bl_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() == 0 && nu.size() == 0) throw Error(ErrorKind::precondition, "bounded-Lipschitz distance of empty measures");
  // merge coincident support points and take the signed difference
  std::map<std::pair<real, real>, real> net;
  for (Eigen::Index i = 0; i < mu.size(); ++i) net[{mu.points(0, i), mu.points(1, i)}] += mu.weights(i);
  for (Eigen::Index i = 0; i < nu.size(); ++i) net[{nu.points(0, i), nu.points(1, i)}] -= nu.weights(i);
  std::vector<vec2> pos, neg;
  std::vector<real> sp, sn;
  for (const auto& [p, w] : net) {
    if (w > 0) pos.emplace_back(p.first, p.second), sp.push_back(w);
    else if (w < 0) neg.emplace_back(p.first, p.second), sn.push_back(-w);
  }
  const real tp = std::accumulate(sp.begin(), sp.end(), real(0));
  const real tn = std::accumulate(sn.begin(), sn.end(), real(0));
  // a ground node absorbs or emits the imbalance at unit cost
  const bool ground_sink = tp > tn, ground_source = tn > tp;
  vec supply(sp.size() + (ground_source ? 1 : 0)), demand(sn.size() + (ground_sink ? 1 : 0));
  for (std::size_t i = 0; i < sp.size(); ++i) supply(i) = sp[i];
  for (std::size_t j = 0; j < sn.size(); ++j) demand(j) = sn[j];
  if (ground_source) supply(sp.size()) = tn - tp;
  if (ground_sink) demand(sn.size()) = tp - tn;
  auto cost = [&](int i, int j) -> real {
    if (std::size_t(i) == pos.size() || std::size_t(j) == neg.size()) return 1.0;
    return std::min((pos[i] - neg[j]).norm(), real(2));
  };
  return min_cost_transport(supply, demand, cost);
}

// --- covering and projection ----------------------------------------------

namespace {

// Uniform grid over the mesh vertices for ball queries.
class VertexGrid {
 public:
  VertexGrid(const Mesh& mesh, real cell) : mesh_(mesh), cell_(cell) {
    lo_ = mesh.vertices.rowwise().minCoeff();
    const vec2 hi = mesh.vertices.rowwise().maxCoeff();
    nx_ = std::max(1, int((hi.x() - lo_.x()) / cell_) + 1);
    ny_ = std::max(1, int((hi.y() - lo_.y()) / cell_) + 1);
    buckets_.resize(std::size_t(nx_) * ny_);
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) buckets_[index(mesh.vertex(v))].push_back(int(v));
  }

  template <class Visit>
  void within(const vec2& p, real r, Visit&& visit) const {
    const int x0 = std::max(0, int((p.x() - r - lo_.x()) / cell_)), x1 = std::min(nx_ - 1, int((p.x() + r - lo_.x()) / cell_));
    const int y0 = std::max(0, int((p.y() - r - lo_.y()) / cell_)), y1 = std::min(ny_ - 1, int((p.y() + r - lo_.y()) / cell_));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        for (int v : buckets_[std::size_t(y) * nx_ + x])
          if ((mesh_.vertex(v) - p).norm() < r) visit(v);
  }

 private:
  std::size_t index(const vec2& p) const {
    const int x = std::clamp(int((p.x() - lo_.x()) / cell_), 0, nx_ - 1);
    const int y = std::clamp(int((p.y() - lo_.y()) / cell_), 0, ny_ - 1);
    return std::size_t(y) * nx_ + x;
  }
  const Mesh& mesh_;
  real cell_;
  vec2 lo_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

struct Candidate {
  vec2 point;
  AtomTag tag;
};

// Hexagonal lattice of the given spacing inside the closed domain, plus
// boundary samples no farther apart than spacing / 2.
std::vector<Candidate> build_net(const Mesh& mesh, real spacing) {
  std::vector<Candidate> net;
  const vec2 lo = mesh.vertices.rowwise().minCoeff(), hi = mesh.vertices.rowwise().maxCoeff();
  const real dy = spacing * std::sqrt(3.0) / 2;
  int row = 0;
  for (real y = lo.y(); y <= hi.y() + 1e-12; y += dy, ++row) {
    for (real x = lo.x() + (row % 2) * spacing / 2; x <= hi.x() + 1e-12; x += spacing) {
      const vec2 p(x, y);
      if (!contains(mesh, p)) continue;
      if (distance_to_boundary_edges(mesh, p) <= 1e-12) continue;  // boundary samples cover these
      net.push_back({p, AtomTag::interior});
    }
  }
  for (Eigen::Index e = 0; e < mesh.boundary_edges.cols(); ++e) {
    const vec2 a = mesh.vertex(mesh.boundary_edges(0, e)), b = mesh.vertex(mesh.boundary_edges(1, e));
    const int pieces = std::max(1, int(std::ceil((b - a).norm() / (spacing / 2))));
    for (int s = 0; s < pieces; ++s) net.push_back({a + (b - a) * (real(s) / pieces), AtomTag::boundary});
  }
  return net;
}

vec normalized_vertex_masses(const FeSpace& space, const Field& f) {
  if ((f.array() < 0).any()) throw Error(ErrorKind::precondition, "density must be nonnegative");
  vec w = f.cwiseProduct(space.lumped());
  const real total = w.sum();
  if (!(total > 0)) throw Error(ErrorKind::precondition, "density has no positive mass");
  return w / total;
}

// Greedy search for an admissible family of eps-balls (l interior, m
// boundary) capturing as much mass as possible.
std::optional<CaptureFamily> find_capture(const Mesh& mesh, const VertexGrid& grid, const vec& w,
                                          const std::vector<Candidate>& cands, real radius, int k, real need) {
  std::vector<std::vector<int>> balls(cands.size());
  for (std::size_t c = 0; c < cands.size(); ++c)
    grid.within(cands[c].point, radius, [&](int v) { balls[c].push_back(v); });
  (void)mesh;

  std::optional<CaptureFamily> best;
  for (int l = k / 2; l >= 0; --l) {
    int left_int = l, left_bnd = k - 2 * l;
    std::vector<char> taken(w.size(), 0);
    CaptureFamily fam;
    fam.radius = radius;
    while (left_int + left_bnd > 0) {
      real best_gain = 0;
      int pick = -1;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (cands[c].tag == AtomTag::interior ? left_int == 0 : left_bnd == 0) continue;
        real g = 0;
        for (int v : balls[c])
          if (!taken[v]) g += w(v);
        if (g > best_gain) best_gain = g, pick = int(c);
      }
      if (pick < 0) break;
      for (int v : balls[pick]) taken[v] = 1;
      fam.points.push_back({cands[pick].point, cands[pick].tag, best_gain});
      fam.captured += best_gain;
      (cands[pick].tag == AtomTag::interior ? left_int : left_bnd) -= 1;
    }
    if (fam.captured >= need && (!best || fam.captured > best->captured + 1e-15 ||
                                 (std::abs(fam.captured - best->captured) <= 1e-15 && fam.points.size() < best->points.size())))
      best = fam;
  }
  return best;
}

real mass_in_ball(const VertexGrid& grid, const vec& w, const vec2& p, real r) {
  real s = 0;
  grid.within(p, r, [&](int v) { s += w(v); });
  return s;
}

}  // namespace

real ball_mass(const FeSpace& space, const Field& f, const vec2& p, real radius) {
  const vec w = normalized_vertex_masses(space, f);
  real s = 0;
  for (Eigen::Index v = 0; v < w.size(); ++v)
    if ((space.mesh().vertex(v) - p).norm() < radius) s += w(v);
  return s;
}

SpreadResult spread_points(const FeSpace& space, const Field& f, real eps, int k) {
  const Mesh& mesh = space.mesh();
  if (!(eps > 0)) throw Error(ErrorKind::invalid_argument, "eps must be positive");
  if (k < 0) throw Error(ErrorKind::invalid_argument, "K must be nonnegative");
  const vec w = normalized_vertex_masses(space, f);
  const real r_tilde = eps / 6;
  const auto net = build_net(mesh, r_tilde);
  const VertexGrid grid(mesh, std::max(r_tilde, eps / 4));

  SpreadResult out;
  out.r_tilde = r_tilde;
  out.net_size = net.size();
  out.eps_tilde = eps / real(net.size());

  if (k > 0) {
    // candidates: the local maxima of f first, then the net
    std::vector<Candidate> cands;
    std::vector<std::vector<int>> nbr(mesh.num_vertices());
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          if (a != b) nbr[mesh.triangles(a, t)].push_back(mesh.triangles(b, t));
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
      if (!(w(v) > 0)) continue;
      const bool peak = std::all_of(nbr[v].begin(), nbr[v].end(), [&](int u) { return f(u) <= f(v); });
      if (peak) cands.push_back({mesh.vertex(v), mesh.boundary_vertex[v] ? AtomTag::boundary : AtomTag::interior});
    }
    cands.insert(cands.end(), net.begin(), net.end());
    if (auto fam = find_capture(mesh, grid, w, cands, eps, k, 1 - eps)) {
      out.concentrated = true;
      out.witness = std::move(fam);
      return out;
    }
  } else if (1 - eps <= 0) {
    out.concentrated = true;
    out.witness = CaptureFamily{{}, eps, 0};
    return out;
  }

  // covering construction: heavy net points, then a maximal 4 r_tilde-separated subset
  std::vector<std::pair<real, std::size_t>> heavy;
  for (std::size_t n = 0; n < net.size(); ++n) {
    const real m = mass_in_ball(grid, w, net[n].point, r_tilde);
    if (m >= out.eps_tilde) heavy.emplace_back(m, n);
  }
  std::stable_sort(heavy.begin(), heavy.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [m, n] : heavy) {
    const vec2 p = net[n].point;
    const bool far = std::all_of(out.points.begin(), out.points.end(),
                                 [&](const SpreadPoint& q) { return (q.point - p).norm() >= 4 * r_tilde; });
    if (!far) continue;
    const AtomTag tag = distance_to_boundary_edges(mesh, p) < r_tilde ? AtomTag::boundary : AtomTag::interior;
    out.points.push_back({p, tag, m});
  }
  if (out.weighted_count() >= k + 1) return out;

  // too few points: the construction itself captures f at scale eps
  CaptureFamily fam;
  fam.radius = eps;
  std::vector<char> taken(w.size(), 0);
  for (const auto& sp : out.points) {
    const vec2 x = sp.tag == AtomTag::boundary ? nearest_boundary_point(mesh, sp.point) : sp.point;
    real g = 0;
    grid.within(x, eps, [&](int v) {
      if (!taken[v]) g += w(v), taken[v] = 1;
    });
    fam.points.push_back({x, sp.tag, g});
    fam.captured += g;
  }
  out.points.clear();
  out.concentrated = true;
  out.witness = std::move(fam);
  return out;
}

BarycenterMeasure project_to_barycenters(const FeSpace& space, const Field& f, real eps, int k) {
  const auto spread = spread_points(space, f, eps / 3, k);
  if (!spread.concentrated || !spread.witness || spread.witness->points.empty())
    throw Error(ErrorKind::precondition, "density is not concentrated around an admissible family");
  auto family = spread.witness->points;
  // interior points first, as in the weight formula's ordering
  std::stable_partition(family.begin(), family.end(), [](const SpreadPoint& p) { return p.tag == AtomTag::interior; });

  const Mesh& mesh = space.mesh();
  const vec w = normalized_vertex_masses(space, f);
  const real r = eps / 3;
  const VertexGrid grid(mesh, r);
  std::vector<char> taken(w.size(), 0);
  std::vector<real> own(family.size(), 0);
  for (std::size_t i = 0; i < family.size(); ++i)
    grid.within(family[i].point, r, [&](int v) {
      if (!taken[v]) own[i] += w(v), taken[v] = 1;
    });
  real residual = 0;
  for (Eigen::Index v = 0; v < w.size(); ++v)
    if (!taken[v]) residual += w(v);
  const real share = residual / real(family.size());

  BarycenterMeasure mu;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const real weight = own[i] + share;
    if (weight > 0) mu.atoms.push_back({family[i].point, weight, family[i].tag});
  }
  // remove the rounding drift so the weights sum to one
  const real total = mu.total_weight();
  for (auto& a : mu.atoms) a.weight /= total;
  return mu;
}

Field exp_density(const FeSpace& space, const Field& u) {
  const real lse = log_integral_exp(space, u);
  return (u.array() - lse).exp().matrix();
}

JoinPoint psi_map(const FeSpace& space, const SpectralBasis& basis, const Field& u, Eigen::Index count, int k,
                  real eps) {
  JoinPoint z;
  const vec proj = project_pi(space, basis, u, count);
  const real nrm = proj.norm();
  z.t = std::min(real(1), nrm);
  if (z.t > 0) z.sphere = proj / nrm;
  if (z.t < 1) {
    try {
      z.measure = project_to_barycenters(space, exp_density(space, u), eps, k);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::precondition) throw;
      throw Error(ErrorKind::precondition,
                  "u is not in a low sublevel: |Pi_I u| < 1 and e^u is not concentrated (" + std::string(e.what()) + ")");
    }
  }
  return z;
}

}  // namespace ks
