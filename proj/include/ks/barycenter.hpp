#ifndef KS_BARYCENTER_HPP
#define KS_BARYCENTER_HPP

#include "ks/common.hpp"
#include "ks/energy.hpp"
#include "ks/mesh.hpp"
#include "ks/spectrum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ks {

enum class AtomTag { interior, boundary };
std::string to_string(AtomTag t);
AtomTag parse_atom_tag(const std::string& s);

struct Atom {
  vec2 point = vec2::Zero();
  real weight = 0;
  AtomTag tag = AtomTag::interior;
};

/// Finitely supported probability measure where interior atoms count twice.
struct BarycenterMeasure {
  std::vector<Atom> atoms;

  /// 2 (#interior) + (#boundary)
  int weighted_count() const;
  real total_weight() const;
};

/// Throws precondition errors naming the violated invariant: weights
/// positive summing to 1, boundary atoms on the boundary, interior atoms
/// inside, weighted count at most k (skipped when k < 0).
void validate(const Mesh& mesh, const BarycenterMeasure& mu, int k = -1);

/// Point of the join (barycenters) * S^{I-1}: (measure, sphere, t).
struct JoinPoint {
  BarycenterMeasure measure;  // meaningful when t < 1
  vec sphere;                 // unit vector when t > 0
  real t = 0;
};

/// Equality up to the join identifications: at t = 0 the sphere is ignored,
/// at t = 1 the measure is ignored.
bool equivalent(const JoinPoint& a, const JoinPoint& b, real tol = 1e-12);

/// Signed atomic measure.
struct DiscreteMeasure {
  Eigen::Matrix2Xd points;
  vec weights;

  Eigen::Index size() const { return weights.size(); }
};

DiscreteMeasure to_discrete(const BarycenterMeasure& mu);
/// Mesh density f as atoms at the vertices with lumped-mass weights f_i m_i.
DiscreteMeasure density_measure(const FeSpace& space, const Field& f);
/// Same, rescaled to unit total mass.
DiscreteMeasure normalized_density_measure(const FeSpace& space, const Field& f);

/// Bounded-Lipschitz distance: sup of the integral of h against mu - nu over
/// h with |h| <= 1 and Lipschitz constant <= 1 (Euclidean) on the supports.
/// Solved exactly through the dual min-cost transport problem with costs
/// min(|x - y|, 2) and unit cost for created or destroyed mass.
real bl_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct SpreadPoint {
  vec2 point = vec2::Zero();
  AtomTag tag = AtomTag::interior;
  real mass = 0;  // mass of f in the ball of radius r_tilde
};

struct CaptureFamily {
  std::vector<SpreadPoint> points;  // points with their tags, mass = share captured
  real radius = 0;
  real captured = 0;
  int weighted_count() const;
};

struct SpreadResult {
  bool concentrated = false;
  // Spread branch
  std::vector<SpreadPoint> points;
  real r_tilde = 0;
  real eps_tilde = 0;
  std::size_t net_size = 0;
  // Concentrated branch
  std::optional<CaptureFamily> witness;

  int weighted_count() const;
};

/// Either a capturing family (2l + m <= K) of eps-balls holding at least
/// 1 - eps of the mass, or K+1 weighted points spread apart at scale
/// r_tilde = eps/6 each carrying mass eps_tilde = eps/L.
SpreadResult spread_points(const FeSpace& space, const Field& f, real eps, int k);

/// Total mass of the normalized lumped density within distance < radius of p.
real ball_mass(const FeSpace& space, const Field& f, const vec2& p, real radius);

/// Barycenter measure close to f: atoms at a family capturing f at scale
/// eps/3, weights equal to the disjointified ball masses plus an equal share
/// of the uncaptured residual. Throws when f is not concentrated.
BarycenterMeasure project_to_barycenters(const FeSpace& space, const Field& f, real eps, int k);

/// (measure, sphere, t) with t = min(1, |Pi_I u|). Throws when t < 1 and
/// e^u / int e^u is not concentrated.
JoinPoint psi_map(const FeSpace& space, const SpectralBasis& basis, const Field& u, Eigen::Index count, int k,
                  real eps);

/// Normalized vertex density e^u / int e^u.
Field exp_density(const FeSpace& space, const Field& u);

}  // namespace ks

#endif  // KS_BARYCENTER_HPP
