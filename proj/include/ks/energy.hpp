#ifndef KS_ENERGY_HPP
#define KS_ENERGY_HPP

#include "ks/common.hpp"
#include "ks/mesh.hpp"
#include "ks/spectrum.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace ks {

struct Parameters {
  real beta = 0;
  real rho = 0;
};

/// P1 discretization of a mesh: matrices, lumped masses and a cached mass
/// factorization. Immutable after construction.
class FeSpace {
 public:
  explicit FeSpace(Mesh mesh);

  const Mesh& mesh() const { return *mesh_; }
  const sparse& stiffness() const { return stiffness_; }
  const sparse& mass() const { return mass_; }
  /// M 1, the vertex-patch areas / 3.
  const vec& lumped() const { return lumped_; }
  real area() const { return area_; }
  Eigen::Index size() const { return lumped_.size(); }

  real integral(const Field& u) const { return lumped_.dot(u); }
  real mean(const Field& u) const { return integral(u) / area_; }
  Field zero_mean(const Field& u) const { return u.array() - mean(u); }
  real mass_inner(const Field& a, const Field& b) const { return a.dot(mass_ * b); }
  real l2_norm_sq(const Field& u) const { return mass_inner(u, u); }
  real dirichlet(const Field& u) const { return u.dot(stiffness_ * u); }
  real h1_norm(const Field& u) const { return std::sqrt(dirichlet(u) + l2_norm_sq(u)); }
  /// Solves M x = rhs.
  Field mass_solve(const vec& rhs) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  sparse stiffness_;
  sparse mass_;
  vec lumped_;
  real area_ = 0;
  std::shared_ptr<Eigen::SimplicialLLT<sparse>> mass_llt_;
};

/// Quadrature of e^u: three interior Gauss points per triangle on the linear
/// interpolant of u, evaluated with a max shift.
struct ExpMoments {
  real log_integral = 0;  // log of the integral of e^u
  vec density;            // entries: integral of e^u phi_i, divided by the integral of e^u
};

ExpMoments exp_moments(const FeSpace& space, const Field& u);
real log_integral_exp(const FeSpace& space, const Field& u);

/// Sparse matrix of the integrals of e^u phi_i phi_j, divided by the integral
/// of e^u.
sparse exp_weighted_mass(const FeSpace& space, const Field& u);

/// Energy 1/2 (u'Ku + beta u'Mu) - rho log of the integral of e^u, after
/// removing the mean of u.
real energy(const FeSpace& space, const Field& u, const Parameters& p);

/// First variation as a dual vector r_i = J'(u)[phi_i].
vec gradient_dual(const FeSpace& space, const Field& u, const Parameters& p);

/// Mass representer G of J'(u): <G, v>_M = J'(u)[v]. Zero mean.
Field gradient(const FeSpace& space, const Field& u, const Parameters& p);

/// Mass norm of the gradient.
real residual_norm(const FeSpace& space, const Field& u, const Parameters& p);

/// The second variation at u split as  A + c b b'  with A sparse:
/// A = K + beta M - rho E(u), b = density, c = rho.
struct HessianParts {
  sparse a;
  vec b;
  real c = 0;

  vec apply(const vec& v) const { return a * v + c * b * b.dot(v); }
};
HessianParts hessian_parts(const FeSpace& space, const Field& u, const Parameters& p);

/// Mass representer of J''(u)[v, .].
Field hessian_apply(const FeSpace& space, const Field& u, const Parameters& p, const Field& v);

/// Components of u along the first I eigenfunctions.
vec project_pi(const FeSpace& space, const SpectralBasis& basis, const Field& u, Eigen::Index count);

}  // namespace ks

#endif  // KS_ENERGY_HPP
