#include "ks/energy.hpp"

#include <algorithm>
#include <vector>

namespace ks {

FeSpace::FeSpace(Mesh mesh) : mesh_(std::make_shared<const Mesh>(std::move(mesh))) {
  auto fem = assemble(*mesh_);
  stiffness_ = std::move(fem.stiffness);
  mass_ = std::move(fem.mass);
  lumped_ = mass_ * vec::Ones(mass_.rows());
  area_ = lumped_.sum();
  mass_llt_ = std::make_shared<Eigen::SimplicialLLT<sparse>>(mass_);
  if (mass_llt_->info() != Eigen::Success) throw Error(ErrorKind::invalid_mesh, "mass matrix is not positive definite");
}

Field FeSpace::mass_solve(const vec& rhs) const { return mass_llt_->solve(rhs); }

namespace {

// Barycentric weights of the three interior Gauss points.
constexpr real kMajor = 2.0 / 3.0;
constexpr real kMinor = 1.0 / 6.0;

template <class Visit>
void for_each_quadrature_point(const FeSpace& space, const Field& u, real shift, Visit&& visit) {
  const Mesh& m = space.mesh();
  for (Eigen::Index t = 0; t < m.num_triangles(); ++t) {
    const auto idx = m.triangles.col(t);
    const vec2 a = m.vertex(idx(0)), b = m.vertex(idx(1)), c = m.vertex(idx(2));
    const real area = 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
    for (int q = 0; q < 3; ++q) {
      Eigen::Vector3d lam = Eigen::Vector3d::Constant(kMinor);
      lam(q) = kMajor;
      const real uq = lam(0) * u(idx(0)) + lam(1) * u(idx(1)) + lam(2) * u(idx(2));
      visit(idx, lam, area / 3 * std::exp(uq - shift));
    }
  }
}

real quadrature_max(const FeSpace& space, const Field& u) {
  // the linear interpolant never exceeds the vertex maximum
  (void)space;
  return u.maxCoeff();
}

}  // namespace

ExpMoments exp_moments(const FeSpace& space, const Field& u) {
  const real shift = quadrature_max(space, u);
  ExpMoments out;
  out.density = vec::Zero(space.size());
  real total = 0;
  for_each_quadrature_point(space, u, shift, [&](const auto& idx, const Eigen::Vector3d& lam, real w) {
    total += w;
    for (int k = 0; k < 3; ++k) out.density(idx(k)) += w * lam(k);
  });
  out.density /= total;
  out.log_integral = shift + std::log(total);
  return out;
}

real log_integral_exp(const FeSpace& space, const Field& u) {
  const real shift = quadrature_max(space, u);
  real total = 0;
  for_each_quadrature_point(space, u, shift, [&](const auto&, const Eigen::Vector3d&, real w) { total += w; });
  return shift + std::log(total);
}

sparse exp_weighted_mass(const FeSpace& space, const Field& u) {
  const real shift = quadrature_max(space, u);
  std::vector<Eigen::Triplet<real>> trips;
  trips.reserve(27 * space.mesh().num_triangles());
  real total = 0;
  for_each_quadrature_point(space, u, shift, [&](const auto& idx, const Eigen::Vector3d& lam, real w) {
    total += w;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(idx(i), idx(j), w * lam(i) * lam(j));
  });
  sparse e(space.size(), space.size());
  e.setFromTriplets(trips.begin(), trips.end());
  return e / total;
}

real energy(const FeSpace& space, const Field& u, const Parameters& p) {
  const Field w = space.zero_mean(u);
  const real quad = 0.5 * (space.dirichlet(w) + p.beta * space.l2_norm_sq(w));
  return quad - p.rho * log_integral_exp(space, w);
}

vec gradient_dual(const FeSpace& space, const Field& u, const Parameters& p) {
  const Field w = space.zero_mean(u);
  const auto mom = exp_moments(space, w);
  return space.stiffness() * w + p.beta * (space.mass() * w) - p.rho * (mom.density - space.lumped() / space.area());
}

Field gradient(const FeSpace& space, const Field& u, const Parameters& p) {
  return space.zero_mean(space.mass_solve(gradient_dual(space, u, p)));
}

real residual_norm(const FeSpace& space, const Field& u, const Parameters& p) {
  const vec r = gradient_dual(space, u, p);
  return std::sqrt(std::max(real(0), r.dot(space.mass_solve(r))));
}

HessianParts hessian_parts(const FeSpace& space, const Field& u, const Parameters& p) {
  const Field w = space.zero_mean(u);
  HessianParts h;
  h.a = space.stiffness() + p.beta * space.mass();
  if (p.rho != 0) {
    h.a -= p.rho * exp_weighted_mass(space, w);
    h.b = exp_moments(space, w).density;
    h.c = p.rho;
  } else {
    h.b = vec::Zero(space.size());
  }
  return h;
}

Field hessian_apply(const FeSpace& space, const Field& u, const Parameters& p, const Field& v) {
  const auto h = hessian_parts(space, u, p);
  return space.zero_mean(space.mass_solve(h.apply(space.zero_mean(v))));
}

vec project_pi(const FeSpace& space, const SpectralBasis& basis, const Field& u, Eigen::Index count) {
  if (count < 0 || count > basis.size())
    throw Error(ErrorKind::invalid_argument, "projection index exceeds the available eigenpairs");
  const vec mu = space.mass() * u;
  return basis.eigenvectors.leftCols(count).transpose() * mu;
}

}  // namespace ks
