#include "ks/testfn.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <limits>

namespace ks {

Field bubble_raw(const Mesh& mesh, const BarycenterMeasure& mu, real scale) {
  if (mu.atoms.empty()) throw Error(ErrorKind::invalid_argument, "bubble needs at least one atom");
  if (!(scale >= 0)) throw Error(ErrorKind::invalid_argument, "bubble scale must be nonnegative");
  const real s2 = scale * scale;
  Field out(mesh.num_vertices());
  std::vector<real> terms(mu.atoms.size());
  for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
    const vec2 x = mesh.vertex(v);
    real top = -std::numeric_limits<real>::infinity();
    for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
      const real d2 = (x - mu.atoms[k].point).squaredNorm();
      terms[k] = std::log(mu.atoms[k].weight) - 2 * std::log1p(s2 * d2);
      top = std::max(top, terms[k]);
    }
    real acc = 0;
    for (real t : terms) acc += std::exp(t - top);
    out(v) = top + std::log(acc);
  }
  return out;
}

Field bubble(const FeSpace& space, const BarycenterMeasure& mu, real scale) {
  return space.zero_mean(bubble_raw(space.mesh(), mu, scale));
}

Field eigen_tail(const SpectralBasis& basis, const vec& sigma, real t_scale) {
  if (sigma.size() > basis.size()) throw Error(ErrorKind::invalid_argument, "sphere dimension exceeds the eigenbasis");
  const Field zero = Field::Zero(basis.eigenvectors.rows());
  if (sigma.size() == 0) return zero;
  const real amp = std::sqrt(log_plus(t_scale));
  if (amp == 0) return zero;
  return amp * (basis.eigenvectors.leftCols(sigma.size()) * sigma);
}

Field phi_lambda(const FeSpace& space, const SpectralBasis& basis, const TestConfig& cfg) {
  const real L = cfg.lambda, t = cfg.zeta.t;
  if (!(L >= 1)) throw Error(ErrorKind::invalid_argument, "Lambda must be at least 1");
  if (!(t >= 0 && t <= 1)) throw Error(ErrorKind::invalid_argument, "join parameter t must lie in [0, 1]");
  Field u = Field::Zero(space.size());
  if (!cfg.zeta.measure.atoms.empty() && t < 1) u += bubble(space, cfg.zeta.measure, L * (1 - t));
  if (cfg.zeta.sphere.size() > 0 && t > 0) u += eigen_tail(basis, cfg.zeta.sphere, L * t);
  return u;
}

void check_resolution(const Mesh& mesh, const BarycenterMeasure& mu, real scale) {
  if (scale <= 0) return;
  const real core = 1 / scale;
  const real reach = core + mesh.max_edge_length();
  for (const auto& a : mu.atoms) {
    real h = 0;
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
      const auto idx = mesh.triangles.col(t);
      bool near = false;
      for (int k = 0; k < 3; ++k) near = near || (mesh.vertex(idx(k)) - a.point).norm() <= reach;
      if (!near) continue;
      for (int k = 0; k < 3; ++k) h = std::max(h, (mesh.vertex(idx(k)) - mesh.vertex(idx((k + 1) % 3))).norm());
    }
    if (core < 2 * h)
      throw Error(ErrorKind::resolution, "bubble core 1/" + std::to_string(scale) + " is under-resolved (local edge " +
                                             std::to_string(h) + "); refine the mesh");
  }
}

SlopeFit fit_line(std::vector<real> x, std::vector<real> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::invalid_argument, "line fit needs two or more points");
  const Eigen::Index n = Eigen::Index(x.size());
  mat a(n, 2);
  vec b(n);
  for (Eigen::Index i = 0; i < n; ++i) a(i, 0) = x[i], a(i, 1) = 1, b(i) = y[i];
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  return {coef(0), coef(1), std::move(x), std::move(y)};
}

namespace {

std::vector<real> checked_logs(const std::vector<real>& scales) {
  if (scales.size() < 3) throw Error(ErrorKind::invalid_argument, "slope fits need at least three scales");
  std::vector<real> x;
  for (real s : scales) {
    if (!(s > 1)) throw Error(ErrorKind::invalid_argument, "scales must exceed 1");
    x.push_back(std::log(s));
  }
  const real step = x[1] - x[0];
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(step > 0) || std::abs(x[i] - x[i - 1] - step) > 1e-9 * (1 + std::abs(step)))
      throw Error(ErrorKind::invalid_argument, "scales must form an increasing geometric progression");
  return x;
}

}  // namespace

SlopeFit dirichlet_slope(const FeSpace& space, const BarycenterMeasure& mu, const std::vector<real>& scales) {
  auto x = checked_logs(scales);
  check_resolution(space.mesh(), mu, *std::max_element(scales.begin(), scales.end()));
  std::vector<real> y;
  for (real s : scales) y.push_back(space.dirichlet(bubble_raw(space.mesh(), mu, s)));
  return fit_line(std::move(x), std::move(y));
}

SlopeFit mean_slope(const FeSpace& space, const BarycenterMeasure& mu, const std::vector<real>& scales) {
  auto x = checked_logs(scales);
  std::vector<real> y;
  for (real s : scales) y.push_back(space.mean(bubble_raw(space.mesh(), mu, s)));
  return fit_line(std::move(x), std::move(y));
}

real mt_probe(const FeSpace& space, const Field& u, bool compactly_supported) {
  const Mesh& mesh = space.mesh();
  Field w = u;
  if (compactly_supported) {
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v)
      if (mesh.boundary_vertex[v] && std::abs(u(v)) > 1e-12 * (1 + u.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::precondition, "field does not vanish on the boundary");
  } else {
    w = space.zero_mean(u);
  }
  const real c = compactly_supported ? 1 / (16 * pi) : 1 / (8 * pi);
  return log_integral_exp(space, w) - c * space.dirichlet(w);
}

real exp_lower_statistic(const FeSpace& space, const Field& phi, real lambda, real t, real c) {
  return log_integral_exp(space, phi) - 2 * log_plus(lambda * (1 - t)) + c * std::sqrt(log_plus(lambda * t));
}

real l2_upper_statistic(const FeSpace& space, const Field& phi, real lambda, real t, real c) {
  const real lp = log_plus(lambda * t);
  return space.l2_norm_sq(phi) - lp - c * std::sqrt(lp);
}

std::vector<ProbeRow> probe_grid(const FeSpace& space, const SpectralBasis& basis, const JoinPoint& zeta,
                                 const std::vector<real>& lambdas, const Parameters& p) {
  std::vector<ProbeRow> rows;
  for (real L : lambdas) {
    const Field phi = phi_lambda(space, basis, {L, zeta});
    ProbeRow r;
    r.lambda = L;
    r.dirichlet = space.dirichlet(phi);
    r.mean = zeta.measure.atoms.empty() || zeta.t >= 1
                 ? 0
                 : space.mean(bubble_raw(space.mesh(), zeta.measure, L * (1 - zeta.t)));
    r.logint = log_integral_exp(space, phi);
    r.l2 = space.l2_norm_sq(phi);
    r.energy = energy(space, phi, p);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ks
