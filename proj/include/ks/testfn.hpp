#ifndef KS_TESTFN_HPP
#define KS_TESTFN_HPP

#include "ks/barycenter.hpp"
#include "ks/common.hpp"
#include "ks/energy.hpp"

#include <vector>

namespace ks {

/// log of sum_k w_k / (1 + scale^2 |x - x_k|^2)^2 sampled at the vertices.
Field bubble_raw(const Mesh& mesh, const BarycenterMeasure& mu, real scale);

/// bubble_raw with its mean removed.
Field bubble(const FeSpace& space, const BarycenterMeasure& mu, real scale);

/// sqrt(log+ t_scale) * sum_i sigma_i phi_i.
Field eigen_tail(const SpectralBasis& basis, const vec& sigma, real t_scale);

struct TestConfig {
  real lambda = 1;
  JoinPoint zeta;
};

/// Zero-mean bubble at scale lambda (1 - t) plus the eigen tail at lambda t.
/// The bubble is skipped when the measure is empty and the tail when the
/// sphere coordinate is empty.
Field phi_lambda(const FeSpace& space, const SpectralBasis& basis, const TestConfig& cfg);

/// Throws a resolution error unless 1/scale >= 2 h near every atom, h being
/// the longest edge of the triangles around it.
void check_resolution(const Mesh& mesh, const BarycenterMeasure& mu, real scale);

struct SlopeFit {
  real slope = 0;
  real intercept = 0;
  std::vector<real> x, y;  // log(scale) and the fitted quantity
};

/// Least-squares line through (x_i, y_i).
SlopeFit fit_line(std::vector<real> x, std::vector<real> y);

/// Slope of the bubble's Dirichlet energy against log(scale). Needs at least
/// three scales in geometric progression and a mesh that resolves the
/// largest one.
SlopeFit dirichlet_slope(const FeSpace& space, const BarycenterMeasure& mu, const std::vector<real>& scales);

/// Slope of the mean of the unprojected bubble against log(scale).
SlopeFit mean_slope(const FeSpace& space, const BarycenterMeasure& mu, const std::vector<real>& scales);

/// log of the integral of e^u minus c times the Dirichlet energy, with
/// c = 1/(8 pi), or 1/(16 pi) for fields vanishing on the boundary.
real mt_probe(const FeSpace& space, const Field& u, bool compactly_supported);

/// Lower-bound statistic log int e^Phi - 2 log+(L(1-t)) + c sqrt(log+(L t)).
real exp_lower_statistic(const FeSpace& space, const Field& phi, real lambda, real t, real c);

/// Upper-bound statistic int Phi^2 - log+(L t) - c sqrt(log+(L t)).
real l2_upper_statistic(const FeSpace& space, const Field& phi, real lambda, real t, real c);

/// Constants of the two inequality probes, fitted once on unit_square(64)
/// with boundary and interior atoms, t in {0, 1/4, 1/2, 3/4, 1} and
/// Lambda in {10, 20, 40, 80}. Observed extremes were -3.26 (exp) and 5.02
/// (l2); the bounds keep a margin of about one unit.
struct FrozenBounds {
  real exp_c = 1;
  real exp_floor = -4;
  real l2_c = 2;
  real l2_ceiling = 6;
};

struct ProbeRow {
  real lambda = 0;
  real dirichlet = 0;
  real mean = 0;     // mean of the unprojected bubble part
  real logint = 0;   // log of the integral of e^Phi
  real l2 = 0;       // integral of Phi^2
  real energy = 0;
};

/// Evaluates the test family over a grid of lambda values.
std::vector<ProbeRow> probe_grid(const FeSpace& space, const SpectralBasis& basis, const JoinPoint& zeta,
                                 const std::vector<real>& lambdas, const Parameters& p);

}  // namespace ks

#endif  // KS_TESTFN_HPP
