#include "ks/testfn.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace ks;

namespace {

BarycenterMeasure one_atom(vec2 p, AtomTag tag) {
  BarycenterMeasure mu;
  mu.atoms = {{p, 1, tag}};
  return mu;
}

std::vector<real> logs(const std::vector<real>& s) {
  std::vector<real> out;
  for (real x : s) out.push_back(std::log(x));
  return out;
}

}  // namespace

TEST_SUITE("testfn") {

TEST_CASE("raw bubble values") {
  const Mesh m = build_builtin("unit_square", 16);
  const auto mu = one_atom(vec2(0.5, 0.5), AtomTag::interior);
  CHECK(bubble_raw(m, mu, 0).cwiseAbs().maxCoeff() < 1e-15);
  const Field b = bubble_raw(m, mu, 8);
  for (Eigen::Index v = 0; v < m.num_vertices(); ++v) {
    const real r = (m.vertex(v) - vec2(0.5, 0.5)).norm();
    if (r < 1e-12) CHECK(std::abs(b(v)) < 1e-15);
    if (std::abs(r - 0.125) < 1e-12) CHECK(b(v) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  }
}

TEST_CASE("projected bubble has zero mean") {
  const FeSpace sp(build_builtin("disk", 32));
  const Field b = bubble(sp, one_atom(vec2(1, 0), AtomTag::boundary), 20);
  CHECK(std::abs(sp.mean(b)) < 1e-12);
}

TEST_CASE("eigen tail") {
  const FeSpace sp(build_builtin("unit_square", 24));
  const SpectralBasis b = eigenpairs(sp.mesh(), 4);
  const vec e1 = vec::Unit(2, 0);
  CHECK(eigen_tail(b, e1, 0.5).cwiseAbs().maxCoeff() == 0);
  CHECK(eigen_tail(b, e1, 1).cwiseAbs().maxCoeff() == 0);
  CHECK((eigen_tail(b, e1, std::exp(2.0)) - std::sqrt(2.0) * b.phi(0)).cwiseAbs().maxCoeff() < 1e-12);
  vec s(3);
  s << 0.6, 0, 0.8;
  for (real ts : {3.0, 50.0, 900.0}) {
    const Field psi = eigen_tail(b, s, ts);
    const real lp = std::log(ts);
    const real expected = lp * (0.36 * b.eigenvalues(0) + 0.64 * b.eigenvalues(2));
    CHECK(sp.dirichlet(psi) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(sp.dirichlet(psi) <= b.eigenvalues(2) * lp + 1e-8);
  }
  CHECK_THROWS_AS(eigen_tail(b, vec::Unit(5, 0), 10), Error);
}

TEST_CASE("test family endpoints") {
  const FeSpace sp(build_builtin("unit_square", 24));
  const SpectralBasis b = eigenpairs(sp.mesh(), 3);
  JoinPoint z;
  z.measure = one_atom(vec2(0.5, 0), AtomTag::boundary);
  z.sphere = vec::Unit(2, 1);
  z.t = 0;
  CHECK((phi_lambda(sp, b, {40, z}) - bubble(sp, z.measure, 40)).cwiseAbs().maxCoeff() < 1e-12);
  z.t = 1;
  CHECK((phi_lambda(sp, b, {40, z}) - eigen_tail(b, z.sphere, 40)).cwiseAbs().maxCoeff() < 1e-12);
  z.t = 0.5;
  const Field mid = phi_lambda(sp, b, {40, z});
  CHECK((mid - bubble(sp, z.measure, 20) - eigen_tail(b, z.sphere, 20)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(sp.mean(mid)) < 1e-12);
}

TEST_CASE("Dirichlet and mean slopes follow the continuum quadrature") {
  const std::vector<real> scales{10, 20, 40, 80};
  struct Case {
    vec2 p;
    AtomTag tag;
    real th0, th1;
  };
  for (const Case& c : {Case{vec2(0.5, 0), AtomTag::boundary, 0, pi}, Case{vec2(0.5, 0.5), AtomTag::interior, -pi, pi}}) {
    const Mesh m = refine_toward(build_builtin("unit_square", 32), c.p, 0.002, 0.1);
    const FeSpace sp(m);
    const auto mu = one_atom(c.p, c.tag);
    std::vector<real> d, mean;
    for (real s : scales) {
      d.push_back(oracle::bubble_dirichlet(c.p.x(), c.p.y(), c.th0, c.th1, s));
      mean.push_back(oracle::bubble_integral(c.p.x(), c.p.y(), c.th0, c.th1, s));
    }
    const real want_d = oracle::slope(logs(scales), d), want_mean = oracle::slope(logs(scales), mean);
    const SlopeFit fd = dirichlet_slope(sp, mu, scales);
    const SlopeFit fm = mean_slope(sp, mu, scales);
    CHECK(std::abs(fd.slope / want_d - 1) < 0.01);
    CHECK(std::abs(fm.slope - want_mean) < 0.02);
    // the quadrature itself approaches the limiting slopes
    CHECK(std::abs(want_d / (c.tag == AtomTag::boundary ? 16 * pi : 32 * pi) - 1) < 0.03);
    CHECK(std::abs(want_mean / -4 - 1) < 0.05);
  }
}

TEST_CASE("slope fits need a resolved core and a geometric grid") {
  const FeSpace sp(build_builtin("unit_square", 16));
  const auto mu = one_atom(vec2(0.5, 0.5), AtomTag::interior);
  CHECK_THROWS_AS(dirichlet_slope(sp, mu, {10, 20, 40, 80}), Error);
  try {
    dirichlet_slope(sp, mu, {10, 20, 40, 80});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
  }
  CHECK_THROWS_AS(dirichlet_slope(sp, mu, {2, 4}), Error);
  CHECK_THROWS_AS(dirichlet_slope(sp, mu, {2, 3, 7}), Error);
  CHECK_NOTHROW(dirichlet_slope(sp, mu, {1.25, 2.5, 5}));
}

TEST_CASE("line fit") {
  const SlopeFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
}

TEST_CASE("Moser-Trudinger probes") {
  const FeSpace sp(build_builtin("unit_square", 64));
  CHECK(mt_probe(sp, Field::Zero(sp.size()), false) == doctest::Approx(0).scale(1));
  const FeSpace disk(build_builtin("disk", 32));
  CHECK(mt_probe(disk, Field::Zero(disk.size()), false) == doctest::Approx(std::log(disk.area())).epsilon(1e-12));

  const auto b = one_atom(vec2(0.5, 0), AtomTag::boundary);
  const real first = mt_probe(sp, bubble_raw(sp.mesh(), b, 10), false);
  for (real s : {20.0, 40.0, 80.0}) CHECK(mt_probe(sp, bubble_raw(sp.mesh(), b, s), false) <= first + 1);

  // interior bubble cut off at its largest boundary value
  const auto in = one_atom(vec2(0.5, 0.5), AtomTag::interior);
  real first_c = 0;
  for (real s : {10.0, 20.0, 40.0, 80.0}) {
    Field u = bubble_raw(sp.mesh(), in, s);
    real top = -1e300;
    for (Eigen::Index v = 0; v < u.size(); ++v)
      if (sp.mesh().boundary_vertex[v]) top = std::max(top, u(v));
    u = (u.array() - top).max(0.0);
    const real stat = mt_probe(sp, u, true);
    if (s == 10) first_c = stat;
    CHECK(stat <= first_c + 1);
  }
  CHECK_THROWS_AS(mt_probe(sp, bubble_raw(sp.mesh(), in, 10), true), Error);
}

TEST_CASE("inequality statistics stay within the frozen bounds") {
  const FeSpace sp(build_builtin("unit_square", 64));
  const SpectralBasis b = eigenpairs(sp.mesh(), 3);
  const FrozenBounds fb;
  for (auto mu : {one_atom(vec2(0.5, 0), AtomTag::boundary), one_atom(vec2(0.4, 0.6), AtomTag::interior)})
    for (real t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      JoinPoint z{mu, vec::Unit(2, 0), t};
      for (real L : {10.0, 20.0, 40.0, 80.0}) {
        const Field phi = phi_lambda(sp, b, {L, z});
        CHECK(exp_lower_statistic(sp, phi, L, t, fb.exp_c) > fb.exp_floor);
        CHECK(l2_upper_statistic(sp, phi, L, t, fb.l2_c) < fb.l2_ceiling);
      }
    }
}

TEST_CASE("probe grid rows") {
  const FeSpace sp(build_builtin("disk", 32));
  const SpectralBasis b = eigenpairs(sp.mesh(), 3);
  JoinPoint z{one_atom(vec2(1, 0), AtomTag::boundary), vec::Unit(2, 0), 0.5};
  const Parameters p{-5, 13};
  const auto rows = probe_grid(sp, b, z, {10, 100}, p);
  REQUIRE(rows.size() == 2);
  const Field phi = phi_lambda(sp, b, {100, z});
  CHECK(rows[1].lambda == 100);
  CHECK(rows[1].dirichlet == doctest::Approx(sp.dirichlet(phi)));
  CHECK(rows[1].energy == doctest::Approx(energy(sp, phi, p)));
  CHECK(rows[1].logint == doctest::Approx(log_integral_exp(sp, phi)));
  CHECK(rows[1].mean == doctest::Approx(sp.mean(bubble_raw(sp.mesh(), z.measure, 50))));
}

TEST_CASE("energy along the test family decreases on a graded disk") {
  const Mesh m = refine_toward(build_builtin("disk", 128), vec2(1, 0), 2e-4);
  const FeSpace sp(m);
  const SpectralBasis b = eigenpairs(sp.mesh(), 4);
  JoinPoint z{one_atom(vec2(1, 0), AtomTag::boundary), vec::Unit(2, 0), 0};
  const Parameters p{-5, 13};
  real prev = 1e300;
  for (real L : {10.0, 100.0, 1000.0}) {
    const real e = energy(sp, phi_lambda(sp, b, {L, z}), p);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev < -10);
}

}
