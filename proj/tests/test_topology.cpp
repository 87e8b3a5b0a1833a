#include "ks/spectrum.hpp"
#include "ks/topology.hpp"

#include <doctest.h>

#include <random>

using namespace ks;

namespace {

// Pascal's triangle, independent of the library's binomial.
long pascal(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  std::vector<long> row{1};
  for (long i = 1; i <= n; ++i) {
    std::vector<long> next(i + 1, 1);
    for (long j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
    row = next;
  }
  return row[k];
}

}  // namespace

TEST_SUITE("topology") {

TEST_CASE("binomials are exact") {
  for (long n = 0; n <= 30; ++n)
    for (long k = -1; k <= n + 1; ++k) CHECK(binomial(n, k) == std::uint64_t(pascal(n, k)));
  CHECK(binomial(60, 30) == 118264581564861424ULL);
  CHECK_THROWS_AS(binomial(200, 100), Error);
}

TEST_CASE("mass index") {
  CHECK(mass_index(13) == 1);
  CHECK(mass_index(1) == 0);
  CHECK(mass_index(26) == 2);
  CHECK_THROWS_AS(mass_index(4 * pi), Error);
  CHECK_THROWS_AS(mass_index(12.566370614), Error);
  CHECK_THROWS_AS(mass_index(0), Error);
  CHECK_THROWS_AS(mass_index(-3), Error);
}

TEST_CASE("indices on the disk and the square") {
  const Mesh disk = build_builtin("disk", 128);
  const SpectralBasis b = eigenpairs(disk, 6);
  const Indices ix = indices({-5, 13}, disk.area, b.eigenvalues);
  CHECK(ix.k == 1);
  CHECK(ix.i == 2);
  CHECK(ix.j == 2);
  const Mesh sq = build_builtin("unit_square", 16);
  const Indices iy = indices({1, 1}, sq.area, eigenpairs(sq, 4).eigenvalues);
  CHECK(iy.k == 0);
  CHECK(iy.i == 0);
  CHECK(iy.j == 0);
}

TEST_CASE("verdict examples") {
  CHECK(existence_verdict(1, 2, 2, 0) == Verdict::guaranteed_nontrivial);
  CHECK(existence_verdict(0, 0, 0, 0) == Verdict::not_guaranteed);
  CHECK(existence_verdict(1, 0, 2, 1) == Verdict::guaranteed_nontrivial);
}

TEST_CASE("verdict truth table") {
  for (int k = 0; k <= 5; ++k)
    for (int i = 0; i <= 5; ++i)
      for (int j = 0; j <= 5; ++j)
        for (int g = 0; g <= 3; ++g) {
          const bool expected = g == 0 ? 2 * k + i != j : !(k == 0 && i == j);
          CHECK((existence_verdict(k, i, j, g) == Verdict::guaranteed_nontrivial) == expected);
        }
}

TEST_CASE("simply connected verdict flips exactly at J = 2K + I") {
  for (int k = 0; k <= 5; ++k)
    for (int i = 0; i <= 5; ++i) {
      const int j = 2 * k + i;
      CHECK(existence_verdict(k, i, j, 0) == Verdict::not_guaranteed);
      CHECK(existence_verdict(k, i, j + 1, 0) == Verdict::guaranteed_nontrivial);
      if (j > 0) CHECK(existence_verdict(k, i, j - 1, 0) == Verdict::guaranteed_nontrivial);
    }
}

TEST_CASE("homology rank examples") {
  auto h = homology_rank(2, 1, 0);
  CHECK(h.degree == 4);
  CHECK(h.rank == 1);
  h = homology_rank(1, 0, 2);
  CHECK(h.degree == 1);
  CHECK(h.rank == 3);
  for (int g = 0; g <= 3; ++g) {
    h = homology_rank(0, 3, g);
    CHECK(h.degree == 2);
    CHECK(h.rank == 1);
  }
  CHECK_THROWS_AS(homology_rank(0, 0, 1), Error);
}

TEST_CASE("boundary barycenter homology") {
  for (long k = 1; k <= 5; ++k)
    for (int g = 1; g <= 3; ++g) {
      CHECK(boundary_barycenter_homology(2 * k - 1, k, g) == std::uint64_t(pascal(k + g, g)));
      CHECK(boundary_barycenter_homology(2 * k, k, g) == 0);
      for (long q = -1; q <= 2 * k + 1; ++q) {
        const bool in_band = q >= std::max(k - 1, 2 * k - g - 1) && q <= 2 * k - 1;
        const long expected = in_band ? pascal(g + q - k + 1, g) * pascal(g, 2 * k - q - 1) : 0;
        CHECK(boundary_barycenter_homology(q, k, g) == std::uint64_t(expected));
      }
    }
  CHECK(boundary_barycenter_homology(2, 2, 1) == 2);
}

TEST_CASE("homology rank is the top boundary degree shifted by I") {
  for (long k = 1; k <= 5; ++k)
    for (long i = 0; i <= 5; ++i)
      for (int g = 0; g <= 3; ++g) {
        const auto h = homology_rank(k, i, g);
        CHECK(h.degree == 2 * k + i - 1);
        CHECK(h.rank == boundary_barycenter_homology(2 * k - 1, k, g));
        CHECK(h.rank == std::uint64_t(pascal(k + g, g)));
      }
}

TEST_CASE("Euler characteristic") {
  CHECK(euler_characteristic(3, 1) == 0);
  CHECK(euler_characteristic(4, 2) == -2);
  CHECK(euler_characteristic(2, 0) == 1);
  for (long k = 2; k <= 5; ++k) {
    CHECK(euler_characteristic(k, 0) == 1);
    for (int g = 1; g <= 3; ++g) {
      CHECK(euler_characteristic(k, g) == 1 - pascal(k / 2 + g - 1, g - 1));
      CHECK(euler_characteristic(k, g) == euler_characteristic_product(k, g));
    }
  }
  CHECK_THROWS_AS(euler_characteristic(1, 1), Error);
}

TEST_CASE("trivial Morse index equals J") {
  const Mesh disk = build_builtin("disk", 64);
  const vec ev = eigenpairs(disk, 12).eigenvalues;
  CHECK(trivial_morse_index({-5, 13}, disk.area, ev) == 2);
  const Mesh sq = build_builtin("unit_square", 16);
  CHECK(trivial_morse_index({1, 1}, sq.area, eigenpairs(sq, 4).eigenvalues) == 0);
  std::mt19937 rng(11);
  std::uniform_real_distribution<real> beta(-20, 3), rho(0.5, 60);
  for (int trial = 0; trial < 20; ++trial) {
    const Parameters p{beta(rng), rho(rng)};
    try {
      const Indices ix = indices(p, disk.area, ev);
      CHECK(ix.j == trivial_morse_index(p, disk.area, ev));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::resonance);
    }
  }
}

TEST_CASE("analyze reports degenerate cases without throwing") {
  const Mesh sq = build_builtin("unit_square", 16);
  const vec ev = eigenpairs(sq, 6).eigenvalues;
  auto r = analyze({0, 4 * pi}, sq.area, 0, ev);
  CHECK(r.verdict == Verdict::degenerate);
  CHECK(r.resonant.rho);
  r = analyze({-ev(0), 1}, sq.area, 0, ev);
  CHECK(r.verdict == Verdict::degenerate);
  CHECK(r.resonant.beta);
  r = analyze({1 - ev(0), 1}, sq.area, 0, ev);
  CHECK(r.resonant.beta_shift);
  r = analyze({1, 1}, sq.area, 0, ev);
  CHECK(r.verdict == Verdict::not_guaranteed);
  CHECK_FALSE(r.homology.has_value());
  r = analyze({-15, 13}, sq.area, 0, ev);
  REQUIRE(r.indices.has_value());
  CHECK(r.homology->degree == 2 * r.indices->k + r.indices->i - 1);
}

}
