#ifndef KS_TOPOLOGY_HPP
#define KS_TOPOLOGY_HPP

#include "ks/common.hpp"
#include "ks/energy.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace ks {

/// Exact binomial coefficient; zero when k < 0 or k > n. Throws on overflow.
std::uint64_t binomial(long n, long k);

enum class Verdict { guaranteed_nontrivial, not_guaranteed, degenerate };
std::string to_string(Verdict v);

struct ResonanceFlags {
  bool rho = false;         // rho in 4 pi N, or rho <= 0
  bool beta = false;        // beta = -lambda_i
  bool beta_shift = false;  // beta - rho / |Omega| = -lambda_j

  bool any() const { return rho || beta || beta_shift; }
};

struct Indices {
  Eigen::Index k = 0, i = 0, j = 0;
};

struct HomologyClass {
  long degree = 0;
  std::uint64_t rank = 0;
};

struct ConditionReport {
  Parameters params;
  real area = 0;
  std::optional<Indices> indices;  // absent when degenerate
  int genus = 0;
  ResonanceFlags resonant;
  Verdict verdict = Verdict::degenerate;
  std::optional<HomologyClass> homology;  // absent when K = I = 0 or degenerate
  std::string note;
};

/// Mass bracket 4K pi < rho < 4(K+1) pi. Throws a resonance error when rho
/// is within tolerance of a multiple of 4 pi, and an invalid-argument error
/// for rho <= 0 (outside the theorem).
Eigen::Index mass_index(real rho, real tol = -1);

/// K, I and J. Throws a resonance error naming the failed condition.
Indices indices(const Parameters& p, real area, const Eigen::Ref<const vec>& eigenvalues);

Verdict existence_verdict(Eigen::Index k, Eigen::Index i, Eigen::Index j, int genus);

/// Top reduced homology of the join of the barycenter space with S^{I-1}.
/// Throws for K = I = 0 (the low sublevel is empty: coercive regime).
HomologyClass homology_rank(Eigen::Index k, Eigen::Index i, int genus);

/// Rank of the q-th reduced homology of the K-th barycenter space of g
/// circles; zero outside the band max{K-1, 2K-g-1} <= q <= 2K-1.
std::uint64_t boundary_barycenter_homology(long q, long k, int g);

/// Euler characteristic of (Omega_boundary)_K for K >= 2.
long euler_characteristic(long k, int genus);
/// Same quantity through the product form, valid for every genus.
long euler_characteristic_product(long k, int genus);

/// Number of i with lambda_i + beta - rho/area < 0.
Eigen::Index trivial_morse_index(const Parameters& p, real area, const Eigen::Ref<const vec>& eigenvalues);

/// Full report: never throws for resonance, records it instead.
ConditionReport analyze(const Parameters& p, real area, int genus, const Eigen::Ref<const vec>& eigenvalues);

}  // namespace ks

#endif  // KS_TOPOLOGY_HPP
