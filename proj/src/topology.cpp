#include "ks/topology.hpp"

#include <limits>

namespace ks {

std::uint64_t binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (long r = 1; r <= k; ++r) {
    acc = acc * (unsigned __int128)(n - k + r) / (unsigned __int128)r;  // exact at every step
    if (acc > std::numeric_limits<std::uint64_t>::max()) throw Error(ErrorKind::invalid_argument, "binomial overflow");
  }
  return std::uint64_t(acc);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::guaranteed_nontrivial: return "guaranteed_nontrivial";
    case Verdict::not_guaranteed: return "not_guaranteed";
    case Verdict::degenerate: return "degenerate";
  }
  return "?";
}

Eigen::Index mass_index(real rho, real tol) {
  if (!(rho > 0)) throw Error(ErrorKind::invalid_argument, "rho <= 0 lies outside the existence theorem");
  const real t = tol < 0 ? 1e-6 * (1 + std::abs(rho)) : tol;
  const real q = rho / (4 * pi);
  const real nearest = std::round(q);
  if (nearest >= 1 && std::abs(rho - 4 * pi * nearest) < t)
    throw Error(ErrorKind::resonance, "rho = " + std::to_string(rho) + " is a multiple of 4 pi");
  return Eigen::Index(std::floor(q));
}

Indices indices(const Parameters& p, real area, const Eigen::Ref<const vec>& eigenvalues) {
  Indices out;
  out.k = mass_index(p.rho);
  out.i = bracket_index(eigenvalues, p.beta);
  out.j = bracket_index(eigenvalues, p.beta - p.rho / area);
  return out;
}

Verdict existence_verdict(Eigen::Index k, Eigen::Index i, Eigen::Index j, int genus) {
  if (genus == 0) return 2 * k + i != j ? Verdict::guaranteed_nontrivial : Verdict::not_guaranteed;
  return (k != 0 || i != j) ? Verdict::guaranteed_nontrivial : Verdict::not_guaranteed;
}

HomologyClass homology_rank(Eigen::Index k, Eigen::Index i, int genus) {
  if (k == 0 && i == 0)
    throw Error(ErrorKind::precondition, "K = I = 0: the energy is coercive and low sublevels are empty");
  if (genus < 0) throw Error(ErrorKind::invalid_argument, "genus must be nonnegative");
  return {long(2 * k + i - 1), binomial(long(k) + genus, genus)};
}

std::uint64_t boundary_barycenter_homology(long q, long k, int g) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "K must be positive");
  if (q < std::max(k - 1, 2 * k - g - 1) || q > 2 * k - 1) return 0;
  return binomial(g + q - k + 1, g) * binomial(g, 2 * k - q - 1);
}

long euler_characteristic_product(long k, int genus) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "Euler characteristic needs K >= 2");
  const long n = k / 2;
  const long chi = 1 - genus;
  __int128 num = 1, fact = 1;
  for (long r = 1; r <= n; ++r) {
    num *= (r - chi);
    fact *= r;
  }
  return long(1 - num / fact);
}

long euler_characteristic(long k, int genus) {
  if (genus == 0) return euler_characteristic_product(k, genus);
  if (k < 2) throw Error(ErrorKind::invalid_argument, "Euler characteristic needs K >= 2");
  return 1 - long(binomial(k / 2 + genus - 1, genus - 1));
}

Eigen::Index trivial_morse_index(const Parameters& p, real area, const Eigen::Ref<const vec>& eigenvalues) {
  return bracket_index(eigenvalues, p.beta - p.rho / area);
}

ConditionReport analyze(const Parameters& p, real area, int genus, const Eigen::Ref<const vec>& eigenvalues) {
  ConditionReport r;
  r.params = p;
  r.area = area;
  r.genus = genus;
  Indices idx;
  try {
    idx.k = mass_index(p.rho);
  } catch (const Error& e) {
    r.resonant.rho = true;
    r.note += std::string(e.what()) + "; ";
  }
  auto bracket = [&](real threshold, bool& flag) -> Eigen::Index {
    try {
      return bracket_index(eigenvalues, threshold);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::resonance) throw;
      flag = true;
      r.note += std::string(e.what()) + "; ";
      return 0;
    }
  };
  idx.i = bracket(p.beta, r.resonant.beta);
  idx.j = bracket(p.beta - p.rho / area, r.resonant.beta_shift);
  if (r.resonant.any()) {
    r.verdict = Verdict::degenerate;
    return r;
  }
  r.indices = idx;
  r.verdict = existence_verdict(idx.k, idx.i, idx.j, genus);
  if (idx.k + idx.i >= 1) r.homology = homology_rank(idx.k, idx.i, genus);
  else r.note += "K = I = 0: coercive regime, low sublevels are empty; ";
  return r;
}

}  // namespace ks
