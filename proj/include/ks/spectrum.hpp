#ifndef KS_SPECTRUM_HPP
#define KS_SPECTRUM_HPP

#include "ks/common.hpp"
#include "ks/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>

namespace ks {

/// P1 stiffness and mass matrices of a mesh.
struct FemMatrices {
  sparse stiffness;
  sparse mass;
};

/// Element matrices of one triangle (stiffness, mass).
std::pair<Eigen::Matrix3d, Eigen::Matrix3d> element_matrices(const vec2& a, const vec2& b, const vec2& c);

FemMatrices assemble(const Mesh& mesh);

/// Lowest nonconstant Neumann eigenpairs. Eigenvectors are columns, mass
/// orthonormal and zero mean.
struct SpectralBasis {
  sparse stiffness;
  sparse mass;
  vec eigenvalues;
  mat eigenvectors;

  Eigen::Index size() const { return eigenvalues.size(); }
  auto phi(Eigen::Index i) const { return eigenvectors.col(i); }
};

struct EigenOptions {
  Eigen::Index dense_limit = 2000;  // dense generalized solve below this many dofs
  real tolerance = 1e-10;           // relative residual target
  int max_iterations = 500;
};

SpectralBasis eigenpairs(const Mesh& mesh, Eigen::Index count, const EigenOptions& opt = {});
SpectralBasis eigenpairs(const FemMatrices& fem, Eigen::Index count, const EigenOptions& opt = {});

/// Relative residual ||K phi - lambda M phi|| / ||lambda M phi||.
real eigen_residual(const sparse& stiffness, const sparse& mass, real lambda, const Eigen::Ref<const vec>& phi);

/// Number of eigenvalues strictly below -threshold, i.e. the n with
/// -lambda_{n+1} < threshold < -lambda_n. Throws a resonance error if the
/// threshold sits within `resonance_tol` of some -lambda_i; a negative
/// tolerance selects the default 1e-6 (1 + |threshold|). Throws a
/// precondition error when every available eigenvalue lies below -threshold
/// (the bracket is not determined).
Eigen::Index bracket_index(const Eigen::Ref<const vec>& eigenvalues, real threshold, real resonance_tol = -1);

/// Shift-invert subspace iteration for the lowest eigenpairs of the pencil
/// (A, M) restricted to the M-orthogonal complement of `deflate` (may be
/// empty). `solve(y)` must return (A - shift M)^{-1} y on that complement.
struct SubspaceResult {
  vec values;
  mat vectors;
  int iterations = 0;
};
SubspaceResult lowest_pencil_eigenpairs(const std::function<vec(const vec&)>& solve,
                                        const std::function<vec(const vec&)>& apply_a, const sparse& mass,
                                        const Eigen::Ref<const vec>& deflate, Eigen::Index count, real tol,
                                        int max_iterations, Eigen::Index n);

/// Flips signs so the first non-negligible coefficient is positive.
void normalize_signs(mat& vectors);

}  // namespace ks

#endif  // KS_SPECTRUM_HPP
