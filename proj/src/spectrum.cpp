#include "ks/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace ks {

std::pair<Eigen::Matrix3d, Eigen::Matrix3d> element_matrices(const vec2& a, const vec2& b, const vec2& c) {
  const real area = 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
  if (!(area > 0)) throw Error(ErrorKind::invalid_mesh, "degenerate triangle in assembly");
  // gradient of the barycentric coordinate of vertex k is rot90(opposite edge) / (2 area)
  Eigen::Matrix<real, 2, 3> e;
  e.col(0) = c - b;
  e.col(1) = a - c;
  e.col(2) = b - a;
  const Eigen::Matrix3d stiff = (e.transpose() * e) / (4 * area);
  Eigen::Matrix3d mass = Eigen::Matrix3d::Constant(area / 12);
  mass.diagonal().setConstant(area / 6);
  return {stiff, mass};
}

FemMatrices assemble(const Mesh& mesh) {
  const Eigen::Index n = mesh.num_vertices();
  std::vector<Eigen::Triplet<real>> ks, ms;
  ks.reserve(9 * mesh.num_triangles());
  ms.reserve(9 * mesh.num_triangles());
  for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto idx = mesh.triangles.col(t);
    const auto [ke, me] = element_matrices(mesh.vertex(idx(0)), mesh.vertex(idx(1)), mesh.vertex(idx(2)));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        ks.emplace_back(idx(i), idx(j), ke(i, j));
        ms.emplace_back(idx(i), idx(j), me(i, j));
      }
  }
  FemMatrices out;
  out.stiffness.resize(n, n);
  out.mass.resize(n, n);
  // setFromTriplets sums duplicates in input order, which keeps assembly deterministic
  out.stiffness.setFromTriplets(ks.begin(), ks.end());
  out.mass.setFromTriplets(ms.begin(), ms.end());
  return out;
}

real eigen_residual(const sparse& stiffness, const sparse& mass, real lambda, const Eigen::Ref<const vec>& phi) {
  const vec mphi = mass * phi;
  const real denom = std::max(std::abs(lambda), real(1e-300)) * mphi.norm();
  return (stiffness * phi - lambda * mphi).norm() / denom;
}

void normalize_signs(mat& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const real scale = vectors.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, j)) > 1e-8 * scale) {
        if (vectors(i, j) < 0) vectors.col(j) *= -1;
        break;
      }
    }
  }
}

namespace {

// Modified Gram-Schmidt in the M inner product, applied twice.
void m_orthonormalize(mat& x, const sparse& mass) {
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const real c = x.col(i).dot(mass * x.col(j));
        x.col(j) -= c * x.col(i);
      }
      const real nrm = std::sqrt(x.col(j).dot(mass * x.col(j)));
      if (nrm > 1e-300) x.col(j) /= nrm;
    }
  }
}

void deflate_columns(mat& x, const sparse& mass, const Eigen::Ref<const vec>& d) {
  if (d.size() == 0) return;
  const vec md = mass * d;
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) -= d * md.dot(x.col(j));
}

}  // namespace

SubspaceResult lowest_pencil_eigenpairs(const std::function<vec(const vec&)>& solve,
                                        const std::function<vec(const vec&)>& apply_a, const sparse& mass,
                                        const Eigen::Ref<const vec>& deflate, Eigen::Index count, real tol,
                                        int max_iterations, Eigen::Index n) {
  vec d;
  if (deflate.size() > 0) d = deflate / std::sqrt(deflate.dot(mass * deflate));
  const Eigen::Index avail = n - (d.size() > 0 ? 1 : 0);
  const Eigen::Index p = std::min<Eigen::Index>(avail, std::max<Eigen::Index>(2 * count, count + 8));
  std::mt19937_64 rng(12345);
  std::normal_distribution<real> normal;
  mat x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  deflate_columns(x, mass, d);
  m_orthonormalize(x, mass);

  SubspaceResult res;
  for (int it = 1; it <= max_iterations; ++it) {
    mat y(n, p);
    for (Eigen::Index j = 0; j < p; ++j) y.col(j) = solve(mass * x.col(j));
    deflate_columns(y, mass, d);
    m_orthonormalize(y, mass);
    mat ay(n, p);
    for (Eigen::Index j = 0; j < p; ++j) ay.col(j) = apply_a(y.col(j));
    mat h = y.transpose() * ay;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<mat> es(h);
    x = y * es.eigenvectors();
    const vec theta = es.eigenvalues();
    // residuals of the wanted Ritz pairs
    const mat ax = ay * es.eigenvectors();
    real worst = 0;
    for (Eigen::Index j = 0; j < count; ++j) {
      const vec mx = mass * x.col(j);
      const real denom = std::max(std::abs(theta(j)), real(1e-12)) * mx.norm();
      worst = std::max(worst, (ax.col(j) - theta(j) * mx).norm() / denom);
    }
    res.iterations = it;
    if (worst < tol || it == max_iterations) {
      if (worst >= tol) throw Error(ErrorKind::convergence, "subspace iteration did not converge (residual " + std::to_string(worst) + ")");
      res.values = theta.head(count);
      res.vectors = x.leftCols(count);
      return res;
    }
  }
  throw Error(ErrorKind::convergence, "subspace iteration did not converge");
}

SpectralBasis eigenpairs(const Mesh& mesh, Eigen::Index count, const EigenOptions& opt) {
  return eigenpairs(assemble(mesh), count, opt);
}

SpectralBasis eigenpairs(const FemMatrices& fem, Eigen::Index count, const EigenOptions& opt) {
  const Eigen::Index n = fem.stiffness.rows();
  if (count < 1 || count >= n - 1)
    throw Error(ErrorKind::invalid_argument, "eigenpair count must be in [1, dofs - 2]");
  SpectralBasis out;
  out.stiffness = fem.stiffness;
  out.mass = fem.mass;

  const vec ones = vec::Ones(n);
  const real area = ones.dot(fem.mass * ones);
  const vec d = ones / std::sqrt(area);  // M-normalized constant
  const vec md = fem.mass * d;

  if (n < opt.dense_limit) {
    // deflate the constant by lifting it above the spectrum
    mat kd = mat(fem.stiffness);
    const mat md_dense = mat(fem.mass);
    real lift = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      lift = std::max(lift, kd.row(i).cwiseAbs().sum() / md_dense(i, i));
    lift = 4 * lift + 1;
    kd += lift * md * md.transpose();
    Eigen::GeneralizedSelfAdjointEigenSolver<mat> es(kd, md_dense);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::convergence, "dense generalized eigensolver failed");
    out.eigenvalues = es.eigenvalues().head(count);
    out.eigenvectors = es.eigenvectors().leftCols(count);
  } else {
    Eigen::SimplicialLLT<sparse> llt;
    const real shift = -1.0;
    sparse shifted = fem.stiffness - shift * fem.mass;
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::convergence, "factorization of shifted stiffness failed");
    auto solve = [&](const vec& rhs) -> vec { return llt.solve(rhs); };
    auto apply = [&](const vec& v) -> vec { return fem.stiffness * v; };
    auto r = lowest_pencil_eigenpairs(solve, apply, fem.mass, ones, count, opt.tolerance, opt.max_iterations, n);
    out.eigenvalues = r.values;
    out.eigenvectors = r.vectors;
  }

  // exact zero mean, then mass-orthonormalize again
  for (Eigen::Index j = 0; j < count; ++j) out.eigenvectors.col(j) -= d * md.dot(out.eigenvectors.col(j));
  m_orthonormalize(out.eigenvectors, fem.mass);
  // Rayleigh quotients after the clean-up
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto phi = out.eigenvectors.col(j);
    out.eigenvalues(j) = phi.dot(fem.stiffness * phi);
  }
  // the quotients can swap neighbours within a cluster by an ulp
  std::vector<Eigen::Index> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return out.eigenvalues(a) < out.eigenvalues(b); });
  const vec values = out.eigenvalues;
  const mat vectors = out.eigenvectors;
  for (Eigen::Index j = 0; j < count; ++j) {
    out.eigenvalues(j) = values(order[j]);
    out.eigenvectors.col(j) = vectors.col(order[j]);
  }
  normalize_signs(out.eigenvectors);
  if (!(out.eigenvalues(0) > 0)) throw Error(ErrorKind::convergence, "first nonconstant eigenvalue is not positive");
  return out;
}

Eigen::Index bracket_index(const Eigen::Ref<const vec>& eigenvalues, real threshold, real resonance_tol) {
  const real tol = resonance_tol < 0 ? 1e-6 * (1 + std::abs(threshold)) : resonance_tol;
  Eigen::Index below = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (std::abs(threshold + eigenvalues(i)) < tol)
      throw Error(ErrorKind::resonance, "threshold " + std::to_string(threshold) + " resonates with eigenvalue " +
                                            std::to_string(i + 1) + " = " + std::to_string(eigenvalues(i)));
    if (eigenvalues(i) < -threshold) ++below;
  }
  if (threshold < 0 && below == eigenvalues.size())
    throw Error(ErrorKind::precondition, "not enough eigenvalues to bracket threshold " + std::to_string(threshold));
  return below;
}

}  // namespace ks
