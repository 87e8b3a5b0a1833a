#ifndef KS_COMMON_HPP
#define KS_COMMON_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ks {

using real = double;

template <class T, int M = Eigen::Dynamic, int N = Eigen::Dynamic>
using matrix = Eigen::Matrix<T, M, N>;

template <class T, int M = Eigen::Dynamic>
using vector = matrix<T, M, 1>;

using vec = vector<real>;
using mat = matrix<real>;
using vec2 = vector<real, 2>;
using sparse = Eigen::SparseMatrix<real>;

// A scalar P1 function on the mesh, one coefficient per vertex.
using Field = vec;

constexpr real pi = std::numbers::pi_v<real>;

enum class ErrorKind {
  parse,
  invalid_mesh,
  invalid_argument,
  precondition,
  resonance,
  convergence,
  singular,
  resolution,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// log+(s) = max(0, log s), with log+(0) = 0.
template <class Scalar>
Scalar log_plus(Scalar s) {
  return s > Scalar(1) ? std::log(s) : Scalar(0);
}

}  // namespace ks

#endif  // KS_COMMON_HPP
