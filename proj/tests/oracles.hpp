// Independent reference computations for the tests. Nothing here calls the
// library's numerical routines.
#ifndef KS_TEST_ORACLES_HPP
#define KS_TEST_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

constexpr double pi = 3.14159265358979323846;

// First zero of J1', so the lowest Neumann eigenvalue of the unit disk is its square.
constexpr double j1_prime_zero = 1.8411837813406593;

// Neumann eigenvalues of the unit square, pi^2 (m^2 + n^2), sorted, constant
// mode dropped.
inline std::vector<double> square_eigenvalues(int count) {
  std::vector<double> out;
  for (int m = 0; m <= count; ++m)
    for (int n = 0; n <= count; ++n)
      if (m + n > 0) out.push_back(pi * pi * (m * m + n * n));
  std::sort(out.begin(), out.end());
  out.resize(count);
  return out;
}

// Dense tableau simplex with Bland's rule for
//   max c'x  s.t.  A x <= b, x >= 0, with b >= 0.
inline double simplex_max(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                          const std::vector<double>& c) {
  const std::size_t m = a.size(), n = c.size();
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
    t[i][n + m] = b[i];
  }
  for (std::size_t j = 0; j < n; ++j) t[m][j] = -c[j];
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
  for (int guard = 0; guard < 100000; ++guard) {
    std::size_t col = n + m;
    for (std::size_t j = 0; j < n + m; ++j)
      if (t[m][j] < -1e-13) {
        col = j;
        break;
      }
    if (col == n + m) return t[m][n + m];
    std::size_t row = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      if (t[i][col] > 1e-13) {
        const double r = t[i][n + m] / t[i][col];
        if (r < best - 1e-15 || (std::abs(r - best) <= 1e-15 && row < m && basis[i] < basis[row])) {
          best = r;
          row = i;
        }
      }
    if (row == m) return std::numeric_limits<double>::infinity();
    const double piv = t[row][col];
    for (auto& x : t[row]) x /= piv;
    for (std::size_t i = 0; i <= m; ++i)
      if (i != row && t[i][col] != 0) {
        const double f = t[i][col];
        for (std::size_t j = 0; j <= n + m; ++j) t[i][j] -= f * t[row][j];
      }
    basis[row] = col;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct PointMass {
  double x, y, w;
};

// Primal LP of the bounded-Lipschitz distance over the union of supports:
// max sum h_a (mu_a - nu_a) with |h_a| <= 1 and h_a - h_b <= |p_a - p_b|.
// Shifted to g = h + 1 in [0, 2] so the origin is feasible.
inline double bl_distance_lp(const std::vector<PointMass>& mu, const std::vector<PointMass>& nu) {
  std::vector<PointMass> pts;
  std::vector<double> w;
  auto add = [&](const PointMass& p, double sign) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i].x == p.x && pts[i].y == p.y) {
        w[i] += sign * p.w;
        return;
      }
    pts.push_back(p);
    w.push_back(sign * p.w);
  };
  for (const auto& p : mu) add(p, 1);
  for (const auto& p : nu) add(p, -1);
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = 1;
    a.push_back(row);
    b.push_back(2);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        std::vector<double> row(n, 0.0);
        row[i] = 1;
        row[j] = -1;
        a.push_back(row);
        b.push_back(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
      }
  double shift = 0;
  for (double x : w) shift += x;
  return simplex_max(a, b, w) - shift;
}

// Gauss-Legendre nodes and weights on [a, b] by Newton on P_n.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& wt) {
  x.assign(n, 0);
  wt.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    wt[i] = (b - a) / ((1 - z * z) * dp * dp);
  }
}

// Distance from (x0, y0) to the boundary of the unit square along direction theta.
inline double square_ray(double x0, double y0, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  double r = std::numeric_limits<double>::infinity();
  if (c > 1e-15) r = std::min(r, (1 - x0) / c);
  if (c < -1e-15) r = std::min(r, -x0 / c);
  if (s > 1e-15) r = std::min(r, (1 - y0) / s);
  if (s < -1e-15) r = std::min(r, -y0 / s);
  return r;
}

// Angular integral of a closed-form radial antiderivative over the part of
// the unit square seen from (x0, y0) within [th0, th1]. The angular range is
// split at the corner directions so the integrand is smooth per panel.
inline double polar_square(double x0, double y0, double th0, double th1, const std::function<double(double)>& radial) {
  std::vector<double> cuts{th0, th1};
  for (auto [cx, cy] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}) {
    double a = std::atan2(cy - y0, cx - x0);
    for (int k = -1; k <= 1; ++k) {
      const double t = a + 2 * pi * k;
      if (t > th0 && t < th1) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> x, w;
  double total = 0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    gauss_legendre(40, cuts[p], cuts[p + 1], x, w);
    for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * radial(square_ray(x0, y0, x[i]));
  }
  return total;
}

// Continuum Dirichlet energy of log 1/(1 + L^2 r^2)^2 over the square seen
// from an atom: the radial integral is 8 (log(1+S) + 1/(1+S) - 1), S = L^2 R^2.
inline double bubble_dirichlet(double x0, double y0, double th0, double th1, double lambda) {
  return polar_square(x0, y0, th0, th1, [lambda](double r) {
    const double s = lambda * lambda * r * r;
    return 8 * (std::log1p(s) + 1 / (1 + s) - 1);
  });
}

// Continuum integral of the same bubble: -2 ((1+S) log(1+S) - S) / (2 L^2).
inline double bubble_integral(double x0, double y0, double th0, double th1, double lambda) {
  return polar_square(x0, y0, th0, th1, [lambda](double r) {
    const double s = lambda * lambda * r * r;
    return -((1 + s) * std::log1p(s) - s) / (lambda * lambda);
  });
}

// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle

#endif  // KS_TEST_ORACLES_HPP
