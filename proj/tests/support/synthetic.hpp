#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/QR>

#include "geoscore/matrix.hpp"
#include "geoscore/random.hpp"

namespace geoscore::testing {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian with the R-diagonal
// sign folded into Q.
inline Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  Matrix g = gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

// n points uniform in [0,1]^d, placed in `ambient` dimensions by a random
// rotation.
inline Matrix embedded_cube(Eigen::Index n, Eigen::Index d, Eigen::Index ambient, Rng& rng) {
  Matrix x = Matrix::Zero(n, ambient);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform();
  return x * random_orthogonal(ambient, rng);
}

// n x d matrix whose singular values are exactly (j+1)^-alpha.
inline Matrix power_law_matrix(Eigen::Index n, Eigen::Index d, double alpha, Rng& rng) {
  const Eigen::Index r = std::min(n, d);
  Matrix u = random_orthogonal(n, rng).leftCols(r);
  Matrix v = random_orthogonal(d, rng).leftCols(r);
  Vector s(r);
  for (Eigen::Index j = 0; j < r; ++j) s(j) = std::pow(static_cast<double>(j + 1), -alpha);
  return u * s.asDiagonal() * v.transpose();
}

// Cyclic Jacobi eigenvalues of a symmetric matrix. Shares no code with the
// library's SVD path.
inline std::vector<double> jacobi_eigenvalues(Matrix a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(out.rbegin(), out.rend());
  return out;
}

// Singular values as square roots of eigenvalues of the smaller Gram matrix.
inline std::vector<double> oracle_singular_values(const Matrix& x) {
  const Matrix gram = x.rows() >= x.cols() ? Matrix(x.transpose() * x) : Matrix(x * x.transpose());
  std::vector<double> ev = jacobi_eigenvalues(gram);
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  return ev;
}

// Metric formulas written out directly on a spectrum.
inline double oracle_mev(const std::vector<double>& s) {
  double total = 0.0;
  for (double v : s) total += v * v;
  return s.front() * s.front() / total;
}

inline double oracle_erank(const std::vector<double>& s) {
  double total = 0.0;
  for (double v : s) total += v;
  double h = 0.0;
  for (double v : s) {
    const double p = v / total;
    if (p > 0) h -= p * std::log(p);
  }
  return std::exp(h);
}

inline double oracle_schatten(const std::vector<double>& s, double p) {
  double total = 0.0;
  for (double v : s) total += std::pow(v, p);
  return std::pow(total, 1.0 / p);
}

inline double oracle_resultant(const Matrix& x) {
  Vector mean = Vector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x.row(i).transpose() / x.row(i).norm();
  return (mean / static_cast<double>(x.rows())).norm();
}

// Lambda-grid MAUVE evaluated term by term, no shared helpers.
inline double oracle_mauve(const std::vector<double>& p, const std::vector<double>& q, int grid) {
  double best = 1e300;
  for (int i = 1; i <= grid; ++i) {
    const double lam = static_cast<double>(i) / (grid + 1);
    double kl_p = 0.0, kl_q = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double r = lam * p[j] + (1 - lam) * q[j];
      if (p[j] > 0) kl_p += p[j] * std::log(p[j] / r);
      if (q[j] > 0) kl_q += q[j] * std::log(q[j] / r);
    }
    best = std::min(best, lam * kl_p + (1 - lam) * kl_q);
  }
  return std::clamp(1.0 - best, 0.0, 1.0);
}

}  // namespace geoscore::testing
