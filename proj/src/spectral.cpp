#include "geoscore/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/SVD>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "geoscore/error.hpp"

namespace geoscore::spectral {

SingularSpectrum::SingularSpectrum(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ParameterError("singular spectrum is empty");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw ParameterError(fmt::format("invalid singular value {}", v));
  }
  if (!std::is_sorted(values_.begin(), values_.end(), std::greater<>())) {
    throw ParameterError("singular values must be sorted non-increasing");
  }
}

namespace {

void require_finite(const MatrixView& x, const char* what) {
  if (x.rows() < 1 || x.cols() < 1) throw ParameterError(fmt::format("{}: empty matrix", what));
  if (!x.allFinite()) throw ParameterError(fmt::format("{}: matrix has non-finite entries", what));
}

// Copy of the spectrum with sub-floor values set to exactly zero. Throws when
// nothing is left.
std::vector<double> floored(const SingularSpectrum& s, const char* what) {
  const double top = s.largest();
  if (top <= 0.0) throw DegenerateError(fmt::format("{} undefined for an all-zero spectrum", what));
  std::vector<double> v = s.values();
  for (double& x : v) {
    if (x < kSpectrumFloor * top) x = 0.0;
  }
  return v;
}

}  // namespace

Matrix center_rows(const MatrixView& x) {
  Matrix out = x;
  out.rowwise() -= x.colwise().mean();
  return out;
}

SingularSpectrum singular_values(const MatrixView& x) {
  require_finite(x, "singular_values");
  Eigen::BDCSVD<Matrix> svd(x);
  const Vector& sv = svd.singularValues();
  std::vector<double> values(sv.data(), sv.data() + sv.size());
  for (double& v : values) v = std::max(v, 0.0);
  std::sort(values.begin(), values.end(), std::greater<>());
  return SingularSpectrum(std::move(values));
}

double mev(const SingularSpectrum& spectrum) {
  const std::vector<double> v = floored(spectrum, "MEV");
  // Scale by sigma_1 before squaring to keep the ratio exact under scaling
  // and away from overflow.
  double total = 0.0;
  for (double s : v) {
    const double r = s / v.front();
    total += r * r;
  }
  return 1.0 / total;
}

double effective_rank(const SingularSpectrum& spectrum) {
  const std::vector<double> v = floored(spectrum, "effective rank");
  double sum = 0.0;
  for (double s : v) sum += s;
  double entropy = 0.0;
  for (double s : v) {
    if (s == 0.0) continue;  // 0 log 0 = 0
    const double p = s / sum;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double schatten_norm(const SingularSpectrum& spectrum, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError(fmt::format("Schatten p must be >= 1, got {}", p));
  const double top = spectrum.largest();
  if (top == 0.0) return 0.0;
  // Factor out sigma_1 so that large p does not overflow.
  double total = 0.0;
  for (double s : spectrum.values()) total += std::pow(s / top, p);
  return top * std::pow(total, 1.0 / p);
}

double resultant_length(const MatrixView& x) {
  require_finite(x, "resultant_length");
  const Vector norms = x.rowwise().norm();
  std::vector<Eigen::Index> degenerate;
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (norms[i] <= kRowNormFloor) degenerate.push_back(i);
  }
  if (!degenerate.empty()) {
    throw DegenerateError(fmt::format("resultant length: near-zero rows {}", degenerate));
  }
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x.row(i) / norms[i];
  mean /= static_cast<double>(x.rows());
  return std::min(mean.norm(), 1.0);
}

}  // namespace geoscore::spectral
