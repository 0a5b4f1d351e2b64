#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geoscore/matrix.hpp"

namespace geoscore::spectral {

// Singular values sorted non-increasing, all >= 0. Length is min(n, d) when
// produced by singular_values().
class SingularSpectrum {
 public:
  // Throws ParameterError when `values` is empty, negative, non-finite, or not
  // sorted non-increasing.
  explicit SingularSpectrum(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double largest() const { return values_.front(); }

 private:
  std::vector<double> values_;
};

// Relative floor: singular values below kSpectrumFloor * sigma_1 count as 0
// in the ratio and entropy metrics.
inline constexpr double kSpectrumFloor = 1e-12;
inline constexpr double kRowNormFloor = 1e-12;

// Subtracts the column mean (the mean token vector) from every row. Metrics do
// not centre by default.
Matrix center_rows(const MatrixView& x);

SingularSpectrum singular_values(const MatrixView& x);

// sigma_1^2 / sum sigma_i^2.
double mev(const SingularSpectrum& spectrum);

// exp of the Shannon entropy of p_k = sigma_k / sum sigma_i (unsquared).
double effective_rank(const SingularSpectrum& spectrum);

// (sum sigma_i^p)^(1/p), p >= 1.
double schatten_norm(const SingularSpectrum& spectrum, double p);

// Norm of the mean of the unit-normalised rows. Rows with norm <=
// kRowNormFloor have no direction and are rejected with their indices.
double resultant_length(const MatrixView& x);

}  // namespace geoscore::spectral
