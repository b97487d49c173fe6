#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace lrps {

// Eigenvalues ordered by non-increasing modulus, ties broken by
// descending real part then descending imaginary part.
struct Spectrum {
  std::vector<std::complex<double>> values;

  int size() const { return static_cast<int>(values.size()); }
  const std::complex<double>& operator[](int k) const { return values[k]; }
};

Spectrum make_spectrum(std::vector<std::complex<double>> values);

// True when the multiset of values is closed under conjugation within tol.
bool is_conjugate_closed(const Spectrum& s, double tol = 1e-9);

struct SpectrumResult {
  Spectrum spectrum;        // all eigenvalues of the matrix, ordered
  int numerical_rank = 0;   // singular values > rank_tol * sigma_max
  bool converged = false;
};

// rank_tol is relative to the largest singular value.
SpectrumResult spectrum_of(const Eigen::MatrixXd& matrix, double rank_tol = 1e-9);
SpectrumResult spectrum_of(const Eigen::MatrixXcd& matrix, double rank_tol = 1e-9);

// Leading d eigenvalues under the Spectrum ordering.
Spectrum truncate_spectrum(const Spectrum& s, int d);

}  // namespace lrps
