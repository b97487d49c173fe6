#include "lrps/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace lrps {

namespace {

bool spectrum_order(const std::complex<double>& a, const std::complex<double>& b) {
  double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

template <typename Mat>
bool eigenvalues_of(const Mat& matrix, std::vector<std::complex<double>>& vals) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix.template cast<std::complex<double>>());
  if (solver.info() != Eigen::Success) return false;
  vals.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + matrix.rows());
  return true;
}

// the real Schur path is more robust on rank-deficient stochastic matrices
bool eigenvalues_of(const Eigen::MatrixXd& matrix, std::vector<std::complex<double>>& vals) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, false);
  if (solver.info() == Eigen::Success) {
    vals.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + matrix.rows());
    return true;
  }
  return eigenvalues_of<Eigen::MatrixXd>(matrix, vals);
}

template <typename Mat>
SpectrumResult spectrum_impl(const Mat& matrix, double rank_tol) {
  SpectrumResult res;
  std::vector<std::complex<double>> vals;
  if (!eigenvalues_of(matrix, vals)) {
    res.converged = false;
    return res;
  }
  res.spectrum = make_spectrum(std::move(vals));

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(matrix.template cast<std::complex<double>>());
  const auto& sv = svd.singularValues();
  double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * smax) ++rank;
  res.numerical_rank = smax > 0.0 ? rank : 0;
  res.converged = true;
  return res;
}

}  // namespace

Spectrum make_spectrum(std::vector<std::complex<double>> values) {
  std::sort(values.begin(), values.end(), spectrum_order);
  return Spectrum{std::move(values)};
}

bool is_conjugate_closed(const Spectrum& s, double tol) {
  std::vector<bool> used(s.values.size(), false);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(s.values[i].imag()) <= tol) {
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < s.values.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(s.values[j] - std::conj(s.values[i])) <= tol) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

SpectrumResult spectrum_of(const Eigen::MatrixXd& matrix, double rank_tol) {
  return spectrum_impl(matrix, rank_tol);
}

SpectrumResult spectrum_of(const Eigen::MatrixXcd& matrix, double rank_tol) {
  return spectrum_impl(matrix, rank_tol);
}

Spectrum truncate_spectrum(const Spectrum& s, int d) {
  std::vector<std::complex<double>> head(
      s.values.begin(), s.values.begin() + std::min<std::size_t>(d, s.values.size()));
  return Spectrum{std::move(head)};
}

}  // namespace lrps
