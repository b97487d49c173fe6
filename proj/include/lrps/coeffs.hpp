#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "lrps/mdp.hpp"
#include "lrps/spectrum.hpp"

namespace lrps {

using Complex = std::complex<double>;

// alpha_k(lambda): sum of degree-k monomials in distinct eigenvalues.
Complex elem_sym(const Spectrum& lambda, int k);

// All of alpha_1..alpha_d at once via polynomial expansion.
std::vector<Complex> elem_sym_all(const Spectrum& lambda);

// alpha_{m,k}: sum over exponent vectors with exactly k positive entries
// summing to m. Zero when m < k or k > d; alpha_{k,k} = alpha_k.
Complex alpha_mk(const Spectrum& lambda, int m, int k);

struct CoefficientTable {
  Spectrum lambda;
  std::vector<Complex> alpha;                    // alpha[k-1] = alpha_k
  std::map<std::pair<int, int>, Complex> beta;   // (m,k) -> beta_{m,k}

  Complex beta_at(int m, int k) const { return beta.at({m, k}); }
};

// beta_{m,k} for 0 <= m <= m_max, 1 <= k <= d, by the recursion
// beta_{m,k} = beta_{m-1,1} alpha_k - beta_{m-1,k+1} with beta_{m-1,d+1} = 0
// and beta_0 = (alpha_1..alpha_d).
CoefficientTable beta_table(const Spectrum& lambda, int m_max);

// Closed form beta_{m,k} = sum_{j=k}^{(m+k) ^ d} C(j-1,k-1) alpha_{m+k,j};
// used by tests against the recursion.
Complex beta_closed_form(const Spectrum& lambda, int m, int k);

// d x d matrix with first row (-1)^{k+1} alpha_k and a unit subdiagonal;
// its eigenvalues are exactly lambda.
Eigen::MatrixXcd companion(const Spectrum& lambda);

// Coefficients c_k = (-1)^{k+1} alpha_k(lambda) of the order-d recurrence
// R_h = sum_k c_k R_{h-k}. Requires conjugate-closed lambda; the result is
// real (imaginary residue below 1e-10 is discarded).
std::vector<double> recurrence_coefficients(const Spectrum& lambda);

// Seeds R_1..R_d then unrolls the recurrence out to the horizon.
RewardProfile extrapolate(const Spectrum& lambda, const std::vector<double>& seed_values,
                          int horizon);

// Max-norm residual of A^{d+m+1} = sum_k (-1)^{k+1} beta_{m,k} A^{d+1-k},
// relative to the natural scale of the identity. Test-only diagnostic.
double ch_extension_check(const Eigen::MatrixXd& A, int d, int m);

}  // namespace lrps
