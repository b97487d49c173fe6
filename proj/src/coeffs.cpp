#include "lrps/coeffs.hpp"

#include <cmath>
#include <stdexcept>

namespace lrps {

namespace {

// Binomial coefficients stay small here (j, k <= d + m_max).
double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

}  // namespace

std::vector<Complex> elem_sym_all(const Spectrum& lambda) {
  // expand prod_j (1 + lambda_j t); coefficient of t^k is alpha_k
  const int d = lambda.size();
  std::vector<Complex> coef(d + 1, Complex(0.0));
  coef[0] = Complex(1.0);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k >= 1; --k) coef[k] += lambda[j] * coef[k - 1];
  return {coef.begin() + 1, coef.end()};
}

Complex elem_sym(const Spectrum& lambda, int k) {
  if (k < 1 || k > lambda.size())
    throw std::invalid_argument("elem_sym: k out of range");
  return elem_sym_all(lambda)[k - 1];
}

Complex alpha_mk(const Spectrum& lambda, int m, int k) {
  if (m < 0 || k < 0) throw std::invalid_argument("alpha_mk: negative index");
  const int d = lambda.size();
  if (k > d || m < k) return Complex(0.0);
  if (k == 0) return m == 0 ? Complex(1.0) : Complex(0.0);
  // table[j][s][c]: sum over exponent vectors on the first j eigenvalues with
  // total degree s and exactly c positive entries
  std::vector<std::vector<Complex>> prev(m + 1, std::vector<Complex>(k + 1, Complex(0.0)));
  prev[0][0] = Complex(1.0);
  for (int j = 0; j < d; ++j) {
    auto next = prev;
    for (int s = 0; s < m; ++s) {
      for (int c = 0; c < k; ++c) {
        if (prev[s][c] == Complex(0.0)) continue;
        Complex power = lambda[j];
        for (int e = 1; s + e <= m; ++e) {
          next[s + e][c + 1] += prev[s][c] * power;
          power *= lambda[j];
        }
      }
    }
    prev = std::move(next);
  }
  return prev[m][k];
}

CoefficientTable beta_table(const Spectrum& lambda, int m_max) {
  if (m_max < 0) throw std::invalid_argument("beta_table: m_max must be >= 0");
  const int d = lambda.size();
  if (d < 1) throw std::invalid_argument("beta_table: empty spectrum");
  CoefficientTable table;
  table.lambda = lambda;
  table.alpha = elem_sym_all(lambda);
  std::vector<Complex> row(table.alpha);
  for (int k = 1; k <= d; ++k) table.beta[{0, k}] = row[k - 1];
  for (int m = 1; m <= m_max; ++m) {
    // beta_{m,k} = beta_{m-1,1} alpha_k - beta_{m-1,k+1}, with the
    // convention beta_{m-1,d+1} = 0
    std::vector<Complex> next(d);
    for (int k = 1; k < d; ++k) next[k - 1] = row[0] * table.alpha[k - 1] - row[k];
    next[d - 1] = row[0] * table.alpha[d - 1];
    row = std::move(next);
    for (int k = 1; k <= d; ++k) table.beta[{m, k}] = row[k - 1];
  }
  return table;
}

Complex beta_closed_form(const Spectrum& lambda, int m, int k) {
  const int d = lambda.size();
  Complex sum(0.0);
  int hi = std::min(m + k, d);
  for (int j = k; j <= hi; ++j) sum += binom(j - 1, k - 1) * alpha_mk(lambda, m + k, j);
  return sum;
}

Eigen::MatrixXcd companion(const Spectrum& lambda) {
  const int d = lambda.size();
  if (d < 1) throw std::invalid_argument("companion: empty spectrum");
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(d, d);
  auto alpha = elem_sym_all(lambda);
  for (int k = 1; k <= d; ++k) P(0, k - 1) = (k % 2 == 1 ? 1.0 : -1.0) * alpha[k - 1];
  for (int i = 1; i < d; ++i) P(i, i - 1) = Complex(1.0);
  return P;
}

std::vector<double> recurrence_coefficients(const Spectrum& lambda) {
  if (!is_conjugate_closed(lambda, 1e-9))
    throw std::invalid_argument("recurrence_coefficients: spectrum not conjugate-closed");
  auto alpha = elem_sym_all(lambda);
  std::vector<double> c(alpha.size());
  for (std::size_t k = 1; k <= alpha.size(); ++k) {
    Complex v = (k % 2 == 1 ? 1.0 : -1.0) * alpha[k - 1];
    if (std::abs(v.imag()) > 1e-10)
      throw std::invalid_argument("recurrence_coefficients: coefficients not real");
    c[k - 1] = v.real();
  }
  return c;
}

RewardProfile extrapolate(const Spectrum& lambda, const std::vector<double>& seed_values,
                          int horizon) {
  const int d = lambda.size();
  if (static_cast<int>(seed_values.size()) != d)
    throw std::invalid_argument("extrapolate: need exactly d seed values");
  if (horizon < d) throw std::invalid_argument("extrapolate: horizon must be >= d");
  auto c = recurrence_coefficients(lambda);
  RewardProfile profile;
  profile.kind = RewardProfile::Kind::predicted;
  profile.values = seed_values;
  profile.values.resize(horizon);
  for (int h = d; h < horizon; ++h) {
    double v = 0.0;
    for (int k = 1; k <= d; ++k) v += c[k - 1] * profile.values[h - k];
    profile.values[h] = v;
  }
  return profile;
}

double ch_extension_check(const Eigen::MatrixXd& A, int d, int m) {
  if (d < 1 || m < 0) throw std::invalid_argument("ch_extension_check: bad d or m");
  auto spec = spectrum_of(A);
  if (!spec.converged) throw std::runtime_error("ch_extension_check: eigensolver failed");
  if (spec.numerical_rank > d)
    throw std::invalid_argument("ch_extension_check: numerical rank exceeds d");
  Spectrum lambda = truncate_spectrum(spec.spectrum, d);
  auto table = beta_table(lambda, m);

  // powers A^1..A^{d+m+1}
  std::vector<Eigen::MatrixXcd> pw(d + m + 2);
  Eigen::MatrixXcd Ac = A.cast<Complex>();
  pw[1] = Ac;
  for (int j = 2; j <= d + m + 1; ++j) pw[j] = pw[j - 1] * Ac;

  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(A.rows(), A.cols());
  double scale = pw[d + m + 1].cwiseAbs().maxCoeff();
  for (int k = 1; k <= d; ++k) {
    Complex coef = (k % 2 == 1 ? 1.0 : -1.0) * table.beta_at(m, k);
    rhs += coef * pw[d + 1 - k];
    scale += std::abs(coef) * pw[d + 1 - k].cwiseAbs().maxCoeff();
  }
  double resid = (pw[d + m + 1] - rhs).cwiseAbs().maxCoeff();
  return resid / std::max(scale, 1e-300);
}

}  // namespace lrps
