#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curricula/common.hpp"

namespace curricula {

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation (divide by n).
inline double stddev_of(std::span<const double> v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Sample standard deviation (divide by n-1); n >= 2.
inline double sample_stddev(std::span<const double> v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Rank transform with average ranks for ties; ranks start at 1.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x,
                                     std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least 2 points");
  double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

// Spearman rank correlation: average-rank transform, then Pearson on ranks.
inline std::optional<double> spearman(std::span<const double> x,
                                      std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: length mismatch");
  if (x.size() < 2) throw DataError("spearman: need at least 2 points");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct OlsFit {
  std::vector<double> coefficients;  // intercept first when fitted with one
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  std::size_t n = 0;
  std::size_t num_predictors = 0;  // excludes the intercept
};

// Ordinary least squares via Householder QR. `predictors` holds one column
// per predictor; an intercept column is prepended when `intercept` is true.
// Rank deficiency raises DataError naming the offending column.
inline OlsFit ols_fit(const std::vector<std::vector<double>>& predictors,
                      std::span<const double> y, bool intercept = true) {
  std::size_t n = y.size();
  std::size_t k = predictors.size();
  for (const auto& col : predictors) {
    if (col.size() != n) throw DataError("ols_fit: column length mismatch");
  }
  std::size_t cols = k + (intercept ? 1 : 0);
  if (cols == 0) throw DataError("ols_fit: no predictors");
  if (n < cols + 1) throw DataError("ols_fit: need more rows than columns");

  // Column-major working copy of [1 | X].
  std::vector<std::vector<double>> a(cols, std::vector<double>(n));
  if (intercept) a[0].assign(n, 1.0);
  for (std::size_t j = 0; j < k; ++j) a[j + (intercept ? 1 : 0)] = predictors[j];
  std::vector<double> rhs(y.begin(), y.end());

  std::vector<double> diag(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    // Householder vector for column j below row j.
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += a[j][i] * a[j][i];
    norm = std::sqrt(norm);
    double colscale = 0.0;
    for (std::size_t i = 0; i < n; ++i) colscale = std::max(colscale, std::abs(a[j][i]));
    if (norm <= 1e-12 * std::max(1.0, colscale) || norm == 0.0) {
      throw DataError("ols_fit: rank-deficient design matrix, column " +
                      std::to_string(j) +
                      (intercept && j > 0 ? " (predictor " + std::to_string(j - 1) + ")"
                                          : std::string()));
    }
    double alpha = a[j][j] > 0 ? -norm : norm;
    double v0 = a[j][j] - alpha;
    diag[j] = alpha;
    // Normalize so v[j] = 1 implicitly; beta = -1/(alpha*v0).
    double beta = v0 * alpha;  // = -(vᵀv)/2
    if (beta == 0.0) continue;
    a[j][j] = v0;
    for (std::size_t c = j + 1; c < cols; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += a[j][i] * a[c][i];
      double f = dot / beta;
      for (std::size_t i = j; i < n; ++i) a[c][i] += f * a[j][i];
    }
    double dot = 0.0;
    for (std::size_t i = j; i < n; ++i) dot += a[j][i] * rhs[i];
    double f = dot / beta;
    for (std::size_t i = j; i < n; ++i) rhs[i] += f * a[j][i];
  }

  // Back-substitute R beta = Q'y.
  std::vector<double> coef(cols);
  for (std::size_t jj = cols; jj-- > 0;) {
    double s = rhs[jj];
    for (std::size_t c = jj + 1; c < cols; ++c) s -= a[c][jj] * coef[c];
    double r_jj = diag[jj];
    if (std::abs(r_jj) < 1e-12) {
      throw DataError("ols_fit: rank-deficient design matrix, column " +
                      std::to_string(jj));
    }
    coef[jj] = s / r_jj;
  }

  OlsFit fit;
  fit.coefficients = coef;
  fit.n = n;
  fit.num_predictors = k;

  // R^2 against the mean model; constant y yields R^2 = 0 by convention.
  double my = mean_of(y);
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    if (intercept) pred += coef[0];
    for (std::size_t j = 0; j < k; ++j)
      pred += coef[j + (intercept ? 1 : 0)] * predictors[j][i];
    double e = y[i] - pred;
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
  double denom = static_cast<double>(n) - static_cast<double>(k) - 1.0;
  fit.adjusted_r2 =
      denom <= 0.0 ? fit.r2
                   : 1.0 - (1.0 - fit.r2) * (static_cast<double>(n) - 1.0) / denom;
  return fit;
}

}  // namespace curricula
