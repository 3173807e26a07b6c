#include <catch2/catch.hpp>

#include <cmath>

#include "curricula/rng.hpp"
#include "curricula/stats.hpp"

using namespace curricula;

namespace {

// Normal-equations oracle for OLS with intercept and two predictors,
// solved with Cramer's rule in long double.
std::vector<double> normal_equations_2(const std::vector<double>& x1,
                                       const std::vector<double>& x2,
                                       const std::vector<double>& y) {
  long double n = static_cast<long double>(y.size());
  long double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0, sy = 0, s1y = 0,
              s2y = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    s1 += x1[i];
    s2 += x2[i];
    s11 += static_cast<long double>(x1[i]) * x1[i];
    s22 += static_cast<long double>(x2[i]) * x2[i];
    s12 += static_cast<long double>(x1[i]) * x2[i];
    sy += y[i];
    s1y += static_cast<long double>(x1[i]) * y[i];
    s2y += static_cast<long double>(x2[i]) * y[i];
  }
  long double a[3][3] = {{n, s1, s2}, {s1, s11, s12}, {s2, s12, s22}};
  long double b[3] = {sy, s1y, s2y};
  auto det3 = [](long double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  long double d = det3(a);
  std::vector<double> out;
  for (int col = 0; col < 3; ++col) {
    long double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m[r][c] = c == col ? b[r] : a[r][c];
    out.push_back(static_cast<double>(det3(m) / d));
  }
  return out;
}

}  // namespace

TEST_CASE("spearman on equal and reversed sequences") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(*spearman(x, x) == Approx(1.0));
  CHECK(*spearman(x, rev) == Approx(-1.0));
}

TEST_CASE("spearman hand-computed example") {
  std::vector<double> x{1, 2, 3};
  std::vector<double> y{1, 3, 2};
  CHECK(*spearman(x, y) == Approx(0.5));
}

TEST_CASE("spearman averages tied ranks") {
  std::vector<double> x{1, 1, 2};
  std::vector<double> y{1, 2, 3};
  // ranks x = (1.5, 1.5, 3), y = (1, 2, 3) -> 1.5 / sqrt(1.5 * 2)
  CHECK(*spearman(x, y) == Approx(1.5 / std::sqrt(3.0)));
}

TEST_CASE("spearman rejects bad input") {
  std::vector<double> x{1, 2};
  std::vector<double> y{1};
  CHECK_THROWS_AS(spearman(x, y), DataError);
  std::vector<double> one{1};
  CHECK_THROWS_AS(spearman(one, one), DataError);
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  Rng rng(99);
  std::vector<double> x, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(rng.unit() * 10 - 5);
    y.push_back(rng.unit() * 10 - 5);
  }
  auto base = *spearman(x, y);
  std::vector<double> fx, gy;
  for (double v : x) fx.push_back(std::exp(v));
  for (double v : y) gy.push_back(2.0 * v + 7.0);
  CHECK(*spearman(fx, gy) == Approx(base).epsilon(1e-12));
}

TEST_CASE("zero variance yields absent correlation") {
  std::vector<double> x{1, 1, 1, 1};
  std::vector<double> y{1, 2, 3, 4};
  CHECK_FALSE(spearman(x, y).has_value());
  CHECK_FALSE(pearson(x, y).has_value());
}

TEST_CASE("ols recovers an exact linear relationship") {
  std::vector<double> x{1, 2, 3, 4, 5, 6};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v);
  auto fit = ols_fit({x}, y);
  CHECK(fit.coefficients[0] == Approx(0.0).margin(1e-10));
  CHECK(fit.coefficients[1] == Approx(2.0));
  CHECK(fit.r2 == Approx(1.0));
  CHECK(fit.adjusted_r2 == Approx(1.0));
}

TEST_CASE("ols on constant response") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> y{5, 5, 5, 5};
  auto fit = ols_fit({x}, y);
  CHECK(fit.coefficients[1] == Approx(0.0).margin(1e-12));
  CHECK(fit.r2 == 0.0);
}

TEST_CASE("ols matches the normal-equations oracle on random systems") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x1, x2, y;
    for (int i = 0; i < 50; ++i) {
      double a = rng.unit() * 4 - 2;
      double b = rng.unit() * 4 - 2;
      x1.push_back(a);
      x2.push_back(b);
      y.push_back(1.5 * a - 0.7 * b + 0.3 + (rng.unit() - 0.5));
    }
    auto fit = ols_fit({x1, x2}, y);
    auto oracle = normal_equations_2(x1, x2, y);
    for (int j = 0; j < 3; ++j) {
      CHECK(fit.coefficients[j] == Approx(oracle[j]).margin(1e-8));
    }
  }
}

TEST_CASE("ols residuals are orthogonal to the predictors") {
  Rng rng(77);
  std::vector<double> x1, x2, y;
  for (int i = 0; i < 80; ++i) {
    x1.push_back(rng.unit() * 6);
    x2.push_back(rng.unit() * 3 - 1);
    y.push_back(0.5 * x1.back() + 2.0 * x2.back() + rng.unit());
  }
  auto fit = ols_fit({x1, x2}, y);
  std::vector<double> resid;
  for (std::size_t i = 0; i < y.size(); ++i) {
    resid.push_back(y[i] - fit.coefficients[0] - fit.coefficients[1] * x1[i] -
                    fit.coefficients[2] * x2[i]);
  }
  for (const auto& col : {x1, x2}) {
    double dot = 0, ncol = 0, nres = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      dot += resid[i] * col[i];
      ncol += col[i] * col[i];
      nres += resid[i] * resid[i];
    }
    CHECK(std::abs(dot) < 1e-6 * std::sqrt(ncol * nres) + 1e-9);
  }
}

TEST_CASE("ols rejects collinear designs naming the column") {
  std::vector<double> x1{1, 2, 3, 4, 5};
  std::vector<double> x2{2, 4, 6, 8, 10};
  std::vector<double> y{1, 1, 2, 2, 3};
  CHECK_THROWS_WITH(ols_fit({x1, x2}, y), Catch::Contains("column 2"));
}

TEST_CASE("adjusted r2 formula") {
  Rng rng(5);
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(static_cast<double>(i));
    y.push_back(3.0 * i + rng.unit() * 10);
  }
  auto fit = ols_fit({x}, y);
  double expected = 1.0 - (1.0 - fit.r2) * 29.0 / 28.0;
  CHECK(fit.adjusted_r2 == Approx(expected).epsilon(1e-12));
}

TEST_CASE("stddev helpers") {
  std::vector<double> v{1.0, 3.0};
  CHECK(stddev_of(v) == Approx(1.0));
  CHECK(sample_stddev(v) == Approx(std::sqrt(2.0)));
  std::vector<double> same{2, 2, 2};
  CHECK(stddev_of(same) == 0.0);
}
