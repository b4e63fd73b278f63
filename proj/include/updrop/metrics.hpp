#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace updrop {

// Binary-classification summary; the positive class is chosen by the caller.
struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision, recall and F1 with the 0/0 -> 0 convention at every stage.
inline EvalReport f1_score(const std::vector<std::size_t>& predictions,
                           const std::vector<std::size_t>& labels,
                           std::size_t positive_label) {
  if (predictions.size() != labels.size())
    throw UsageError("f1_score: predictions and labels differ in length");
  EvalReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    bool p = predictions[i] == positive_label;
    bool t = labels[i] == positive_label;
    if (p && t) ++r.tp;
    else if (p && !t) ++r.fp;
    else if (!p && t) ++r.fn;
    else ++r.tn;
  }
  if (r.tp + r.fp > 0) r.precision = double(r.tp) / double(r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = double(r.tp) / double(r.tp + r.fn);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

namespace detail {

// Continued fraction for the regularized incomplete beta, Lentz's method.
inline double incomplete_beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b), absolute error well below 1e-10.
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("incomplete beta needs a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw UsageError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::incomplete_beta_cf(a, b, x) / a;
  return 1.0 - front * detail::incomplete_beta_cf(b, a, 1.0 - x) / b;
}

// CDF of Student's t with df degrees of freedom.
inline double student_t_cdf(double t, std::size_t df) {
  if (df < 1) throw UsageError("student_t_cdf needs df >= 1");
  if (t == 0.0) return 0.5;
  double d = double(df);
  double tail = regularized_incomplete_beta(d / 2.0, 0.5, d / (d + t * t));  // two-sided
  return t > 0.0 ? 1.0 - tail / 2.0 : tail / 2.0;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;       // two-sided
  std::size_t df = 0;
};

// Classical paired t-test on the differences a - b.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("paired_t_test: inputs differ in length");
  std::size_t n = a.size();
  if (n < 2) throw UndefinedTestError("paired_t_test needs at least 2 pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  if (ss == 0.0) throw UndefinedTestError("paired_t_test: differences have zero variance");
  double sd = std::sqrt(ss / double(n - 1));
  TTestResult r;
  r.df = n - 1;
  r.t = mean / (sd / std::sqrt(double(n)));
  double d = double(r.df);
  r.p = regularized_incomplete_beta(d / 2.0, 0.5, d / (d + r.t * r.t));
  return r;
}

}  // namespace updrop
