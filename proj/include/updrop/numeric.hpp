#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace updrop {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Max-shifted softmax; stable for logits up to +-1e3 and beyond.
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax of empty vector");
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// log sum_i exp(v_i), max-shifted; -inf entries drop out, all -inf gives -inf.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw UsageError("log_sum_exp of empty vector");
  double m = *std::max_element(v.begin(), v.end());
  if (std::isinf(m) && m < 0) return m;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum);
}

inline double log_mean_exp(std::span<const double> v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

// Shortest decimal string that parses back to the exact same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace updrop
