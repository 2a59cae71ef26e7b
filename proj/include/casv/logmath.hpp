// casv/logmath.hpp

// Copyright 2026  cascade-verify authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CASV_LOGMATH_HPP
#define CASV_LOGMATH_HPP

#include <cmath>
#include <limits>
#include <span>

namespace casv {

// All probability math in this toolkit lives in the log domain; -inf is the
// log of zero and must stay absorbing under addition.
constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// log(sum_i exp(xs[i])); empty or all -inf input yields -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double max_x = kLogZero;
  for (double x : xs)
    if (x > max_x) max_x = x;
  if (max_x == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double x : xs)
    if (x != kLogZero) sum += std::exp(x - max_x);
  return max_x + std::log(sum);
}

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kLogTwoPi = 1.83787706640934548356;

}  // namespace casv

#endif  // CASV_LOGMATH_HPP
