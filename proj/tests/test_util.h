// Copyright 2026 The nosdist Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Test-only oracle helpers, deliberately independent of the library's own
// empirical-curve code.

#ifndef NOSDIST_TESTS_TEST_UTIL_H_
#define NOSDIST_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nosdist/core_model.h"

namespace nosdist::testing {

// Fraction of sorted samples >= w.
inline double SampleCcdf(const std::vector<double>& sorted, double w) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), w);
  return static_cast<double>(sorted.end() - it) /
         static_cast<double>(sorted.size());
}

// Fraction of sorted samples <= z.
inline double SampleCdf(const std::vector<double>& sorted, double z) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), z);
  return static_cast<double>(it - sorted.begin()) /
         static_cast<double>(sorted.size());
}

// Kolmogorov distance between a curve and raw samples, over the curve grid.
inline double KsDistance(const DistributionCurve& curve,
                         std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  double worst = 0.0;
  for (std::size_t m = 0; m < curve.size(); ++m) {
    const double w = curve.grid()[m];
    const double e = curve.kind() == CurveKind::kCcdf ? SampleCcdf(samples, w)
                                                      : SampleCdf(samples, w);
    worst = std::max(worst, std::abs(curve.values()[m] - e));
  }
  return worst;
}

// Largest grid point where `holds` is true, scanning a dense grid; the
// predicate must be true then false along the grid.
inline double ScanLastTrue(const std::function<bool(double)>& holds, double lo,
                           double hi, std::size_t steps) {
  double last = lo;
  for (std::size_t s = 0; s <= steps; ++s) {
    const double x = lo + (hi - lo) * static_cast<double>(s) /
                              static_cast<double>(steps);
    if (!holds(x)) break;
    last = x;
  }
  return last;
}

inline bool Monotone(const DistributionCurve& c) {
  const auto& v = c.values();
  for (std::size_t m = 1; m < v.size(); ++m) {
    if (c.kind() == CurveKind::kCcdf ? v[m] > v[m - 1] : v[m] < v[m - 1]) {
      return false;
    }
  }
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return x >= 0.0 && x <= 1.0; });
}

}  // namespace nosdist::testing

#endif  // NOSDIST_TESTS_TEST_UTIL_H_
