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

#ifndef NOSDIST_NUMERICS_H_
#define NOSDIST_NUMERICS_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace nosdist {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed real interval, possibly unbounded on either side.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  bool Contains(double x) const { return lower <= x && x <= upper; }
  double Clamp(double x) const { return std::clamp(x, lower, upper); }
  bool operator==(const Interval&) const = default;
};

enum class SearchStatus {
  kFound,        // predicate flips inside the domain
  kAlwaysTrue,   // predicate still holds at the domain's upper end
  kAlwaysFalse,  // predicate fails already at the domain's lower end
  kUnbracketed,  // geometric expansion ran out of doublings
};

// Result of locating the switch point of a predicate that is true on a
// half-line (-inf, b] and false on (b, inf). `last_true` and `first_false`
// are adjacent doubles (or within the requested tolerance) when kFound.
struct Boundary {
  SearchStatus status = SearchStatus::kUnbracketed;
  double last_true = 0.0;
  double first_false = 0.0;

  bool found() const { return status == SearchStatus::kFound; }
};

// Shrinks [a, b] with pred(a) == true and pred(b) == false until the two ends
// are adjacent doubles or closer than `tolerance`.
template <typename Pred>
void BisectSwitch(const Pred& pred, double& a, double& b,
                  double tolerance = 0.0) {
  while (b - a > tolerance) {
    const double mid = 0.5 * a + 0.5 * b;
    if (mid <= a || mid >= b) break;
    if (pred(mid)) {
      a = mid;
    } else {
      b = mid;
    }
  }
}

// Finds the largest x in `domain` at which a non-increasing predicate holds.
// The bracket is grown geometrically from `start` (unit first step) for at
// most `max_doublings` steps in either direction.
template <typename Pred>
Boundary LastTrue(const Pred& pred, double start, const Interval& domain = {},
                  int max_doublings = 200, double tolerance = 0.0) {
  Boundary out;
  double x = domain.Clamp(start);
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;
  if (pred(x)) {
    lo = x;
    bool bracketed = false;
    for (int k = 0; k < max_doublings; ++k, step *= 2.0) {
      double cand = lo + step;
      if (cand >= domain.upper) {
        cand = domain.upper;
        if (pred(cand)) {
          out.status = SearchStatus::kAlwaysTrue;
          out.last_true = cand;
          out.first_false = kInf;
          return out;
        }
      }
      if (pred(cand)) {
        lo = cand;
      } else {
        hi = cand;
        bracketed = true;
        break;
      }
    }
    if (!bracketed) {
      out.status = SearchStatus::kUnbracketed;
      out.last_true = lo;
      out.first_false = kInf;
      return out;
    }
  } else {
    hi = x;
    bool bracketed = false;
    for (int k = 0; k < max_doublings; ++k, step *= 2.0) {
      double cand = hi - step;
      if (cand <= domain.lower) {
        cand = domain.lower;
        if (!pred(cand)) {
          out.status = SearchStatus::kAlwaysFalse;
          out.last_true = -kInf;
          out.first_false = cand;
          return out;
        }
      }
      if (pred(cand)) {
        lo = cand;
        bracketed = true;
        break;
      }
      hi = cand;
    }
    if (!bracketed) {
      out.status = SearchStatus::kUnbracketed;
      out.last_true = -kInf;
      out.first_false = hi;
      return out;
    }
  }
  BisectSwitch(pred, lo, hi, tolerance);
  out.status = SearchStatus::kFound;
  out.last_true = lo;
  out.first_false = hi;
  return out;
}

// `count` evenly spaced points from `lo` to `hi` inclusive.
std::vector<double> Linspace(double lo, double hi, std::size_t count);

// Sorted union of `grid` and `extra` with duplicates removed.
std::vector<double> MergeGrid(std::span<const double> grid,
                              std::span<const double> extra);

bool StrictlyIncreasing(std::span<const double> values);

}  // namespace nosdist

#endif  // NOSDIST_NUMERICS_H_
