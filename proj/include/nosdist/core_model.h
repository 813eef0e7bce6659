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

#ifndef NOSDIST_CORE_MODEL_H_
#define NOSDIST_CORE_MODEL_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosdist/numerics.h"

namespace nosdist {

using PriceVector = std::vector<double>;

// Prices of the n alternatives together with exogenous income y.
struct BudgetSet {
  PriceVector prices;
  double income = 0.0;

  std::size_t size() const { return prices.size(); }
  // Throws InvalidArgument unless n >= 1 and every entry is finite.
  void Validate() const;
  bool operator==(const BudgetSet&) const = default;
};

// Money metric utility at reference prices p_ref for an individual with
// income y.
struct MMUSpec {
  PriceVector reference_prices;
  double income = 0.0;

  bool operator==(const MMUSpec&) const = default;
};

// y - lambda + p_ref, componentwise.
PriceVector MmuVirtualPrices(const MMUSpec& spec, double lambda);

// A family of nested opportunity sets, described through its virtual prices
// lambda -> p~(lambda) for an individual with income `income()`. Virtual
// prices of the same family at another income differ by the income change,
// since y - p~_c(lambda) is common to all individuals.
class NOSFamily {
 public:
  using Evaluator = std::function<PriceVector(double lambda)>;

  NOSFamily(std::size_t n, Evaluator evaluator, Interval lambda_domain,
            double income, std::string label = "custom");

  static NOSFamily Mmu(const MMUSpec& spec);

  std::size_t size() const { return n_; }
  const Interval& lambda_domain() const { return domain_; }
  double income() const { return income_; }
  const std::string& label() const { return label_; }
  // Set when the family was built from an MMUSpec.
  const std::optional<MMUSpec>& mmu() const { return mmu_; }

  PriceVector VirtualPrices(double lambda) const;
  double VirtualPrice(std::size_t c, double lambda) const;

  // Largest lambda with price <= p~_c(lambda), located by bisection on the
  // exact floating-point indicator. +inf when the indicator never switches
  // off inside the domain, -inf when it never holds.
  double Threshold(std::size_t c, double price) const;

  NOSFamily AtIncome(double income) const;

 private:
  std::size_t n_;
  Evaluator evaluator_;
  Interval domain_;
  double income_;
  std::string label_;
  std::optional<MMUSpec> mmu_;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Spot-checks the nested-opportunity-set conditions on `probe_grid`: every
// virtual price non-increasing, at least one strictly decreasing between
// consecutive probes, and the unbounded limits (probed geometrically outward
// from the grid ends). Continuity cannot be verified from samples.
ValidationReport ValidateNosFamily(const NOSFamily& family,
                                   std::span<const double> probe_grid);

PriceVector ElementwiseMin(std::span<const double> p, std::span<const double> q);

enum class CurveKind { kCcdf, kCdf };

struct MassPoint {
  double location = 0.0;
  double jump = 0.0;

  bool operator==(const MassPoint&) const = default;
};

// A CCDF or CDF sampled on an explicit grid, with its jumps recorded
// separately. CCDF values are Pr[X >= x]; CDF values are Pr[X <= x].
class DistributionCurve {
 public:
  // Monotonicity slack for values assembled from floating-point sums.
  static constexpr double kMonotoneSlack = 1e-12;

  DistributionCurve(std::vector<double> grid, std::vector<double> values,
                    CurveKind kind, std::vector<MassPoint> mass_points = {},
                    std::string axis = "grid");

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  CurveKind kind() const { return kind_; }
  const std::vector<MassPoint>& mass_points() const { return mass_points_; }
  const std::string& axis() const { return axis_; }
  std::size_t size() const { return grid_.size(); }

  nlohmann::json Sidecar() const;

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  CurveKind kind_;
  std::vector<MassPoint> mass_points_;
  std::string axis_;
};

// Largest absolute difference between two curves on a shared grid.
double SupDistance(const DistributionCurve& a, const DistributionCurve& b);

std::string ToString(CurveKind kind);
CurveKind CurveKindFromString(const std::string& s);

void to_json(nlohmann::json& j, const BudgetSet& b);
void from_json(const nlohmann::json& j, BudgetSet& b);
void to_json(nlohmann::json& j, const MMUSpec& m);
void from_json(const nlohmann::json& j, MMUSpec& m);

}  // namespace nosdist

#endif  // NOSDIST_CORE_MODEL_H_
