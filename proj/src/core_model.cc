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

#include "nosdist/core_model.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "nosdist/errors.h"

namespace nosdist {
namespace {

// Magnitude a virtual price has to reach before it counts as unbounded.
constexpr double kUnboundedThreshold = 1e9;
constexpr int kLimitProbes = 64;

std::string Describe(std::size_t c, double lambda) {
  std::ostringstream os;
  os << "alternative " << c << " at lambda=" << lambda;
  return os.str();
}

}  // namespace

void BudgetSet::Validate() const {
  if (prices.empty()) {
    throw InvalidArgument("budget set needs at least one alternative");
  }
  for (double p : prices) {
    if (!std::isfinite(p)) throw InvalidArgument("budget set price not finite");
  }
  if (!std::isfinite(income)) {
    throw InvalidArgument("budget set income not finite");
  }
}

PriceVector MmuVirtualPrices(const MMUSpec& spec, double lambda) {
  PriceVector out(spec.reference_prices.size());
  const double shift = spec.income - lambda;
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = shift + spec.reference_prices[c];
  }
  return out;
}

NOSFamily::NOSFamily(std::size_t n, Evaluator evaluator, Interval lambda_domain,
                     double income, std::string label)
    : n_(n),
      evaluator_(std::move(evaluator)),
      domain_(lambda_domain),
      income_(income),
      label_(std::move(label)) {
  if (n_ == 0) throw InvalidArgument("NOS family needs n >= 1");
  if (!evaluator_) throw InvalidArgument("NOS family needs an evaluator");
  if (!(domain_.lower <= domain_.upper)) {
    throw InvalidArgument("NOS family lambda domain is empty");
  }
  if (!std::isfinite(income_)) {
    throw InvalidArgument("NOS family income not finite");
  }
}

NOSFamily NOSFamily::Mmu(const MMUSpec& spec) {
  if (spec.reference_prices.empty()) {
    throw InvalidArgument("MMU needs at least one reference price");
  }
  for (double r : spec.reference_prices) {
    if (!std::isfinite(r)) throw InvalidArgument("MMU reference price not finite");
  }
  NOSFamily family(
      spec.reference_prices.size(),
      [spec](double lambda) { return MmuVirtualPrices(spec, lambda); },
      Interval{}, spec.income, "mmu");
  family.mmu_ = spec;
  return family;
}

PriceVector NOSFamily::VirtualPrices(double lambda) const {
  PriceVector out = evaluator_(lambda);
  if (out.size() != n_) {
    throw InvalidArgument("NOS family evaluator returned wrong length");
  }
  return out;
}

double NOSFamily::VirtualPrice(std::size_t c, double lambda) const {
  if (mmu_) return (mmu_->income - lambda) + mmu_->reference_prices[c];
  return VirtualPrices(lambda)[c];
}

double NOSFamily::Threshold(std::size_t c, double price) const {
  double start = income_;
  if (mmu_) start = (mmu_->income + mmu_->reference_prices[c]) - price;
  const Boundary b = LastTrue(
      [&](double lambda) { return price <= VirtualPrice(c, lambda); }, start,
      domain_);
  switch (b.status) {
    case SearchStatus::kFound:
      return b.last_true;
    case SearchStatus::kAlwaysTrue:
      return kInf;
    case SearchStatus::kAlwaysFalse:
      return -kInf;
    case SearchStatus::kUnbracketed:
      return std::isfinite(b.last_true) ? kInf : -kInf;
  }
  return kInf;
}

NOSFamily NOSFamily::AtIncome(double income) const {
  if (mmu_) {
    MMUSpec spec = *mmu_;
    spec.income = income;
    return Mmu(spec);
  }
  const double shift = income - income_;
  Evaluator inner = evaluator_;
  NOSFamily out(
      n_,
      [inner, shift](double lambda) {
        PriceVector p = inner(lambda);
        for (double& v : p) v += shift;
        return p;
      },
      domain_, income, label_);
  return out;
}

ValidationReport ValidateNosFamily(const NOSFamily& family,
                                   std::span<const double> probe_grid) {
  if (probe_grid.empty()) throw InvalidArgument("empty probe grid");
  if (!StrictlyIncreasing(probe_grid)) {
    throw InvalidArgument("probe grid must be strictly increasing");
  }
  const Interval& dom = family.lambda_domain();
  for (double l : probe_grid) {
    if (!dom.Contains(l)) {
      throw InvalidArgument("probe grid leaves the lambda domain");
    }
  }

  ValidationReport report;
  const std::size_t n = family.size();
  std::vector<PriceVector> values;
  values.reserve(probe_grid.size());
  for (double l : probe_grid) values.push_back(family.VirtualPrices(l));

  for (std::size_t g = 1; g < probe_grid.size(); ++g) {
    bool any_strict = false;
    for (std::size_t c = 0; c < n; ++c) {
      const double before = values[g - 1][c];
      const double after = values[g][c];
      if (after > before) {
        report.violations.push_back("virtual price increases in lambda: " +
                                    Describe(c, probe_grid[g]));
      } else if (after < before) {
        any_strict = true;
      }
    }
    if (!any_strict) {
      report.violations.push_back(
          "no virtual price strictly decreases between lambda=" +
          std::to_string(probe_grid[g - 1]) + " and lambda=" +
          std::to_string(probe_grid[g]));
    }
  }

  // Every virtual price must grow without bound as lambda decreases.
  std::vector<bool> grows(n, false);
  std::vector<bool> falls(n, false);
  double step = 1.0;
  for (int k = 0; k < kLimitProbes; ++k, step *= 2.0) {
    const double down = dom.Clamp(probe_grid.front() - step);
    const double up = dom.Clamp(probe_grid.back() + step);
    const PriceVector pd = family.VirtualPrices(down);
    const PriceVector pu = family.VirtualPrices(up);
    for (std::size_t c = 0; c < n; ++c) {
      if (pd[c] >= kUnboundedThreshold) grows[c] = true;
      if (pu[c] <= -kUnboundedThreshold) falls[c] = true;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (!grows[c]) {
      report.violations.push_back(
          "virtual price of alternative " + std::to_string(c) +
          " does not grow without bound as lambda decreases");
    }
  }
  bool any_falls = false;
  for (std::size_t c = 0; c < n; ++c) any_falls = any_falls || falls[c];
  if (!any_falls) {
    report.violations.push_back(
        "no virtual price falls without bound as lambda increases");
  }
  return report;
}

PriceVector ElementwiseMin(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InvalidArgument("elementwise min: length mismatch");
  }
  PriceVector out(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) out[c] = std::min(p[c], q[c]);
  return out;
}

DistributionCurve::DistributionCurve(std::vector<double> grid,
                                     std::vector<double> values,
                                     CurveKind kind,
                                     std::vector<MassPoint> mass_points,
                                     std::string axis)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      kind_(kind),
      mass_points_(std::move(mass_points)),
      axis_(std::move(axis)) {
  if (grid_.empty()) throw InvalidArgument("curve grid is empty");
  if (grid_.size() != values_.size()) {
    throw InvalidArgument("curve grid and values differ in length");
  }
  if (!StrictlyIncreasing(grid_)) {
    throw InvalidArgument("curve grid must be strictly increasing");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("curve value outside [0,1]");
    }
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    const double d = values_[i] - values_[i - 1];
    const bool bad = kind_ == CurveKind::kCcdf ? d > kMonotoneSlack
                                               : d < -kMonotoneSlack;
    if (bad) {
      throw InvalidArgument(kind_ == CurveKind::kCcdf
                                ? "CCDF values must be non-increasing"
                                : "CDF values must be non-decreasing");
    }
  }
  for (const MassPoint& m : mass_points_) {
    if (!(m.jump > 0.0 && m.jump <= 1.0 + kMonotoneSlack)) {
      throw InvalidArgument("mass point jump outside (0,1]");
    }
    if (m.location < grid_.front() || m.location > grid_.back()) {
      throw InvalidArgument("mass point outside the grid range");
    }
  }
}

nlohmann::json DistributionCurve::Sidecar() const {
  nlohmann::json j;
  j["kind"] = ToString(kind_);
  j["axis"] = axis_;
  j["grid_size"] = grid_.size();
  nlohmann::json masses = nlohmann::json::array();
  for (const MassPoint& m : mass_points_) {
    masses.push_back({{"location", m.location}, {"jump", m.jump}});
  }
  j["mass_points"] = std::move(masses);
  return j;
}

double SupDistance(const DistributionCurve& a, const DistributionCurve& b) {
  if (a.grid() != b.grid()) {
    throw InvalidArgument("sup distance needs curves on the same grid");
  }
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out = std::max(out, std::abs(a.values()[i] - b.values()[i]));
  }
  return out;
}

std::string ToString(CurveKind kind) {
  return kind == CurveKind::kCcdf ? "ccdf" : "cdf";
}

CurveKind CurveKindFromString(const std::string& s) {
  if (s == "ccdf") return CurveKind::kCcdf;
  if (s == "cdf") return CurveKind::kCdf;
  throw InvalidArgument("unknown curve kind: " + s);
}

void to_json(nlohmann::json& j, const BudgetSet& b) {
  j = nlohmann::json{{"prices", b.prices}, {"income", b.income}};
}

void from_json(const nlohmann::json& j, BudgetSet& b) {
  j.at("prices").get_to(b.prices);
  j.at("income").get_to(b.income);
}

void to_json(nlohmann::json& j, const MMUSpec& m) {
  j = nlohmann::json{{"reference_prices", m.reference_prices},
                     {"income", m.income}};
}

void from_json(const nlohmann::json& j, MMUSpec& m) {
  j.at("reference_prices").get_to(m.reference_prices);
  j.at("income").get_to(m.income);
}

}  // namespace nosdist
