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

#ifndef NOSDIST_SOCIAL_H_
#define NOSDIST_SOCIAL_H_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosdist/core_model.h"
#include "nosdist/probability.h"
#include "nosdist/welfare.h"

namespace nosdist {

// Finite weighted sample of budget sets standing in for the population
// distribution of prices and income.
class PopulationSample {
 public:
  // Weights default to uniform; given weights are normalized to sum to one.
  explicit PopulationSample(std::vector<BudgetSet> members,
                            std::vector<double> weights = {});

  std::size_t size() const { return members_.size(); }
  const std::vector<BudgetSet>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }

  // Same weights, member m's prices moved by shifts[m] (or by shifts[0] for
  // every member when only one shift is given).
  PopulationSample Shifted(const std::vector<PriceVector>& shifts) const;

 private:
  std::vector<BudgetSet> members_;
  std::vector<double> weights_;
};

PopulationSample ReadPopulationCsv(std::istream& is);
void WritePopulationCsv(std::ostream& os, const PopulationSample& population);

// Inequality aversion h. Construction checks that h is strictly increasing
// on the probe grid and, when declared concave, that its second differences
// are not positive there.
class AversionFunction {
 public:
  using Evaluator = std::function<double(double)>;

  AversionFunction(Evaluator h, bool declared_concave, std::string label,
                   std::span<const double> probe_grid = {});

  static AversionFunction Identity();
  // -exp(-a w), a > 0.
  static AversionFunction NegativeExponential(double a);

  double operator()(double w) const { return h_(w); }
  bool declared_concave() const { return concave_; }
  const std::string& label() const { return label_; }

 private:
  Evaluator h_;
  bool concave_;
  std::string label_;
};

// F_W(w | p, y) = Pr[W <= w] for the level in the chosen bundle.
double WelfareCdf(const ChoiceProbabilityModel& choice, const NOSFamily& family,
                  std::span<const double> p, double y, double w);

struct SwfResult {
  double swf = 0.0;
  std::vector<double> contributions;

  nlohmann::json ToJson() const;
};

// Integral of h against each member's welfare CDF, weighted over members.
// An empty grid request gives every member its own automatic grid.
SwfResult Swf(const ChoiceProbabilityModel& choice, const NOSFamily& family,
              const AversionFunction& aversion,
              const PopulationSample& population,
              const GridRequest& grid = {});

// Swf at the shifted prices minus Swf at the original prices, on a grid
// shared by both evaluations.
double SwfDifference(const ChoiceProbabilityModel& choice,
                     const NOSFamily& family, const AversionFunction& aversion,
                     const PopulationSample& population,
                     const std::vector<PriceVector>& delta_p,
                     const GridRequest& grid = {});

// Stieltjes integral of h against the CDF 1 - S of a level CCDF, with the
// recorded jumps weighted by h at their locations. Throws NonintegrableCurve
// when the curve does not run from 1 down to 0 on its grid.
double IntegrateAgainstCcdf(const DistributionCurve& ccdf,
                            const AversionFunction& aversion);

}  // namespace nosdist

#endif  // NOSDIST_SOCIAL_H_
