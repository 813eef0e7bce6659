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

#ifndef NOSDIST_RUM_ORACLE_H_
#define NOSDIST_RUM_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nosdist/core_model.h"

namespace nosdist {

// U_c = alpha_c + beta * (y - p_c) + eps_c with standard Gumbel eps.
struct AdditiveLogit {
  std::vector<double> alpha;
  double beta = 1.0;

  bool operator==(const AdditiveLogit&) const = default;
};

// alpha_c ~ N(alpha_mean_c, alpha_sd_c^2) and log(beta) ~ N(m, s^2), drawn
// independently of each other and of the Gumbel shocks.
struct RandomCoefficients {
  std::vector<double> alpha_mean;
  std::vector<double> alpha_sd;
  double log_beta_mean = 0.0;
  double log_beta_sd = 0.0;

  bool operator==(const RandomCoefficients&) const = default;
};

struct UtilitySpec {
  std::variant<AdditiveLogit, RandomCoefficients> form;

  static UtilitySpec Logit(std::vector<double> alpha, double beta);

  std::size_t size() const;
  // Throws InvalidArgument on empty alternatives, non-positive beta,
  // negative standard deviations or non-finite parameters.
  void Validate() const;
  bool operator==(const UtilitySpec&) const = default;
};

// One realized preference type.
struct PreferenceDraw {
  std::vector<double> alpha;
  double beta = 1.0;
  std::vector<double> epsilon;

  std::size_t size() const { return alpha.size(); }
  double Utility(std::size_t c, double numeraire) const {
    return alpha[c] + beta * numeraire + epsilon[c];
  }
};

// Flat storage of `count` draws. Only alpha + epsilon and beta matter for
// choices, so they are kept side by side for the Monte Carlo models.
class DrawTable {
 public:
  static DrawTable Generate(const UtilitySpec& spec, std::uint64_t seed,
                            std::size_t count);
  static DrawTable FromDraws(std::span<const PreferenceDraw> draws);

  std::size_t size() const { return betas_.size(); }
  std::size_t alternatives() const { return n_; }
  PreferenceDraw At(std::size_t r) const;
  std::vector<PreferenceDraw> ToDraws() const;

  // alpha_c + eps_c for draw r.
  std::span<const double> Intercepts(std::size_t r) const {
    return {intercepts_.data() + r * n_, n_};
  }
  double Beta(std::size_t r) const { return betas_[r]; }

  // Lowest-index argmax of intercept_c + beta * (y - p_c).
  std::size_t Choose(std::size_t r, std::span<const double> prices,
                     double income) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> alphas_;
  std::vector<double> epsilons_;
  std::vector<double> intercepts_;
  std::vector<double> betas_;
};

std::vector<PreferenceDraw> DrawPreferences(const UtilitySpec& spec,
                                            std::uint64_t seed,
                                            std::size_t count);

std::size_t Choose(const PreferenceDraw& draw, const BudgetSet& budget);

// Largest lambda in the family's domain with
// U_k(y - p_k) >= max_c U_c(y - p~_c(lambda)). The family is read at income y.
double ExactWelfare(const PreferenceDraw& draw, const NOSFamily& family,
                    std::size_t k, double p_k, double y);

enum class VariationKind { kCompensating, kEquivalent };

double ExactVariation(const PreferenceDraw& draw, std::span<const double> p,
                      std::span<const double> p_post, double y,
                      VariationKind kind);

struct CrossSectionRow {
  BudgetSet budget;
  std::size_t choice = 0;
};

struct CrossSectionData {
  std::size_t n = 0;
  std::vector<CrossSectionRow> rows;
};

struct PanelRow {
  PriceVector prices;
  PriceVector prices_post;
  double income = 0.0;
  std::size_t choice_pre = 0;
  std::size_t choice_post = 0;
};

struct PanelData {
  std::size_t n = 0;
  std::vector<PanelRow> rows;
};

using BudgetSampler = std::function<BudgetSet(std::mt19937_64&)>;
using IncomeSampler = std::function<double(std::mt19937_64&)>;

BudgetSampler FixedBudget(BudgetSet budget);
IncomeSampler FixedIncome(double income);

CrossSectionData SimulateCrossSection(const UtilitySpec& spec,
                                      const BudgetSampler& budget_sampler,
                                      std::size_t count, std::uint64_t seed);

PanelData SimulatePanel(const UtilitySpec& spec, std::span<const double> p,
                        std::span<const double> p_post,
                        const IncomeSampler& y_sampler, std::size_t count,
                        std::uint64_t seed);

// CCDF Pr[X >= w] on `grid`; sample atoms heavier than 2/sqrt(N) become mass
// points. Values closer than 1e-9 relative count as one atom.
DistributionCurve EmpiricalCcdf(std::span<const double> samples,
                                std::vector<double> grid);
// CDF Pr[X <= z] on `grid`, same atom rule.
DistributionCurve EmpiricalCdf(std::span<const double> samples,
                               std::vector<double> grid);

void WriteCrossSectionCsv(std::ostream& os, const CrossSectionData& data);
CrossSectionData ReadCrossSectionCsv(std::istream& is);
void WritePanelCsv(std::ostream& os, const PanelData& data);
PanelData ReadPanelCsv(std::istream& is);

void to_json(nlohmann::json& j, const UtilitySpec& spec);
void from_json(const nlohmann::json& j, UtilitySpec& spec);

}  // namespace nosdist

#endif  // NOSDIST_RUM_ORACLE_H_
