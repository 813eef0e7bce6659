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

#ifndef NOSDIST_PROBABILITY_H_
#define NOSDIST_PROBABILITY_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"
#include "nosdist/rum_oracle.h"

namespace nosdist {

// n x n row-major matrix; cell (i, j) is "i before, j after".
struct TransitionMatrix {
  std::size_t n = 0;
  std::vector<double> cells;

  explicit TransitionMatrix(std::size_t size = 0) : n(size), cells(size * size) {}

  double operator()(std::size_t i, std::size_t j) const { return cells[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return cells[i * n + j]; }
  double RowSum(std::size_t i) const;
  double ColumnSum(std::size_t j) const;
  double Total() const;
};

class ChoiceProbabilityModel {
 public:
  virtual ~ChoiceProbabilityModel() = default;

  virtual std::size_t size() const = 0;
  // P_0..P_{n-1} at budget (prices, income).
  virtual std::vector<double> Probabilities(std::span<const double> prices,
                                            double income) const = 0;
  virtual nlohmann::json Metadata() const = 0;

  double Probability(std::size_t i, std::span<const double> prices,
                     double income) const {
    return Probabilities(prices, income)[i];
  }
};

class TransitionProbabilityModel {
 public:
  virtual ~TransitionProbabilityModel() = default;

  virtual std::size_t size() const = 0;
  virtual TransitionMatrix Probabilities(std::span<const double> p,
                                         std::span<const double> p_post,
                                         double income) const = 0;
  virtual nlohmann::json Metadata() const = 0;

  virtual double Probability(std::size_t i, std::size_t j,
                             std::span<const double> p,
                             std::span<const double> p_post,
                             double income) const {
    return Probabilities(p, p_post, income)(i, j);
  }
};

using ChoiceModelPtr = std::shared_ptr<const ChoiceProbabilityModel>;
using TransitionModelPtr = std::shared_ptr<const TransitionProbabilityModel>;

class LogitChoiceModel : public ChoiceProbabilityModel {
 public:
  LogitChoiceModel(std::vector<double> alpha, double beta);

  std::size_t size() const override { return alpha_.size(); }
  std::vector<double> Probabilities(std::span<const double> prices,
                                    double income) const override;
  nlohmann::json Metadata() const override;

 private:
  std::vector<double> alpha_;
  double beta_;
};

ChoiceModelPtr MakeLogitChoiceModel(std::vector<double> alpha, double beta);

// Frequencies over a cached draw table; the same draw decides both regimes.
class McTransitionModel : public TransitionProbabilityModel {
 public:
  McTransitionModel(const UtilitySpec& spec, std::size_t draws,
                    std::uint64_t seed);
  explicit McTransitionModel(std::shared_ptr<const DrawTable> table);

  std::size_t size() const override { return table_->alternatives(); }
  TransitionMatrix Probabilities(std::span<const double> p,
                                 std::span<const double> p_post,
                                 double income) const override;
  double Probability(std::size_t i, std::size_t j, std::span<const double> p,
                     std::span<const double> p_post,
                     double income) const override;
  nlohmann::json Metadata() const override;

  // Integer cell counts; they always add up to draws().
  std::vector<std::uint64_t> Counts(std::span<const double> p,
                                    std::span<const double> p_post,
                                    double income) const;
  std::size_t draws() const { return table_->size(); }
  const std::shared_ptr<const DrawTable>& table() const { return table_; }

 private:
  std::shared_ptr<const DrawTable> table_;
  std::uint64_t seed_ = 0;
  bool seeded_ = false;
};

// Choice frequencies over a draw table, consistent with McTransitionModel
// built from the same table.
class McChoiceModel : public ChoiceProbabilityModel {
 public:
  explicit McChoiceModel(std::shared_ptr<const DrawTable> table);

  std::size_t size() const override { return table_->alternatives(); }
  std::vector<double> Probabilities(std::span<const double> prices,
                                    double income) const override;
  nlohmann::json Metadata() const override;

 private:
  std::shared_ptr<const DrawTable> table_;
};

struct BandwidthRule {
  enum class Kind { kRuleOfThumb, kFixed };

  Kind kind = Kind::kRuleOfThumb;
  // One entry applies to every coordinate; otherwise one per coordinate.
  std::vector<double> fixed;

  static BandwidthRule RuleOfThumb() { return {}; }
  static BandwidthRule Fixed(double h) { return {Kind::kFixed, {h}}; }
  static BandwidthRule Fixed(std::vector<double> h) {
    return {Kind::kFixed, std::move(h)};
  }
};

inline constexpr double kRuleOfThumbConstant = 1.06;
inline constexpr double kBandwidthFloor = 1e-3;
inline constexpr double kExtrapolationRadius = 5.0;

// Product Gaussian kernel weights over a fixed regressor sample.
class KernelSmoother {
 public:
  KernelSmoother(std::vector<double> regressors, std::size_t dim,
                 const BandwidthRule& rule);

  std::size_t dim() const { return dim_; }
  std::size_t samples() const { return count_; }
  const std::vector<double>& bandwidths() const { return bandwidths_; }

  // Normalized weights (largest weight scaled to 1) and whether the query
  // lies farther than kExtrapolationRadius bandwidths from every sample.
  bool Weights(std::span<const double> query, std::vector<double>& out) const;

 private:
  std::vector<double> x_;
  std::size_t dim_;
  std::size_t count_;
  std::vector<double> bandwidths_;
};

struct NwChoiceEstimate {
  std::vector<double> probabilities;
  bool extrapolated = false;
};

struct NwTransitionEstimate {
  TransitionMatrix probabilities;
  bool extrapolated = false;
};

class NwChoiceEstimator : public ChoiceProbabilityModel {
 public:
  NwChoiceEstimator(const CrossSectionData& data, const BandwidthRule& rule);

  std::size_t size() const override { return n_; }
  std::vector<double> Probabilities(std::span<const double> prices,
                                    double income) const override;
  nlohmann::json Metadata() const override;

  NwChoiceEstimate Estimate(std::span<const double> prices, double income) const;
  const std::vector<double>& bandwidths() const { return smoother_.bandwidths(); }
  std::uint64_t extrapolated_queries() const { return extrapolated_.load(); }

 private:
  std::size_t n_;
  std::vector<std::size_t> choices_;
  KernelSmoother smoother_;
  mutable std::atomic<std::uint64_t> extrapolated_{0};
};

class NwTransitionEstimator : public TransitionProbabilityModel {
 public:
  NwTransitionEstimator(const PanelData& data, const BandwidthRule& rule);

  std::size_t size() const override { return n_; }
  TransitionMatrix Probabilities(std::span<const double> p,
                                 std::span<const double> p_post,
                                 double income) const override;
  nlohmann::json Metadata() const override;

  NwTransitionEstimate Estimate(std::span<const double> p,
                                std::span<const double> p_post,
                                double income) const;
  const std::vector<double>& bandwidths() const { return smoother_.bandwidths(); }
  std::uint64_t extrapolated_queries() const { return extrapolated_.load(); }

 private:
  std::size_t n_;
  std::vector<std::size_t> cells_;
  KernelSmoother smoother_;
  mutable std::atomic<std::uint64_t> extrapolated_{0};
};

struct NormalizedBudgets {
  PriceVector prices;
  PriceVector prices_post;
  double income = 0.0;
};

// Maps an income change y -> y' onto the price change p' -> p' - y' + y at
// income y.
NormalizedBudgets NormalizeIncome(std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  double y_post);

// evaluator(p, y) = model(p - delta * 1, y - delta).
class OutsideOptionShift : public ChoiceProbabilityModel {
 public:
  OutsideOptionShift(ChoiceModelPtr model, std::size_t o, double delta);
  // Per-query delta = p_o - anchor, so the wrapped model always sees p_o at
  // `anchor`.
  static std::shared_ptr<OutsideOptionShift> Anchored(ChoiceModelPtr model,
                                                      std::size_t o,
                                                      double anchor);

  std::size_t size() const override { return model_->size(); }
  std::vector<double> Probabilities(std::span<const double> prices,
                                    double income) const override;
  nlohmann::json Metadata() const override;

 private:
  ChoiceModelPtr model_;
  std::size_t o_;
  double delta_;
  bool anchored_ = false;
};

// Transition counterpart of OutsideOptionShift: both price vectors and the
// income move down by delta.
class OutsideOptionTransitionShift : public TransitionProbabilityModel {
 public:
  OutsideOptionTransitionShift(TransitionModelPtr model, std::size_t o,
                               double delta);

  std::size_t size() const override { return model_->size(); }
  TransitionMatrix Probabilities(std::span<const double> p,
                                 std::span<const double> p_post,
                                 double income) const override;
  nlohmann::json Metadata() const override;

 private:
  TransitionModelPtr model_;
  std::size_t o_;
  double delta_;
};

}  // namespace nosdist

#endif  // NOSDIST_PROBABILITY_H_
