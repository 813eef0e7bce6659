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

#include "nosdist/bounds.h"

#include <gtest/gtest.h>

#include <random>

#include "nosdist/errors.h"
#include "nosdist/rum_oracle.h"

namespace nosdist {
namespace {

// Choice model with fixed probabilities, for bound arithmetic.
class TableChoiceModel : public ChoiceProbabilityModel {
 public:
  TableChoiceModel(std::vector<double> before, std::vector<double> after,
                   PriceVector p_after)
      : before_(std::move(before)), after_(std::move(after)),
        p_after_(std::move(p_after)) {}
  std::size_t size() const override { return before_.size(); }
  std::vector<double> Probabilities(std::span<const double> prices,
                                    double) const override {
    return std::equal(prices.begin(), prices.end(), p_after_.begin())
               ? after_
               : before_;
  }
  nlohmann::json Metadata() const override { return {{"model", "table"}}; }

 private:
  std::vector<double> before_, after_;
  PriceVector p_after_;
};

TEST(TransitionBounds, NoPriceChangeIsPointIdentified) {
  const LogitChoiceModel m({0, 0.5, 1}, 1.0);
  const PriceVector p{1, 1.5, 2};
  const auto probs = m.Probabilities(p, 10);
  for (std::size_t i = 0; i < 3; ++i) {
    const ProbabilityInterval b = TransitionBounds(m, i, i, p, p, 10);
    EXPECT_DOUBLE_EQ(b.lower, probs[i]);
    EXPECT_DOUBLE_EQ(b.upper, probs[i]);
  }
}

TEST(TransitionBounds, FrechetBranchArithmetic) {
  // i = 0, j = 1; p_0 rises and p_1 rises, so the zero-cell rule is off.
  const PriceVector p{1, 1}, pp{2, 2};
  const TableChoiceModel m({0.6, 0.4}, {0.3, 0.7}, pp);
  const ProbabilityInterval b = TransitionBounds(m, 0, 1, p, pp, 0);
  EXPECT_NEAR(b.lower, 0.3, 1e-15);
  EXPECT_NEAR(b.upper, 0.6, 1e-15);
}

TEST(TransitionBounds, ZeroCell) {
  const LogitChoiceModel m({0, 0.5, 1}, 1.0);
  const PriceVector p{2, 1, 1}, pp{1, 1.5, 1};
  EXPECT_EQ(TransitionBounds(m, 0, 1, p, pp, 3), (ProbabilityInterval{0, 0}));
  EXPECT_EQ(TransitionBounds(m, 0, 2, p, pp, 3), (ProbabilityInterval{0, 0}));
  EXPECT_THROW(TransitionBounds(m, 0, 3, p, pp, 3), InvalidArgument);
}

TEST(EnvelopeModels, NoPriceChange) {
  const ChoiceModelPtr m = MakeLogitChoiceModel({0, 0.5, 1}, 1.0);
  const EnvelopeModels env = MakeEnvelopeTransitionModels(m);
  const PriceVector p{1, 1.5, 2};
  const auto probs = m->Probabilities(p, 10);
  const TransitionMatrix lo = env.lower->Probabilities(p, p, 10);
  const TransitionMatrix hi = env.upper->Probabilities(p, p, 10);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(lo(i, j), i == j ? probs[i] : 0.0);
      EXPECT_DOUBLE_EQ(hi(i, j), i == j ? probs[i] : 0.0);
    }
  }
  EXPECT_NE(env.lower->Metadata().dump().find("not a joint law"),
            std::string::npos);
}

TEST(EnvelopeModels, LowerBelowUpperOnSweep) {
  const ChoiceModelPtr m = MakeLogitChoiceModel({0, 0.5, 1}, 1.0);
  const EnvelopeModels env = MakeEnvelopeTransitionModels(m);
  const PriceVector p{1, 1.5, 2};
  for (int s = 0; s < 50; ++s) {
    const double t = -2.0 + 4.0 * s / 49.0;
    const PriceVector pp{1 + t, 1.5 - 0.5 * t, 2 + 0.25 * t};
    const TransitionMatrix lo = env.lower->Probabilities(p, pp, 10);
    const TransitionMatrix hi = env.upper->Probabilities(p, pp, 10);
    for (std::size_t c = 0; c < 9; ++c) {
      EXPECT_LE(lo.cells[c], hi.cells[c]);
      EXPECT_GE(lo.cells[c], 0.0);
      EXPECT_LE(hi.cells[c], 1.0);
    }
    EXPECT_EQ(env.upper->Probability(0, 1, p, pp, 10), hi(0, 1));
  }
}

TEST(TransitionBounds, ContainMonteCarloTruth) {
  const UtilitySpec spec = UtilitySpec::Logit({0, 0.5, 1}, 1.0);
  const auto table = std::make_shared<const DrawTable>(
      DrawTable::Generate(spec, 77, 50000));
  const McTransitionModel truth(table);
  const McChoiceModel choice(table);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 3);
  for (int q = 0; q < 100; ++q) {
    const PriceVector p{u(rng), u(rng), u(rng)}, pp{u(rng), u(rng), u(rng)};
    const double y = 5 + u(rng);
    const BoundMatrices b = TransitionBoundMatrices(choice, p, pp, y);
    const TransitionMatrix t = truth.Probabilities(p, pp, y);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_GE(t(i, j), b.lower(i, j) - 1e-12);
        EXPECT_LE(t(i, j), b.upper(i, j) + 1e-12);
        if (i != j && p[i] >= pp[i] && p[j] <= pp[j]) {
          EXPECT_EQ(t(i, j), 0.0);
        }
      }
    }
  }
}

TEST(TransitionBounds, ZeroCellPersistsAsGapWidens) {
  const LogitChoiceModel m({0, 0.5, 1}, 1.0);
  const PriceVector p{2, 1, 1.5};
  for (double g = 0.0; g < 3; g += 0.5) {
    const PriceVector pp{2 - g, 1 + g, 1.5};
    EXPECT_EQ(TransitionBounds(m, 0, 1, p, pp, 3), (ProbabilityInterval{0, 0}));
  }
}

// Draw tables built from one uniform shock.
std::shared_ptr<const DrawTable> SingleShock(std::size_t n,
                                             const std::vector<double>& loading,
                                             std::vector<double> alpha,
                                             std::size_t count) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<PreferenceDraw> draws;
  for (std::size_t r = 0; r < count; ++r) {
    const double e = u(rng);
    std::vector<double> eps(n);
    for (std::size_t c = 0; c < n; ++c) eps[c] = loading[c] * e;
    draws.push_back({alpha, 1.0, eps});
  }
  return std::make_shared<const DrawTable>(DrawTable::FromDraws(draws));
}

TEST(TransitionBounds, ComonotoneWitnessAttainsUpper) {
  const auto table = SingleShock(3, {1, 0, -1}, {0, 0.3, 0}, 200000);
  const McTransitionModel truth(table);
  const McChoiceModel choice(table);
  const PriceVector p{0, 0, 0}, pp{2, 0, 0};
  const ProbabilityInterval b = TransitionBounds(choice, 0, 1, p, pp, 5);
  EXPECT_GT(b.upper - b.lower, 0.2);
  EXPECT_NEAR(truth.Probability(0, 1, p, pp, 5), b.upper, 0.01);
}

TEST(TransitionBounds, CountermonotoneWitnessAttainsLower) {
  const auto table = SingleShock(2, {0, 1}, {0, 0}, 200000);
  const McTransitionModel truth(table);
  const McChoiceModel choice(table);
  const PriceVector p{1, 1}, pp{1, 1.5};
  const ProbabilityInterval b = TransitionBounds(choice, 1, 0, p, pp, 5);
  EXPECT_GT(b.upper - b.lower, 0.2);
  EXPECT_NEAR(truth.Probability(1, 0, p, pp, 5), b.lower, 0.01);
}

}  // namespace
}  // namespace nosdist
