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

#include "nosdist/social.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nosdist/errors.h"
#include "nosdist/numerics.h"
#include "nosdist/rum_oracle.h"

namespace nosdist {
namespace {

const std::vector<double> kAlpha{0, 0.5, 1};

PopulationSample RandomPopulation(std::size_t members, std::uint64_t seed,
                                  bool common_prices) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 2.5), inc(5, 15), wt(0.5, 2);
  std::vector<BudgetSet> out;
  std::vector<double> weights;
  const PriceVector common{1, 1.5, 2};
  for (std::size_t m = 0; m < members; ++m) {
    PriceVector p = common_prices ? common : PriceVector{u(rng), u(rng), u(rng)};
    out.push_back({p, inc(rng)});
    weights.push_back(wt(rng));
  }
  return PopulationSample(out, weights);
}

TEST(PopulationSample, WeightsNormalized) {
  const PopulationSample a({{{1}, 1}, {{2}, 2}});
  EXPECT_EQ(a.weights(), (std::vector<double>{0.5, 0.5}));
  const PopulationSample b({{{1}, 1}, {{2}, 2}}, {1, 3});
  EXPECT_DOUBLE_EQ(b.weights()[1], 0.75);
  EXPECT_THROW(PopulationSample({{{1}, 1}}, {-1}), InvalidArgument);
  EXPECT_THROW(PopulationSample({}), InvalidArgument);
}

TEST(PopulationSample, CsvRoundTrip) {
  const PopulationSample a = RandomPopulation(4, 1, false);
  std::stringstream ss;
  WritePopulationCsv(ss, a);
  EXPECT_EQ(ss.str().substr(0, 19), "p_0,p_1,p_2,y,weigh");
  const PopulationSample b = ReadPopulationCsv(ss);
  EXPECT_EQ(b.members(), a.members());
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_NEAR(b.weights()[m], a.weights()[m], 1e-15);
  }
}

TEST(AversionFunction, Validation) {
  EXPECT_NO_THROW(AversionFunction::Identity());
  EXPECT_NO_THROW(AversionFunction::NegativeExponential(0.5));
  EXPECT_THROW(AversionFunction([](double w) { return -w; }, false, "dec"),
               InvalidArgument);
  EXPECT_THROW(AversionFunction([](double w) { return std::exp(w); }, true,
                                "convex"),
               InvalidArgument);
  EXPECT_NO_THROW(
      AversionFunction([](double w) { return std::exp(w); }, false, "convex"));
}

TEST(WelfareCdf, Examples) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PriceVector p{1, 1.5, 2};
  const NOSFamily distinct = NOSFamily::Mmu({{1, 1, 1}, 10});
  EXPECT_EQ(WelfareCdf(logit, distinct, p, 10, -100), 0.0);
  const NOSFamily actual = NOSFamily::Mmu({p, 10});
  for (double w : {9.0, 9.999, 10.001, 12.0}) {
    EXPECT_EQ(WelfareCdf(logit, actual, p, 10, w), w > 10 ? 1.0 : 0.0);
  }
  // 1 - Pr[W >= w] is Pr[W < w]: at the atom itself the mass is still above.
  EXPECT_EQ(WelfareCdf(logit, actual, p, 10, 10.0), 0.0);
  EXPECT_EQ(WelfareCdf(logit, actual, p, 10, std::nextafter(10.0, 11.0)), 1.0);
}

TEST(WelfareCdf, ComplementsLevelCurve) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PriceVector p{1, 1.5, 2};
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, 10});
  const CurveResult level = LevelDistribution({nullptr, &logit}, f, 0, p[0], p,
                                              10, LevelMode::MarginalAtOptimum());
  double prev = 0.0;
  for (std::size_t m = 0; m < level.curve.size(); ++m) {
    const double w = level.curve.grid()[m];
    const double F = WelfareCdf(logit, f, p, 10, w);
    EXPECT_NEAR(F + level.curve.values()[m], 1.0, 1e-9);
    EXPECT_GE(F, prev);
    prev = F;
  }
}

TEST(Swf, IdentityWithReferenceAtCommonPricesIsMeanIncome) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PopulationSample pop = RandomPopulation(20, 5, true);
  const NOSFamily f = NOSFamily::Mmu({{1, 1.5, 2}, 0});
  const SwfResult r = Swf(logit, f, AversionFunction::Identity(), pop);
  double mean = 0.0;
  for (std::size_t m = 0; m < pop.size(); ++m) {
    mean += pop.weights()[m] * pop.members()[m].income;
  }
  EXPECT_NEAR(r.swf, mean, 1e-6);
  EXPECT_EQ(r.contributions.size(), 20u);
  EXPECT_TRUE(r.ToJson().contains("per_member_contributions"));
}

TEST(Swf, DegenerateSingleMember) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PriceVector p{1, 1.5, 2};
  const PopulationSample pop({{p, 7}});
  const auto h = AversionFunction::NegativeExponential(0.3);
  const SwfResult r = Swf(logit, NOSFamily::Mmu({p, 7}), h, pop);
  EXPECT_NEAR(r.swf, h(7.0), 1e-12);
}

TEST(Swf, ConcaveAversionMatchesPooledOracle) {
  const UtilitySpec spec = UtilitySpec::Logit(kAlpha, 1.0);
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PopulationSample pop = RandomPopulation(20, 7, false);
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, 0});
  const auto h = AversionFunction::NegativeExponential(0.1);
  const SwfResult r = Swf(logit, f, h, pop);
  double oracle = 0.0;
  std::uint64_t seed = 100;
  for (std::size_t m = 0; m < pop.size(); ++m) {
    const BudgetSet& b = pop.members()[m];
    double acc = 0.0;
    const auto draws = DrawPreferences(spec, seed++, 20000);
    for (const auto& d : draws) {
      const std::size_t k = Choose(d, b);
      acc += h(ExactWelfare(d, f, k, b.prices[k], b.income));
    }
    oracle += pop.weights()[m] * acc / draws.size();
  }
  EXPECT_NEAR(r.swf, oracle, 0.01);
}

TEST(Swf, OpenTailNamesMember) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PopulationSample pop = RandomPopulation(3, 9, false);
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, 0});
  try {
    Swf(logit, f, AversionFunction::Identity(), pop,
        GridRequest::Explicit({-1000, 1000}));
    SUCCEED();
  } catch (...) {
    FAIL() << "wide grid should integrate";
  }
  try {
    Swf(logit, f, AversionFunction::Identity(), pop,
        GridRequest::Explicit(Linspace(13, 14, 11)));
    FAIL() << "expected NonintegrableCurve";
  } catch (const NonintegrableCurve& e) {
    EXPECT_NE(std::string(e.what()).find("member 0"), std::string::npos);
  }
}

TEST(SwfDifference, ZeroShiftIsExactlyZero) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PopulationSample pop = RandomPopulation(10, 11, false);
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, 0});
  const auto h = AversionFunction::NegativeExponential(0.2);
  EXPECT_EQ(SwfDifference(logit, f, h, pop, {PriceVector{0, 0, 0}}), 0.0);
}

TEST(SwfDifference, PriceDecreaseRaisesWelfareAndMatchesDefinition) {
  const UtilitySpec spec = UtilitySpec::Logit(kAlpha, 1.0);
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PopulationSample pop = RandomPopulation(10, 13, false);
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, 0});
  const auto h = AversionFunction::Identity();
  const PriceVector down{-0.3, -0.3, -0.3};
  const double diff = SwfDifference(logit, f, h, pop, {down});
  EXPECT_GT(diff, 0.0);

  // Oracle sign through Monte Carlo welfare averages.
  const PopulationSample moved = pop.Shifted({down});
  double oracle = 0.0;
  for (std::size_t m = 0; m < pop.size(); ++m) {
    for (const auto& d : DrawPreferences(spec, 200 + m, 5000)) {
      const BudgetSet& a = pop.members()[m];
      const BudgetSet& b = moved.members()[m];
      const std::size_t ka = Choose(d, a), kb = Choose(d, b);
      oracle += pop.weights()[m] *
                (ExactWelfare(d, f, kb, b.prices[kb], b.income) -
                 ExactWelfare(d, f, ka, a.prices[ka], a.income)) /
                5000.0;
    }
  }
  EXPECT_GT(oracle, 0.0);
  EXPECT_NEAR(diff, oracle, 0.02);

  // Same shared grid by hand.
  double lo = kInf, hi = -kInf;
  std::vector<double> marks;
  for (const PopulationSample* s : {&pop, &moved}) {
    for (const BudgetSet& b : s->members()) {
      const NOSFamily g = f.AtIncome(b.income);
      for (std::size_t c = 0; c < 3; ++c) {
        const double t = g.Threshold(c, b.prices[c]);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        marks.insert(marks.end(), {std::nextafter(t, -kInf), t,
                                   std::nextafter(t, kInf)});
      }
    }
  }
  const double pad = 0.1 * (hi - lo);
  const GridRequest grid =
      GridRequest::Explicit(MergeGrid(Linspace(lo - pad, hi + pad, 512), marks));
  EXPECT_NEAR(diff,
              Swf(logit, f, h, moved, grid).swf - Swf(logit, f, h, pop, grid).swf,
              1e-12);
}

TEST(Swf, CommonPricesDependOnlyOnIncomes) {
  const LogitChoiceModel logit(kAlpha, 1.0);
  const PriceVector p{1, 1.5, 2};
  const NOSFamily f = NOSFamily::Mmu({p, 0});
  const auto h = AversionFunction::NegativeExponential(0.2);
  const PopulationSample a({{p, 6}, {p, 9}, {p, 12}}, {1, 2, 3});
  const PopulationSample b({{p, 12}, {p, 6}, {p, 9}}, {3, 1, 2});
  EXPECT_NEAR(Swf(logit, f, h, a).swf, Swf(logit, f, h, b).swf, 1e-12);
}

}  // namespace
}  // namespace nosdist
