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

#include "nosdist/welfare.h"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "nosdist/bounds.h"
#include "nosdist/errors.h"
#include "nosdist/io.h"
#include "nosdist/numerics.h"
#include "nosdist/probability.h"
#include "test_util.h"

namespace nosdist {
namespace {

using testing::KsDistance;
using testing::Monotone;

// Logit n=3 with alpha=(0, 0.5, 1), beta=1, p=(1, 1.5, 2), y=10.
class WelfareTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new UtilitySpec(UtilitySpec::Logit({0, 0.5, 1}, 1.0));
    table_ = new std::shared_ptr<const DrawTable>(
        std::make_shared<const DrawTable>(DrawTable::Generate(*spec_, 1, 200000)));
    oracle_ = new std::vector<PreferenceDraw>(DrawPreferences(*spec_, 2, 100000));
  }
  static void TearDownTestSuite() {
    delete spec_;
    delete table_;
    delete oracle_;
  }

  const PriceVector p_{1, 1.5, 2};
  const PriceVector pp_{1, 1.2, 1.6};
  const double y_ = 10;
  const LogitChoiceModel logit_{{0, 0.5, 1}, 1.0};

  static UtilitySpec* spec_;
  static std::shared_ptr<const DrawTable>* table_;
  static std::vector<PreferenceDraw>* oracle_;
};

UtilitySpec* WelfareTest::spec_ = nullptr;
std::shared_ptr<const DrawTable>* WelfareTest::table_ = nullptr;
std::vector<PreferenceDraw>* WelfareTest::oracle_ = nullptr;

TEST_F(WelfareTest, ConditionalOnOwnChoiceIsStepWhenReferenceIsActual) {
  const NOSFamily f = NOSFamily::Mmu({p_, y_});
  const ModelPair models{nullptr, &logit_};
  for (std::size_t k = 0; k < 3; ++k) {
    const CurveResult r = LevelDistribution(models, f, k, p_[k], p_, y_,
                                            LevelMode::ConditionalOnOwnChoice());
    for (std::size_t m = 0; m < r.curve.size(); ++m) {
      EXPECT_EQ(r.curve.values()[m], r.curve.grid()[m] <= y_ ? 1.0 : 0.0);
    }
    ASSERT_EQ(r.curve.mass_points().size(), 1u);
    EXPECT_EQ(r.curve.mass_points()[0], (MassPoint{y_, 1.0}));
    EXPECT_EQ(r.curve.axis(), "w");
  }
}

TEST_F(WelfareTest, MarginalAtOptimumMatchesOracle) {
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, y_});
  const CurveResult r = LevelDistribution({nullptr, &logit_}, f, 0, p_[0], p_,
                                          y_, LevelMode::MarginalAtOptimum());
  EXPECT_TRUE(Monotone(r.curve));
  EXPECT_EQ(r.curve.values().front(), 1.0);
  std::vector<double> w;
  for (const auto& d : *oracle_) {
    const std::size_t k = Choose(d, {p_, y_});
    w.push_back(ExactWelfare(d, f, k, p_[k], y_));
  }
  EXPECT_LE(KsDistance(r.curve, w), 0.01);
}

TEST_F(WelfareTest, ConditionalOnOwnChoiceMatchesOracle) {
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, y_});
  for (std::size_t k = 0; k < 3; ++k) {
    const CurveResult r = LevelDistribution({nullptr, &logit_}, f, k, p_[k],
                                            p_, y_,
                                            LevelMode::ConditionalOnOwnChoice());
    std::vector<double> w;
    for (const auto& d : *oracle_) {
      if (Choose(d, {p_, y_}) == k) w.push_back(ExactWelfare(d, f, k, p_[k], y_));
    }
    EXPECT_LE(KsDistance(r.curve, w), 4.0 / std::sqrt(double(w.size())));
  }
}

TEST_F(WelfareTest, JointWithPostChoiceLimitAndSumOverJ) {
  const McTransitionModel trans(*table_);
  const McChoiceModel choice(*table_);
  const ModelPair models{&trans, &choice};
  const NOSFamily f = NOSFamily::Mmu({{1, 1, 1}, y_});
  const std::size_t k = 1;
  const GridRequest grid = GridRequest::Explicit(Linspace(-30, 20, 301));
  const CurveResult marginal = LevelDistribution(
      models, f, k, p_[k], p_, y_, LevelMode::MarginalAtBundle(), grid);
  std::vector<double> sum(grid.points.size(), 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    const CurveResult joint = LevelDistribution(
        models, f, k, p_[k], pp_, y_, LevelMode::JointWithPostChoice(j), grid);
    EXPECT_TRUE(Monotone(joint.curve));
    EXPECT_NEAR(joint.curve.values().front(), choice.Probability(j, pp_, y_),
                1e-12);
    for (std::size_t m = 0; m < sum.size(); ++m) sum[m] += joint.curve.values()[m];
    const CurveResult cond = LevelDistribution(
        models, f, k, p_[k], pp_, y_, LevelMode::ConditionalOnPostChoice(j),
        grid);
    EXPECT_NEAR(cond.curve.values().front(), 1.0, 1e-12);
  }
  for (std::size_t m = 0; m < sum.size(); ++m) {
    EXPECT_NEAR(sum[m], marginal.curve.values()[m], 1e-9);
  }
}

TEST_F(WelfareTest, ConditioningOnImpossibleEventRefused) {
  const LogitChoiceModel sharp({0, 0, 0}, 1.0);
  const PriceVector p{0, 1000, 0};
  const NOSFamily f = NOSFamily::Mmu({p, y_});
  EXPECT_THROW(LevelDistribution({nullptr, &sharp}, f, 1, p[1], p, y_,
                                 LevelMode::ConditionalOnOwnChoice()),
               DegenerateConditioning);
}

TEST_F(WelfareTest, GeneralFamilyMatchesOracle) {
  const NOSFamily f(
      3,
      [](double l) {
        return PriceVector{10 - l, 10.5 - l - 0.5 * std::tanh(l - 8), 11 - l};
      },
      {}, y_, "curved");
  const CurveResult r = LevelDistribution({nullptr, &logit_}, f, 0, p_[0], p_,
                                          y_, LevelMode::MarginalAtOptimum());
  std::vector<double> w;
  for (const auto& d : *oracle_) {
    const std::size_t k = Choose(d, {p_, y_});
    w.push_back(ExactWelfare(d, f, k, p_[k], y_));
  }
  EXPECT_LE(KsDistance(r.curve, w), 0.01);
}

TEST_F(WelfareTest, JointBeforeAfterLimitsAndOracle) {
  const McTransitionModel trans(*table_);
  const NOSFamily f0 = NOSFamily::Mmu({{1, 1, 1}, y_});
  const NOSFamily f1 = NOSFamily::Mmu({{2, 1, 1.5}, y_});
  const TransitionMatrix t = trans.Probabilities(p_, pp_, y_);
  EXPECT_EQ(JointBeforeAfter(trans, f0, f1, p_, pp_, y_, 0, 2, -1e6, -1e6),
            t(0, 2));
  const double s_j = f1.Threshold(2, pp_[2]);
  EXPECT_EQ(JointBeforeAfter(trans, f0, f1, p_, pp_, y_, 0, 2, -1e6,
                             std::nextafter(s_j, kInf)),
            0.0);

  const std::vector<double> ws = Linspace(7, 11, 5), zs = Linspace(7.5, 11.5, 5);
  std::vector<double> w0, w1;
  std::vector<std::size_t> ci, cj;
  for (const auto& d : *oracle_) {
    ci.push_back(Choose(d, {p_, y_}));
    cj.push_back(Choose(d, {pp_, y_}));
    w0.push_back(ExactWelfare(d, f0, ci.back(), p_[ci.back()], y_));
    w1.push_back(ExactWelfare(d, f1, cj.back(), pp_[cj.back()], y_));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (double w : ws) {
        for (double z : zs) {
          double freq = 0.0;
          for (std::size_t r = 0; r < w0.size(); ++r) {
            freq += ci[r] == i && cj[r] == j && w <= w0[r] && z <= w1[r];
          }
          freq /= static_cast<double>(w0.size());
          EXPECT_NEAR(JointBeforeAfter(trans, f0, f1, p_, pp_, y_, i, j, w, z),
                      freq, 0.015);
        }
      }
    }
  }
}

TEST_F(WelfareTest, LevelDifferenceLimits) {
  const McTransitionModel trans(*table_);
  const NOSFamily f = NOSFamily::Mmu({pp_, y_});
  // w -> -inf with both families MMU(p'): the difference is the CV.
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const ModelPair models{&trans, nullptr};
      const CurveResult cv =
          CvDistribution(models, p_, pp_, y_, VariationMode::Joint(i, j));
      for (double z : {-0.1, 0.1, 0.25, 0.45}) {
        const QuadratureResult q =
            LevelDifferenceJoint(trans, f, f, p_, pp_, y_, i, j, -kInf, z);
        const CurveResult at = CvDistribution(models, p_, pp_, y_,
                                              VariationMode::Joint(i, j),
                                              GridRequest::Explicit({z}));
        EXPECT_NEAR(q.probability, at.curve.values()[0], 0.02)
            << "i=" << i << " j=" << j << " z=" << z;
      }
    }
  }
  // z -> +inf: the difference constraint is vacuous.
  const NOSFamily f0 = NOSFamily::Mmu({{1, 1, 1}, y_});
  for (double w : {8.0, 9.0, 9.5}) {
    const QuadratureResult q =
        LevelDifferenceJoint(trans, f0, f, p_, pp_, y_, 1, 1, w, 50.0);
    EXPECT_NEAR(q.probability,
                JointBeforeAfter(trans, f0, f, p_, pp_, y_, 1, 1, w, -kInf),
                0.02);
  }
}

TEST_F(WelfareTest, CvNoPriceChangeIsDegenerateAtZero) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  for (const VariationMode& mode :
       {VariationMode::Marginal(), VariationMode::ConditionalOnPre(1)}) {
    const CurveResult r = CvDistribution(models, p_, p_, y_, mode);
    for (std::size_t m = 0; m < r.curve.size(); ++m) {
      EXPECT_EQ(r.curve.values()[m], r.curve.grid()[m] >= 0.0 ? 1.0 : 0.0);
    }
  }
  const CurveResult ev = EvDistribution(models, p_, p_, y_, VariationMode::Marginal());
  for (std::size_t m = 0; m < ev.curve.size(); ++m) {
    EXPECT_EQ(ev.curve.values()[m], ev.curve.grid()[m] >= 0.0 ? 1.0 : 0.0);
  }
}

TEST_F(WelfareTest, CvStructuralBounds) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  double max_gap = -kInf;
  for (std::size_t k = 0; k < 3; ++k) max_gap = std::max(max_gap, p_[k] - pp_[k]);
  for (std::size_t i = 0; i < 3; ++i) {
    const CurveResult pre =
        CvDistribution(models, p_, pp_, y_, VariationMode::ConditionalOnPre(i));
    for (std::size_t m = 0; m < pre.curve.size(); ++m) {
      if (pre.curve.grid()[m] < p_[i] - pp_[i]) {
        EXPECT_EQ(pre.curve.values()[m], 0.0);
      }
    }
    for (std::size_t j = 0; j < 3; ++j) {
      if (trans.Probability(i, j, p_, pp_, y_) == 0.0) continue;
      const CurveResult both = CvDistribution(
          models, p_, pp_, y_, VariationMode::ConditionalOnBoth(i, j));
      EXPECT_TRUE(Monotone(both.curve));
      for (std::size_t m = 0; m < both.curve.size(); ++m) {
        if (both.curve.grid()[m] >= max_gap) {
          EXPECT_EQ(both.curve.values()[m], 1.0);
        }
      }
    }
  }
}

TEST_F(WelfareTest, CvAndEvMatchOracle) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  std::vector<double> cv, ev;
  std::vector<std::size_t> ci, cj;
  for (const auto& d : *oracle_) {
    cv.push_back(ExactVariation(d, p_, pp_, y_, VariationKind::kCompensating));
    ev.push_back(ExactVariation(d, p_, pp_, y_, VariationKind::kEquivalent));
    ci.push_back(Choose(d, {p_, y_}));
    cj.push_back(Choose(d, {pp_, y_}));
  }
  EXPECT_LE(KsDistance(CvDistribution(models, p_, pp_, y_,
                                      VariationMode::Marginal()).curve, cv),
            0.01);
  EXPECT_LE(KsDistance(EvDistribution(models, p_, pp_, y_,
                                      VariationMode::Marginal()).curve, ev),
            0.01);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> sub;
    for (std::size_t r = 0; r < cv.size(); ++r) {
      if (ci[r] == i) sub.push_back(cv[r]);
    }
    EXPECT_LE(KsDistance(CvDistribution(models, p_, pp_, y_,
                                        VariationMode::ConditionalOnPre(i)).curve,
                         sub),
              0.015);
  }
}

TEST_F(WelfareTest, EvSingleAlternative) {
  const LogitChoiceModel one({0.0}, 1.0);
  const PriceVector p{3}, pp{1.25};
  const CurveResult r = EvDistribution({nullptr, &one}, p, pp, 5,
                                       VariationMode::Marginal());
  for (std::size_t m = 0; m < r.curve.size(); ++m) {
    EXPECT_EQ(r.curve.values()[m], r.curve.grid()[m] >= -1.75 ? 1.0 : 0.0);
  }
}

TEST_F(WelfareTest, EnvelopeCurvesBracketTruth) {
  const auto choice = std::make_shared<McChoiceModel>(*table_);
  const McTransitionModel trans(*table_);
  const EnvelopeModels env = MakeEnvelopeTransitionModels(choice);
  const GridRequest grid = GridRequest::Explicit(Linspace(-0.5, 1.0, 151));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const VariationMode mode = VariationMode::Joint(i, j);
      const auto lo = CvDistribution({env.lower.get(), nullptr}, p_, pp_, y_, mode, grid);
      const auto mid = CvDistribution({&trans, nullptr}, p_, pp_, y_, mode, grid);
      const auto hi = CvDistribution({env.upper.get(), nullptr}, p_, pp_, y_, mode, grid);
      for (std::size_t m = 0; m < mid.curve.size(); ++m) {
        EXPECT_LE(lo.curve.values()[m], mid.curve.values()[m] + 1e-12);
        EXPECT_LE(mid.curve.values()[m], hi.curve.values()[m] + 1e-12);
      }
    }
  }
}

TEST_F(WelfareTest, MmuCvJointLimitsAndOracle) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  const std::vector<double> zs = Linspace(-0.2, 0.5, 8);
  // w -> -inf reproduces the CV curve.
  const std::vector<double> far_w{-1e6};
  const JointGridResult low =
      MmuCvJoint(models, p_, pp_, y_, VariationMode::Marginal(), far_w, zs);
  const CurveResult cv = CvDistribution(models, p_, pp_, y_,
                                        VariationMode::Marginal(),
                                        GridRequest::Explicit(zs));
  for (std::size_t b = 0; b < zs.size(); ++b) {
    EXPECT_NEAR(low.at(0, b), cv.curve.values()[b], 1e-12);
  }
  // z -> +inf reproduces the MMU(p') level at the pre-change optimum.
  const std::vector<double> ws = Linspace(9.4, 10.2, 9);
  const std::vector<double> far_z{1e6};
  const JointGridResult high =
      MmuCvJoint(models, p_, pp_, y_, VariationMode::Marginal(), ws, far_z);
  const CurveResult level = LevelDistribution(
      models, NOSFamily::Mmu({pp_, y_}), 0, p_[0], p_, y_,
      LevelMode::MarginalAtOptimum(), GridRequest::Explicit(ws));
  for (std::size_t a = 0; a < ws.size(); ++a) {
    EXPECT_NEAR(high.at(a, 0), level.curve.values()[a], 1e-12);
  }
  // Oracle frequencies on a 4x4 probe grid.
  const NOSFamily f = NOSFamily::Mmu({pp_, y_});
  const std::vector<double> pw = Linspace(9.6, 10.05, 4), pz = Linspace(-0.05, 0.4, 4);
  const JointGridResult joint =
      MmuCvJoint(models, p_, pp_, y_, VariationMode::Marginal(), pw, pz);
  std::vector<double> w, c;
  for (const auto& d : *oracle_) {
    const std::size_t i = Choose(d, {p_, y_});
    w.push_back(ExactWelfare(d, f, i, p_[i], y_));
    c.push_back(ExactVariation(d, p_, pp_, y_, VariationKind::kCompensating));
  }
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      double freq = 0.0;
      for (std::size_t r = 0; r < w.size(); ++r) freq += pw[a] <= w[r] && c[r] <= pz[b];
      EXPECT_NEAR(joint.at(a, b), freq / w.size(), 0.015);
    }
  }
}

TEST_F(WelfareTest, MmuEvJointLimits) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  const std::vector<double> ws{9.0, 10.0, 10.5}, zs{-0.5, 0.2, 1e6};
  const JointGridResult r = MmuEvJoint(models, p_, pp_, y_,
                                       VariationMode::Joint(1, 1), ws, zs);
  for (std::size_t b = 0; b < zs.size(); ++b) EXPECT_EQ(r.at(2, b), 0.0);
  EXPECT_NEAR(r.at(0, 2), trans.Probability(1, 1, p_, pp_, y_), 1e-12);
  EXPECT_NEAR(r.at(1, 2), trans.Probability(1, 1, p_, pp_, y_), 1e-12);
}

TEST_F(WelfareTest, MmuEvJointMatchesOracleBinary) {
  const UtilitySpec two = UtilitySpec::Logit({0, 0.4}, 1.0);
  const LogitChoiceModel logit({0, 0.4}, 1.0);
  const McTransitionModel trans(two, 200000, 9);
  const PriceVector p{1, 2}, pp{1.3, 1.5};
  const std::vector<double> ws{9, 10, 11}, zs{-0.3, 0.1, 0.45};
  const JointGridResult r = MmuEvJoint({&trans, &logit}, p, pp, 10,
                                       VariationMode::Marginal(), ws, zs);
  std::vector<double> ev;
  for (const auto& d : DrawPreferences(two, 10, 200000)) {
    ev.push_back(ExactVariation(d, p, pp, 10, VariationKind::kEquivalent));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      double freq = 0.0;
      for (double e : ev) freq += ws[a] <= 10 && e <= zs[b];
      EXPECT_NEAR(r.at(a, b), freq / ev.size(), 0.015);
    }
  }
}

TEST(MeanFromCurve, StepAndUniform) {
  const DistributionCurve step({0, 2, 4}, {1, 1, 0}, CurveKind::kCcdf,
                               {{2.0, 1.0}});
  const MeanResult a = MeanFromCurve(step);
  EXPECT_NEAR(a.mean, 2.0, 1e-12);
  EXPECT_FALSE(a.truncated);

  const auto g = Linspace(-0.1, 1.1, 1201);
  std::vector<double> s;
  for (double w : g) s.push_back(std::clamp(1.0 - w, 0.0, 1.0));
  EXPECT_NEAR(MeanFromCurve(DistributionCurve(g, s, CurveKind::kCcdf)).mean, 0.5,
              1e-3);
  std::vector<double> f;
  for (double w : g) f.push_back(std::clamp(w, 0.0, 1.0));
  EXPECT_NEAR(MeanFromCurve(DistributionCurve(g, f, CurveKind::kCdf)).mean, 0.5,
              1e-3);
}

TEST(MeanFromCurve, TruncationAndDivergence) {
  const auto g = Linspace(0, 1, 101);
  std::vector<double> s;
  for (double w : g) s.push_back(0.9 - 0.5 * w);
  const MeanResult r = MeanFromCurve(DistributionCurve(g, s, CurveKind::kCcdf));
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.warning.empty());
  std::vector<double> flat(g.size(), 0.5);
  EXPECT_THROW(MeanFromCurve(DistributionCurve(g, flat, CurveKind::kCcdf)),
               NonintegrableCurve);
}

TEST_F(WelfareTest, CvMeanMatchesOracleAndEnvelopeIntervalContainsIt) {
  const McTransitionModel trans(*table_);
  const ModelPair models{&trans, &logit_};
  const CurveResult cv = CvDistribution(models, p_, pp_, y_, VariationMode::Marginal());
  double sample = 0.0;
  for (const auto& d : *oracle_) {
    sample += ExactVariation(d, p_, pp_, y_, VariationKind::kCompensating);
  }
  sample /= oracle_->size();
  const MeanResult m = MeanFromCurve(cv.curve);
  EXPECT_FALSE(m.truncated);
  EXPECT_NEAR(m.mean, sample, 0.01);

  // Conditional on post choice j, bounded through the envelopes.
  const auto choice = std::make_shared<McChoiceModel>(*table_);
  const EnvelopeModels env = MakeEnvelopeTransitionModels(choice);
  for (std::size_t j = 0; j < 3; ++j) {
    const VariationMode mode = VariationMode::ConditionalOnPost(j);
    const CurveResult truth = CvDistribution({&trans, choice.get()}, p_, pp_, y_, mode);
    const GridRequest grid = GridRequest::Explicit(truth.curve.grid());
    const CurveResult lo =
        CvDistribution({env.lower.get(), choice.get()}, p_, pp_, y_, mode, grid);
    const CurveResult hi =
        CvDistribution({env.upper.get(), choice.get()}, p_, pp_, y_, mode, grid);
    const MeanInterval iv = MeanIntervalFromCurves(lo.curve, hi.curve);
    const double mean = MeanFromCurve(truth.curve).mean;
    EXPECT_LE(iv.lower, mean + 1e-9);
    EXPECT_GE(iv.upper, mean - 1e-9);
  }
}

TEST(Modes, JsonRoundTrip) {
  for (const LevelMode& m :
       {LevelMode::JointWithPostChoice(2), LevelMode::ConditionalOnPostChoice(1),
        LevelMode::ConditionalOnOwnChoice(), LevelMode::MarginalAtBundle(),
        LevelMode::MarginalAtOptimum()}) {
    EXPECT_EQ(LevelModeFromJson(ToJson(m)), m);
  }
  for (const VariationMode& m :
       {VariationMode::Joint(1, 2), VariationMode::ConditionalOnBoth(0, 1),
        VariationMode::ConditionalOnPre(2), VariationMode::ConditionalOnPost(1),
        VariationMode::Marginal()}) {
    EXPECT_EQ(VariationModeFromJson(ToJson(m)), m);
  }
  EXPECT_THROW(LevelModeFromJson({{"kind", "bogus"}}), InvalidArgument);
}

TEST(JointCsv, Header) {
  JointGridResult r{{1, 2}, {3}, {0.5, 0.25}, {}};
  std::stringstream ss;
  WriteJointCsv(ss, r);
  EXPECT_EQ(ss.str(), "w,z,value\n1,3,0.5\n2,3,0.25\n");
}

}  // namespace
}  // namespace nosdist
