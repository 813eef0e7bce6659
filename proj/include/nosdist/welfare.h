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

#ifndef NOSDIST_WELFARE_H_
#define NOSDIST_WELFARE_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosdist/core_model.h"
#include "nosdist/probability.h"
#include "nosdist/rum_oracle.h"

namespace nosdist {

inline constexpr std::size_t kDefaultGridSize = 512;
// Conditioning events less likely than this are refused.
inline constexpr double kDegenerateConditioning = 1e-12;

// Which welfare-level distribution to report, for the level W evaluated in
// bundle k.
struct LevelMode {
  enum class Kind {
    kJointWithPostChoice,      // Pr[w <= W, j chosen at p']
    kConditionalOnPostChoice,  // Pr[w <= W | j chosen at p']
    kConditionalOnOwnChoice,   // Pr[w <= W | k chosen at p]
    kMarginalAtBundle,         // Pr[w <= W]
    kMarginalAtOptimum,        // Pr[w <= W in the chosen bundle]
  };

  Kind kind = Kind::kMarginalAtOptimum;
  std::size_t j = 0;

  bool operator==(const LevelMode&) const = default;

  static LevelMode JointWithPostChoice(std::size_t j) {
    return {Kind::kJointWithPostChoice, j};
  }
  static LevelMode ConditionalOnPostChoice(std::size_t j) {
    return {Kind::kConditionalOnPostChoice, j};
  }
  static LevelMode ConditionalOnOwnChoice() {
    return {Kind::kConditionalOnOwnChoice, 0};
  }
  static LevelMode MarginalAtBundle() { return {Kind::kMarginalAtBundle, 0}; }
  static LevelMode MarginalAtOptimum() { return {Kind::kMarginalAtOptimum, 0}; }
};

// Which CV/EV distribution to report; i is the choice at p, j at p'.
struct VariationMode {
  enum class Kind {
    kJoint,
    kConditionalOnBoth,
    kConditionalOnPre,
    kConditionalOnPost,
    kMarginal,
  };

  Kind kind = Kind::kMarginal;
  std::size_t i = 0;
  std::size_t j = 0;

  bool operator==(const VariationMode&) const = default;

  static VariationMode Joint(std::size_t i, std::size_t j) {
    return {Kind::kJoint, i, j};
  }
  static VariationMode ConditionalOnBoth(std::size_t i, std::size_t j) {
    return {Kind::kConditionalOnBoth, i, j};
  }
  static VariationMode ConditionalOnPre(std::size_t i) {
    return {Kind::kConditionalOnPre, i, 0};
  }
  static VariationMode ConditionalOnPost(std::size_t j) {
    return {Kind::kConditionalOnPost, 0, j};
  }
  static VariationMode Marginal() { return {Kind::kMarginal, 0, 0}; }
};

std::string ToString(const LevelMode& mode);
std::string ToString(const VariationMode& mode);
LevelMode LevelModeFromJson(const nlohmann::json& j);
VariationMode VariationModeFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const LevelMode& mode);
nlohmann::json ToJson(const VariationMode& mode);

// Explicit points, or an automatic grid of `size` points over the support
// widened by 10% of its span on both sides, plus both neighbours of every
// jump location.
struct GridRequest {
  std::vector<double> points;
  std::size_t size = kDefaultGridSize;

  static GridRequest Explicit(std::vector<double> points) {
    return {std::move(points), 0};
  }
};

struct CurveResult {
  DistributionCurve curve;
  nlohmann::json metadata;
};

// Probability models available to the formulas. `transition` may be null
// for modes that only need choice probabilities.
struct ModelPair {
  const TransitionProbabilityModel* transition = nullptr;
  const ChoiceProbabilityModel* choice = nullptr;
};

// CCDF of the level W(y - p_k, k). `prices` is the actual price vector the
// conditioning refers to: p' for the post-choice modes and p for the others,
// whose k-th entry is replaced by p_k.
CurveResult LevelDistribution(const ModelPair& models, const NOSFamily& family,
                              std::size_t k, double p_k,
                              std::span<const double> prices, double y,
                              const LevelMode& mode,
                              const GridRequest& grid = {});

// Pr[w <= W0 in i, z <= W1 in j, i at p, j at p'].
double JointBeforeAfter(const TransitionProbabilityModel& trans,
                        const NOSFamily& family0, const NOSFamily& family1,
                        std::span<const double> p,
                        std::span<const double> p_post, double y,
                        std::size_t i, std::size_t j, double w, double z);

struct QuadratureSettings {
  // Cell width on the integration axis; 0 picks (support width) / cells.
  double step = 0.0;
  std::size_t cells = 400;
  std::size_t max_cells = 200000;

  bool operator==(const QuadratureSettings&) const = default;
};

struct QuadratureResult {
  double probability = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double step = 0.0;
  std::size_t cells = 0;

  nlohmann::json Metadata() const;
};

// Pr[w <= W0, W1 - W0 <= z, i at p, j at p'] by cellwise integration of the
// s-derivative of the before/after joint. Each cell differences the helper
// across the whole cell, so jumps in s telescope exactly.
QuadratureResult LevelDifferenceJoint(const TransitionProbabilityModel& trans,
                                      const NOSFamily& family0,
                                      const NOSFamily& family1,
                                      std::span<const double> p,
                                      std::span<const double> p_post, double y,
                                      std::size_t i, std::size_t j, double w,
                                      double z,
                                      const QuadratureSettings& settings = {});

// CDF of the CV or EV.
CurveResult VariationDistribution(const ModelPair& models,
                                  std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  VariationKind kind, const VariationMode& mode,
                                  const GridRequest& grid = {});

inline CurveResult CvDistribution(const ModelPair& models,
                                  std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  const VariationMode& mode,
                                  const GridRequest& grid = {}) {
  return VariationDistribution(models, p, p_post, y,
                               VariationKind::kCompensating, mode, grid);
}

inline CurveResult EvDistribution(const ModelPair& models,
                                  std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  const VariationMode& mode,
                                  const GridRequest& grid = {}) {
  return VariationDistribution(models, p, p_post, y,
                               VariationKind::kEquivalent, mode, grid);
}

// values[a * z_grid.size() + b] = Pr[w_a <= W, V <= z_b, ...].
struct JointGridResult {
  std::vector<double> w_grid;
  std::vector<double> z_grid;
  std::vector<double> values;
  nlohmann::json metadata;

  double at(std::size_t a, std::size_t b) const {
    return values[a * z_grid.size() + b];
  }
};

// Joint of the MMU at reference prices p' in the pre-change optimum and the
// CV.
JointGridResult MmuCvJoint(const ModelPair& models, std::span<const double> p,
                           std::span<const double> p_post, double y,
                           const VariationMode& mode,
                           std::span<const double> w_grid,
                           std::span<const double> z_grid);

// Joint of the MMU at reference prices p in the pre-change optimum and the
// EV.
JointGridResult MmuEvJoint(const ModelPair& models, std::span<const double> p,
                           std::span<const double> p_post, double y,
                           const VariationMode& mode,
                           std::span<const double> w_grid,
                           std::span<const double> z_grid);

void WriteJointCsv(std::ostream& os, const JointGridResult& joint);

struct MeanResult {
  double mean = 0.0;
  bool truncated = false;
  std::string warning;
};

// Mean through the tail integrals of the curve, with its recorded jumps
// handled exactly. Mass missing at the ends of the grid is put on the
// nearest grid end; that is reported as a truncation unless
// `allow_defective`.
MeanResult MeanFromCurve(const DistributionCurve& curve,
                         bool allow_defective = false);

struct MeanInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Bounds on the mean from two bound curves of the same kind.
MeanInterval MeanIntervalFromCurves(const DistributionCurve& lower,
                                    const DistributionCurve& upper);

}  // namespace nosdist

#endif  // NOSDIST_WELFARE_H_
