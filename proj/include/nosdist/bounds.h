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

#ifndef NOSDIST_BOUNDS_H_
#define NOSDIST_BOUNDS_H_

#include <cstddef>
#include <span>

#include "json.hpp"
#include "nosdist/probability.h"

namespace nosdist {

struct ProbabilityInterval {
  double lower = 0.0;
  double upper = 1.0;

  bool Contains(double v) const { return lower <= v && v <= upper; }
  bool operator==(const ProbabilityInterval&) const = default;
};

// Sharp cellwise bounds on P_ij(p, p', y) from choice probabilities alone:
// Boole-Frechet bounds tightened by revealed preference.
ProbabilityInterval TransitionBounds(const ChoiceProbabilityModel& model,
                                     std::size_t i, std::size_t j,
                                     std::span<const double> p,
                                     std::span<const double> p_post, double y);

struct BoundMatrices {
  TransitionMatrix lower;
  TransitionMatrix upper;
};

// All n^2 intervals at once, sharing the choice-probability evaluations.
BoundMatrices TransitionBoundMatrices(const ChoiceProbabilityModel& model,
                                      std::span<const double> p,
                                      std::span<const double> p_post, double y);

// Serves one side of the cellwise bounds through the transition interface.
// The matrices are not a joint law and need not add up to one.
class EnvelopeTransitionModel : public TransitionProbabilityModel {
 public:
  enum class Side { kLower, kUpper };

  EnvelopeTransitionModel(ChoiceModelPtr model, Side side);

  std::size_t size() const override { return model_->size(); }
  TransitionMatrix Probabilities(std::span<const double> p,
                                 std::span<const double> p_post,
                                 double income) const override;
  double Probability(std::size_t i, std::size_t j, std::span<const double> p,
                     std::span<const double> p_post,
                     double income) const override;
  nlohmann::json Metadata() const override;

 private:
  ChoiceModelPtr model_;
  Side side_;
};

struct EnvelopeModels {
  TransitionModelPtr lower;
  TransitionModelPtr upper;
};

EnvelopeModels MakeEnvelopeTransitionModels(ChoiceModelPtr model);

}  // namespace nosdist

#endif  // NOSDIST_BOUNDS_H_
