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

#include <algorithm>

#include "nosdist/errors.h"

namespace nosdist {
namespace {

void CheckQuery(const ChoiceProbabilityModel& model, std::span<const double> p,
                std::span<const double> p_post) {
  if (p.size() != model.size() || p_post.size() != model.size()) {
    throw InvalidArgument("bound query prices have the wrong dimension");
  }
}

// (max(p_i, p'_i), min(p_-i, p'_-i)): the budget at which choosing i implies
// choosing i under both p and p'.
std::vector<double> StayPrices(std::size_t i, std::span<const double> p,
                               std::span<const double> p_post) {
  std::vector<double> q(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    q[c] = c == i ? std::max(p[c], p_post[c]) : std::min(p[c], p_post[c]);
  }
  return q;
}

bool ZeroCell(std::size_t i, std::size_t j, std::span<const double> p,
              std::span<const double> p_post) {
  return i != j && p[i] >= p_post[i] && p[j] <= p_post[j];
}

ProbabilityInterval OffDiagonal(double pi, double pj) {
  ProbabilityInterval out;
  out.lower = std::max(pi + pj - 1.0, 0.0);
  out.upper = std::min(pi, pj);
  return out;
}

ProbabilityInterval Diagonal(double pi, double pi_post, double stay) {
  ProbabilityInterval out;
  out.upper = std::min(pi, pi_post);
  out.lower = std::clamp(std::max(pi + pi_post - 1.0, stay), 0.0, out.upper);
  return out;
}

}  // namespace

ProbabilityInterval TransitionBounds(const ChoiceProbabilityModel& model,
                                     std::size_t i, std::size_t j,
                                     std::span<const double> p,
                                     std::span<const double> p_post, double y) {
  CheckQuery(model, p, p_post);
  if (i >= model.size() || j >= model.size()) {
    throw InvalidArgument("bound cell index out of range");
  }
  if (ZeroCell(i, j, p, p_post)) return {0.0, 0.0};
  const std::vector<double> before = model.Probabilities(p, y);
  const std::vector<double> after = model.Probabilities(p_post, y);
  if (i != j) return OffDiagonal(before[i], after[j]);
  const double stay = model.Probability(i, StayPrices(i, p, p_post), y);
  return Diagonal(before[i], after[i], stay);
}

BoundMatrices TransitionBoundMatrices(const ChoiceProbabilityModel& model,
                                      std::span<const double> p,
                                      std::span<const double> p_post, double y) {
  CheckQuery(model, p, p_post);
  const std::size_t n = model.size();
  const std::vector<double> before = model.Probabilities(p, y);
  const std::vector<double> after = model.Probabilities(p_post, y);
  BoundMatrices out{TransitionMatrix(n), TransitionMatrix(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ProbabilityInterval cell{0.0, 0.0};
      if (i == j) {
        cell = Diagonal(before[i], after[i],
                        model.Probability(i, StayPrices(i, p, p_post), y));
      } else if (!ZeroCell(i, j, p, p_post)) {
        cell = OffDiagonal(before[i], after[j]);
      }
      out.lower.at(i, j) = cell.lower;
      out.upper.at(i, j) = cell.upper;
    }
  }
  return out;
}

EnvelopeTransitionModel::EnvelopeTransitionModel(ChoiceModelPtr model, Side side)
    : model_(std::move(model)), side_(side) {
  if (!model_) throw InvalidArgument("envelope needs a choice model");
}

TransitionMatrix EnvelopeTransitionModel::Probabilities(
    std::span<const double> p, std::span<const double> p_post,
    double income) const {
  BoundMatrices b = TransitionBoundMatrices(*model_, p, p_post, income);
  return side_ == Side::kLower ? std::move(b.lower) : std::move(b.upper);
}

double EnvelopeTransitionModel::Probability(std::size_t i, std::size_t j,
                                            std::span<const double> p,
                                            std::span<const double> p_post,
                                            double income) const {
  const ProbabilityInterval cell =
      TransitionBounds(*model_, i, j, p, p_post, income);
  return side_ == Side::kLower ? cell.lower : cell.upper;
}

nlohmann::json EnvelopeTransitionModel::Metadata() const {
  return {{"model", side_ == Side::kLower ? "envelope_lower" : "envelope_upper"},
          {"n", size()},
          {"note", "cellwise bounds, not a joint law; cells need not sum to 1"},
          {"inner", model_->Metadata()}};
}

EnvelopeModels MakeEnvelopeTransitionModels(ChoiceModelPtr model) {
  return {std::make_shared<EnvelopeTransitionModel>(
              model, EnvelopeTransitionModel::Side::kLower),
          std::make_shared<EnvelopeTransitionModel>(
              model, EnvelopeTransitionModel::Side::kUpper)};
}

}  // namespace nosdist
