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

#ifndef NOSDIST_CLI_CONFIG_H_
#define NOSDIST_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosdist/rum_oracle.h"
#include "nosdist/welfare.h"

namespace nosdist::cli {

inline constexpr std::size_t kDefaultDraws = 1000000;
inline constexpr std::size_t kDefaultSimulationCount = 10000;
inline constexpr std::uint64_t kDefaultSeed = 1;

enum class Command { kSimulate, kEstimate, kBounds, kWelfare, kSwf };

std::string ToString(Command c);
Command CommandFromString(const std::string& s);

// Where probabilities come from. kLogit: closed-form logit choice
// probabilities, Monte Carlo transitions. kMonteCarlo: both from one draw
// table. kKernel: Nadaraya-Watson on the data files.
enum class ProbabilitySource { kLogit, kMonteCarlo, kKernel };

struct ModelSection {
  std::optional<UtilitySpec> utility;
  ProbabilitySource probability = ProbabilitySource::kLogit;
  std::size_t draws = kDefaultDraws;
  std::string cross_section;  // CSV path, kernel choice probabilities
  std::string panel;          // CSV path, kernel transitions
  std::vector<double> bandwidth;  // empty: rule of thumb

  bool operator==(const ModelSection&) const = default;
};

enum class Quantity {
  kLevel,
  kCompensatingVariation,
  kEquivalentVariation,
  kMmuCvJoint,
  kMmuEvJoint,
  kLevelDifference,
};

enum class AversionKind { kIdentity, kNegativeExponential };

struct AnalysisSection {
  std::vector<double> p;
  std::vector<double> p_post;
  double y = 0.0;
  // MMU reference prices; the family is read at income y.
  std::vector<double> reference_prices;
  std::vector<double> reference_prices_post;

  Quantity quantity = Quantity::kLevel;
  std::size_t k = 0;
  LevelMode level_mode;
  VariationMode variation_mode;

  std::vector<double> grid;  // explicit grid; empty means automatic
  std::size_t grid_size = kDefaultGridSize;
  std::vector<double> w_grid;
  std::vector<double> z_grid;

  std::size_t i = 0;
  std::size_t j = 0;
  double w = 0.0;
  double z = 0.0;
  QuadratureSettings quadrature;

  std::size_t count = kDefaultSimulationCount;
  double price_jitter = 0.0;

  std::string population;  // CSV path
  AversionKind aversion = AversionKind::kIdentity;
  double aversion_coefficient = 1.0;
  std::vector<double> delta_p;

  bool operator==(const AnalysisSection&) const = default;
};

struct RunConfig {
  Command command = Command::kWelfare;
  std::uint64_t seed = kDefaultSeed;
  ModelSection model;
  AnalysisSection analysis;
  std::string out = "out";

  bool operator==(const RunConfig&) const = default;
};

// Validates everything it can and throws ConfigError listing every problem.
// Relative data paths resolve against `base_dir`.
RunConfig ParseConfig(const nlohmann::json& j,
                      const std::filesystem::path& base_dir = {});
RunConfig ParseConfigFile(const std::filesystem::path& path);

// Canonical form with every default written out.
nlohmann::json EmitConfig(const RunConfig& config);

}  // namespace nosdist::cli

#endif  // NOSDIST_CLI_CONFIG_H_
