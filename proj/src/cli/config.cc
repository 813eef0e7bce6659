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

#include "nosdist/cli/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "nosdist/errors.h"
#include "nosdist/numerics.h"

namespace nosdist::cli {
namespace {

using nlohmann::json;

const char* const kProbabilityNames[] = {"logit", "monte_carlo", "kernel"};
const char* const kQuantityNames[] = {"level",        "cv",           "ev",
                                      "mmu_cv_joint", "mmu_ev_joint", "level_difference"};
const char* const kAversionNames[] = {"identity", "negative_exponential"};

template <typename E, std::size_t N>
bool Lookup(const char* const (&names)[N], const std::string& s, E& out) {
  for (std::size_t i = 0; i < N; ++i) {
    if (s == names[i]) {
      out = static_cast<E>(i);
      return true;
    }
  }
  return false;
}

template <typename E, std::size_t N>
std::string Name(const char* const (&names)[N], E e) {
  return names[static_cast<std::size_t>(e)];
}

// Reads fields from one JSON object, recording problems instead of
// stopping at the first one.
class Reader {
 public:
  Reader(const json& obj, std::string where, std::vector<std::string>& problems)
      : obj_(obj), where_(std::move(where)), problems_(problems) {
    if (!obj_.is_object()) {
      problems_.push_back(where_ + " must be an object");
    }
  }

  bool Has(const std::string& key) const {
    return obj_.is_object() && obj_.contains(key);
  }

  template <typename T>
  bool Get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!Has(key)) return false;
    try {
      obj_.at(key).get_to(out);
      return true;
    } catch (const std::exception& e) {
      Problem(key, std::string("has the wrong type (") + e.what() + ")");
      return false;
    }
  }

  template <typename E, std::size_t N>
  void GetEnum(const std::string& key, const char* const (&names)[N], E& out) {
    std::string s;
    if (!Get(key, s)) return;
    if (!Lookup(names, s, out)) Problem(key, "has unknown value '" + s + "'");
  }

  const json* Child(const std::string& key) {
    seen_.insert(key);
    return Has(key) ? &obj_.at(key) : nullptr;
  }

  void Problem(const std::string& key, const std::string& what) {
    problems_.push_back(Field(key) + " " + what);
  }

  std::string Field(const std::string& key) const { return where_ + "." + key; }

  void RejectUnknown() {
    if (!obj_.is_object()) return;
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) Problem(item.key(), "is not a known field");
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::string ResolvePath(const std::string& path,
                        const std::filesystem::path& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (base_dir / p).lexically_normal().string();
}

bool NeedsTransition(const RunConfig& c) {
  const AnalysisSection& a = c.analysis;
  if (c.command == Command::kBounds) return false;
  if (c.command == Command::kEstimate) return !c.model.panel.empty();
  if (c.command != Command::kWelfare) return false;
  using L = LevelMode::Kind;
  using V = VariationMode::Kind;
  switch (a.quantity) {
    case Quantity::kLevel:
      return a.level_mode.kind == L::kJointWithPostChoice ||
             a.level_mode.kind == L::kConditionalOnPostChoice;
    case Quantity::kLevelDifference:
      return true;
    default:
      return a.variation_mode.kind == V::kJoint ||
             a.variation_mode.kind == V::kConditionalOnBoth ||
             a.variation_mode.kind == V::kConditionalOnPost;
  }
}

void CheckLength(const std::vector<double>& v, const std::string& field,
                 std::size_t n, std::vector<std::string>& problems) {
  if (!v.empty() && v.size() != n) {
    problems.push_back(field + " has length " + std::to_string(v.size()) +
                       " but analysis.p has length " + std::to_string(n));
  }
}

void CheckFinite(const std::vector<double>& v, const std::string& field,
                 std::vector<std::string>& problems) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      problems.push_back(field + " has a non-finite entry");
      return;
    }
  }
}

void CheckGrid(const std::vector<double>& v, const std::string& field,
               std::vector<std::string>& problems) {
  CheckFinite(v, field, problems);
  if (!StrictlyIncreasing(v)) {
    problems.push_back(field + " must be strictly increasing");
  }
}

void Require(bool ok, const std::string& field, const std::string& why,
             std::vector<std::string>& problems) {
  if (!ok) problems.push_back(field + " is required " + why);
}

void Validate(const RunConfig& c, std::vector<std::string>& problems) {
  const ModelSection& m = c.model;
  const AnalysisSection& a = c.analysis;
  const std::string for_cmd = "for " + ToString(c.command);
  const bool swf = c.command == Command::kSwf;

  if (!swf) Require(!a.p.empty(), "analysis.p", for_cmd, problems);
  const std::size_t n =
      !a.p.empty() ? a.p.size() : (m.utility ? m.utility->size() : 0);
  if (n > 0) {
    CheckLength(a.p_post, "analysis.p_post", n, problems);
    CheckLength(a.reference_prices, "analysis.reference_prices", n, problems);
    CheckLength(a.reference_prices_post, "analysis.reference_prices_post", n,
                problems);
    CheckLength(a.delta_p, "analysis.delta_p", n, problems);
    if (m.utility && m.utility->size() != n) {
      problems.push_back("model.utility has " +
                         std::to_string(m.utility->size()) +
                         " alternatives but analysis.p has length " +
                         std::to_string(n));
    }
    auto index = [&](std::size_t v, const std::string& field) {
      if (v >= n) problems.push_back(field + " is out of range");
    };
    index(a.k, "analysis.k");
    index(a.i, "analysis.i");
    index(a.j, "analysis.j");
    index(a.level_mode.j, "analysis.level_mode.j");
    index(a.variation_mode.i, "analysis.variation_mode.i");
    index(a.variation_mode.j, "analysis.variation_mode.j");
  }
  CheckFinite(a.p, "analysis.p", problems);
  CheckFinite(a.p_post, "analysis.p_post", problems);
  CheckFinite(a.reference_prices, "analysis.reference_prices", problems);
  CheckFinite(a.reference_prices_post, "analysis.reference_prices_post",
              problems);
  CheckFinite(a.delta_p, "analysis.delta_p", problems);
  if (!std::isfinite(a.y)) problems.push_back("analysis.y must be finite");
  CheckGrid(a.grid, "analysis.grid", problems);
  CheckGrid(a.w_grid, "analysis.w_grid", problems);
  CheckGrid(a.z_grid, "analysis.z_grid", problems);
  if (a.grid.empty() && a.grid_size < 2) {
    problems.push_back("analysis.grid_size must be at least 2");
  }
  if (m.draws == 0) problems.push_back("model.draws must be positive");
  for (double h : m.bandwidth) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      problems.push_back("model.bandwidth entries must be positive");
      break;
    }
  }
  if (a.quadrature.cells == 0 || a.quadrature.max_cells == 0 ||
      !(a.quadrature.step >= 0.0)) {
    problems.push_back("analysis.quadrature needs cells > 0 and step >= 0");
  }
  if (a.price_jitter < 0.0) {
    problems.push_back("analysis.price_jitter must be non-negative");
  }
  if (a.aversion == AversionKind::kNegativeExponential &&
      !(a.aversion_coefficient > 0.0)) {
    problems.push_back("analysis.aversion.coefficient must be positive");
  }

  // What each command needs.
  const bool uses_model = c.command != Command::kSimulate &&
                          c.command != Command::kEstimate;
  if (c.command == Command::kSimulate) {
    Require(m.utility.has_value(), "model.utility", for_cmd, problems);
    if (a.count == 0) problems.push_back("analysis.count must be positive");
  }
  if (c.command == Command::kEstimate) {
    if (m.cross_section.empty() && m.panel.empty()) {
      problems.push_back(
          "model.cross_section or model.panel is required for estimate");
    }
    if (!m.panel.empty()) {
      Require(!a.p_post.empty(), "analysis.p_post", "with model.panel", problems);
    }
  }
  if (uses_model) {
    switch (m.probability) {
      case ProbabilitySource::kLogit:
        if (!m.utility ||
            !std::holds_alternative<AdditiveLogit>(m.utility->form)) {
          problems.push_back(
              "model.utility must be additive_logit for probability 'logit'");
        }
        break;
      case ProbabilitySource::kMonteCarlo:
        Require(m.utility.has_value(), "model.utility",
                "for probability 'monte_carlo'", problems);
        break;
      case ProbabilitySource::kKernel:
        Require(!m.cross_section.empty(), "model.cross_section",
                "for probability 'kernel'", problems);
        if (NeedsTransition(c)) {
          Require(!m.panel.empty(), "model.panel",
                  "for this analysis with probability 'kernel'", problems);
        }
        break;
    }
  }
  if (c.command == Command::kBounds) {
    Require(!a.p_post.empty(), "analysis.p_post", for_cmd, problems);
  }
  if (c.command == Command::kWelfare) {
    const bool level = a.quantity == Quantity::kLevel ||
                       a.quantity == Quantity::kLevelDifference;
    if (level) {
      Require(!a.reference_prices.empty(), "analysis.reference_prices",
              "for level quantities", problems);
    }
    if (a.quantity == Quantity::kLevelDifference) {
      Require(!a.reference_prices_post.empty(),
              "analysis.reference_prices_post", "for level_difference",
              problems);
    }
    if (a.quantity != Quantity::kLevel || NeedsTransition(c)) {
      Require(!a.p_post.empty(), "analysis.p_post", "for this quantity",
              problems);
    }
    if (a.quantity == Quantity::kMmuCvJoint ||
        a.quantity == Quantity::kMmuEvJoint) {
      Require(!a.w_grid.empty(), "analysis.w_grid", "for joint grids", problems);
      Require(!a.z_grid.empty(), "analysis.z_grid", "for joint grids", problems);
    }
  }
  if (swf) {
    Require(!a.population.empty(), "analysis.population", for_cmd, problems);
    Require(!a.reference_prices.empty(), "analysis.reference_prices", for_cmd,
            problems);
  }

  // Referenced files must exist.
  auto exists = [&](const std::string& path, const std::string& field) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      problems.push_back(field + " refers to missing file '" + path + "'");
    }
  };
  if (c.command != Command::kSimulate) {
    exists(m.cross_section, "model.cross_section");
    exists(m.panel, "model.panel");
  }
  if (swf) exists(a.population, "analysis.population");
}

}  // namespace

std::string ToString(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kEstimate: return "estimate";
    case Command::kBounds: return "bounds";
    case Command::kWelfare: return "welfare";
    case Command::kSwf: return "swf";
  }
  return "?";
}

Command CommandFromString(const std::string& s) {
  for (Command c : {Command::kSimulate, Command::kEstimate, Command::kBounds,
                    Command::kWelfare, Command::kSwf}) {
    if (ToString(c) == s) return c;
  }
  throw InvalidArgument("unknown command: " + s);
}

RunConfig ParseConfig(const json& j, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  RunConfig c;
  Reader top(j, "config", problems);

  std::string command;
  if (top.Get("command", command)) {
    try {
      c.command = CommandFromString(command);
    } catch (const InvalidArgument&) {
      top.Problem("command", "has unknown value '" + command + "'");
    }
  } else if (!top.Has("command")) {
    top.Problem("command", "is missing");
  }
  top.Get("seed", c.seed);
  top.Get("out", c.out);

  static const json kEmpty = json::object();
  const json* model = top.Child("model");
  Reader mr(model ? *model : kEmpty, "model", problems);
  if (const json* u = mr.Child("utility"); u && !u->is_null()) {
    try {
      UtilitySpec spec = u->get<UtilitySpec>();
      spec.Validate();
      c.model.utility = std::move(spec);
    } catch (const std::exception& e) {
      mr.Problem("utility", std::string("is invalid: ") + e.what());
    }
  }
  mr.GetEnum("probability", kProbabilityNames, c.model.probability);
  mr.Get("draws", c.model.draws);
  mr.Get("cross_section", c.model.cross_section);
  mr.Get("panel", c.model.panel);
  mr.Get("bandwidth", c.model.bandwidth);
  mr.RejectUnknown();

  const json* analysis = top.Child("analysis");
  Reader ar(analysis ? *analysis : kEmpty, "analysis", problems);
  AnalysisSection& a = c.analysis;
  ar.Get("p", a.p);
  ar.Get("p_post", a.p_post);
  ar.Get("y", a.y);
  ar.Get("reference_prices", a.reference_prices);
  ar.Get("reference_prices_post", a.reference_prices_post);
  ar.GetEnum("quantity", kQuantityNames, a.quantity);
  ar.Get("k", a.k);
  if (const json* lm = ar.Child("level_mode")) {
    try {
      a.level_mode = LevelModeFromJson(*lm);
    } catch (const std::exception& e) {
      ar.Problem("level_mode", std::string("is invalid: ") + e.what());
    }
  }
  if (const json* vm = ar.Child("variation_mode")) {
    try {
      a.variation_mode = VariationModeFromJson(*vm);
    } catch (const std::exception& e) {
      ar.Problem("variation_mode", std::string("is invalid: ") + e.what());
    }
  }
  ar.Get("grid", a.grid);
  ar.Get("grid_size", a.grid_size);
  ar.Get("w_grid", a.w_grid);
  ar.Get("z_grid", a.z_grid);
  ar.Get("i", a.i);
  ar.Get("j", a.j);
  ar.Get("w", a.w);
  ar.Get("z", a.z);
  if (const json* q = ar.Child("quadrature")) {
    Reader qr(*q, "analysis.quadrature", problems);
    qr.Get("step", a.quadrature.step);
    qr.Get("cells", a.quadrature.cells);
    qr.Get("max_cells", a.quadrature.max_cells);
    qr.RejectUnknown();
  }
  ar.Get("count", a.count);
  ar.Get("price_jitter", a.price_jitter);
  ar.Get("population", a.population);
  if (const json* av = ar.Child("aversion")) {
    Reader vr(*av, "analysis.aversion", problems);
    vr.GetEnum("kind", kAversionNames, a.aversion);
    vr.Get("coefficient", a.aversion_coefficient);
    vr.RejectUnknown();
  }
  ar.Get("delta_p", a.delta_p);
  ar.RejectUnknown();
  top.RejectUnknown();

  c.model.cross_section = ResolvePath(c.model.cross_section, base_dir);
  c.model.panel = ResolvePath(c.model.panel, base_dir);
  a.population = ResolvePath(a.population, base_dir);

  Validate(c, problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

RunConfig ParseConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path.string() + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"config file is not valid JSON: " + std::string(e.what())});
  }
  return ParseConfig(j, path.parent_path());
}

json EmitConfig(const RunConfig& c) {
  const ModelSection& m = c.model;
  const AnalysisSection& a = c.analysis;
  json model = {{"probability", Name(kProbabilityNames, m.probability)},
                {"draws", m.draws},
                {"cross_section", m.cross_section},
                {"panel", m.panel},
                {"bandwidth", m.bandwidth}};
  model["utility"] = m.utility ? json(*m.utility) : json(nullptr);
  json analysis = {
      {"p", a.p},
      {"p_post", a.p_post},
      {"y", a.y},
      {"reference_prices", a.reference_prices},
      {"reference_prices_post", a.reference_prices_post},
      {"quantity", Name(kQuantityNames, a.quantity)},
      {"k", a.k},
      {"level_mode", ToJson(a.level_mode)},
      {"variation_mode", ToJson(a.variation_mode)},
      {"grid", a.grid},
      {"grid_size", a.grid_size},
      {"w_grid", a.w_grid},
      {"z_grid", a.z_grid},
      {"i", a.i},
      {"j", a.j},
      {"w", a.w},
      {"z", a.z},
      {"quadrature",
       {{"step", a.quadrature.step},
        {"cells", a.quadrature.cells},
        {"max_cells", a.quadrature.max_cells}}},
      {"count", a.count},
      {"price_jitter", a.price_jitter},
      {"population", a.population},
      {"aversion",
       {{"kind", Name(kAversionNames, a.aversion)},
        {"coefficient", a.aversion_coefficient}}},
      {"delta_p", a.delta_p}};
  return {{"command", ToString(c.command)},
          {"seed", c.seed},
          {"out", c.out},
          {"model", model},
          {"analysis", analysis}};
}

}  // namespace nosdist::cli
