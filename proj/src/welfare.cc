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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>

#include "nosdist/errors.h"
#include "nosdist/io.h"

namespace nosdist {
namespace {

using ValueFn = std::function<double(double)>;

// Slack on probabilities assembled from floating-point sums before they are
// clipped back into [0, 1].
constexpr double kTailTolerance = 1e-9;
constexpr double kNegativeRoundOff = 1e-6;

NOSFamily FamilyAt(const NOSFamily& family, double y) {
  return y == family.income() ? family : family.AtIncome(y);
}

void CheckSizes(std::size_t n, std::span<const double> a,
                std::span<const double> b) {
  if (a.size() != n || b.size() != n) {
    throw InvalidArgument("price vectors have the wrong dimension");
  }
}

const TransitionProbabilityModel& NeedTransition(const ModelPair& models) {
  if (models.transition == nullptr) {
    throw InvalidArgument("this mode needs a transition probability model");
  }
  return *models.transition;
}

const ChoiceProbabilityModel& NeedChoice(const ModelPair& models) {
  if (models.choice == nullptr) {
    throw InvalidArgument("this mode needs a choice probability model");
  }
  return *models.choice;
}

double Conditioning(double probability, const std::string& event) {
  if (!(probability >= kDegenerateConditioning)) {
    throw DegenerateConditioning("conditioning probability of " + event +
                                 " is below 1e-12");
  }
  return probability;
}

// Smallest z with base <= shift + z in exact arithmetic: the difference is
// rounded once, so equal prices switch on at exactly zero.
double SwitchOn(double base, double shift) {
  const double z = base - shift;
  if (!std::isfinite(z)) throw InvalidArgument("price difference not finite");
  return z;
}

std::vector<double> MinWithVirtual(std::span<const double> prices,
                                   const NOSFamily& family, double w) {
  std::vector<double> out = family.VirtualPrices(w);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::min(prices[c], out[c]);
  return out;
}

double Clip(double v) { return std::clamp(v, 0.0, 1.0); }

// Walks down from `start` with doubling steps until the curve stops moving.
double LowerTail(const ValueFn& value, double start) {
  double a = start;
  double va = value(a);
  double step = 1.0;
  for (int k = 0; k < 60; ++k, step *= 2.0) {
    const double b = a - step;
    const double vb = value(b);
    if (std::abs(vb - va) <= kTailTolerance) return b;
    a = b;
    va = vb;
  }
  throw IntegrationDomainError("lower tail of the curve does not settle");
}

std::vector<double> AutoGrid(double lo, double hi, std::size_t size,
                             const std::vector<double>& jumps) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument(
        "support is unbounded here; supply explicit grid points");
  }
  double pad = 0.1 * (hi - lo);
  if (!(pad > 0.0)) pad = 0.1 * std::max(1.0, std::abs(hi));
  std::vector<double> grid = Linspace(lo - pad, hi + pad, std::max<std::size_t>(size, 2));
  std::vector<double> extra;
  for (double j : jumps) {
    if (!std::isfinite(j)) continue;
    extra.push_back(j);
    extra.push_back(std::nextafter(j, -kInf));
    extra.push_back(std::nextafter(j, kInf));
  }
  return MergeGrid(grid, extra);
}

std::vector<double> ResolveGrid(const GridRequest& request, double lo, double hi,
                                const std::vector<double>& jumps) {
  if (!request.points.empty()) {
    if (!StrictlyIncreasing(request.points)) {
      throw InvalidArgument("grid must be strictly increasing");
    }
    return request.points;
  }
  return AutoGrid(lo, hi, request.size, jumps);
}

struct JumpList {
  std::map<double, double> jumps;

  void Add(double location, double size) {
    if (std::isfinite(location) && size > 0.0) jumps[location] += size;
  }
};

CurveResult FinishCurve(std::vector<double> grid, std::vector<double> values,
                        CurveKind kind, const JumpList& jumps,
                        const std::string& axis, nlohmann::json metadata) {
  std::size_t adjusted = 0;
  double largest = 0.0;
  for (double& v : values) v = Clip(v);
  for (std::size_t g = 1; g < values.size(); ++g) {
    const double prev = values[g - 1];
    const bool bad = kind == CurveKind::kCcdf ? values[g] > prev : values[g] < prev;
    if (bad) {
      largest = std::max(largest, std::abs(values[g] - prev));
      values[g] = prev;
      ++adjusted;
    }
  }
  std::vector<MassPoint> masses;
  for (const auto& [loc, size] : jumps.jumps) {
    if (loc < grid.front() || loc > grid.back()) continue;
    masses.push_back({loc, std::min(size, 1.0)});
  }
  metadata["kind"] = ToString(kind);
  metadata["axis"] = axis;
  metadata["grid_size"] = grid.size();
  metadata["monotone_adjustments"] = adjusted;
  metadata["largest_monotone_adjustment"] = largest;
  nlohmann::json mj = nlohmann::json::array();
  for (const MassPoint& m : masses) {
    mj.push_back({{"location", m.location}, {"jump", m.jump}});
  }
  metadata["mass_points"] = std::move(mj);
  return {DistributionCurve(std::move(grid), std::move(values), kind,
                            std::move(masses), axis),
          std::move(metadata)};
}

nlohmann::json ModelsMetadata(const ModelPair& models) {
  nlohmann::json j = nlohmann::json::object();
  if (models.transition != nullptr) j["transition"] = models.transition->Metadata();
  if (models.choice != nullptr) j["choice"] = models.choice->Metadata();
  return j;
}

// Value of a CV or EV distribution at z, plus the per-alternative terms whose
// indicators switch on at the recorded jump locations.
class VariationEvaluator {
 public:
  VariationEvaluator(const ModelPair& models, std::span<const double> p,
                     std::span<const double> p_post, double y,
                     VariationKind kind, const VariationMode& mode)
      : models_(models),
        p_(p.begin(), p.end()),
        pp_(p_post.begin(), p_post.end()),
        y_(y),
        kind_(kind),
        mode_(mode) {
    n_ = p_.size();
    if (n_ == 0 || pp_.size() != n_) {
      throw InvalidArgument("price vectors differ in length");
    }
    if (mode_.i >= n_ || mode_.j >= n_) {
      throw InvalidArgument("mode index out of range");
    }
    using K = VariationMode::Kind;
    const bool cv = kind_ == VariationKind::kCompensating;
    for (std::size_t c = 0; c < n_; ++c) {
      switch_.push_back(cv ? SwitchOn(p_[c], pp_[c]) : SwitchOn(pp_[c], p_[c]));
    }
    switch (mode_.kind) {
      case K::kJoint:
        NeedTransition(models_);
        denominator_ = 1.0;
        break;
      case K::kConditionalOnBoth:
        denominator_ = Conditioning(
            NeedTransition(models_).Probability(mode_.i, mode_.j, p_, pp_, y_),
            "the transition cell");
        break;
      case K::kConditionalOnPre:
        if (!cv) NeedTransition(models_);
        denominator_ = Conditioning(
            NeedChoice(models_).Probability(mode_.i, p_, y_), "the pre choice");
        break;
      case K::kConditionalOnPost:
        if (cv) NeedTransition(models_);
        denominator_ = Conditioning(
            NeedChoice(models_).Probability(mode_.j, pp_, y_), "the post choice");
        break;
      case K::kMarginal:
        NeedChoice(models_);
        denominator_ = 1.0;
        break;
    }
  }

  std::size_t size() const { return n_; }
  double Switch(std::size_t c) const { return switch_[c]; }

  // Alternatives whose indicator enters the formula.
  std::vector<std::size_t> SwitchingTerms() const {
    using K = VariationMode::Kind;
    const bool cv = kind_ == VariationKind::kCompensating;
    switch (mode_.kind) {
      case K::kJoint:
      case K::kConditionalOnBoth:
        return {cv ? mode_.i : mode_.j};
      case K::kConditionalOnPre:
        if (cv) return {mode_.i};
        break;
      case K::kConditionalOnPost:
        if (!cv) return {mode_.j};
        break;
      case K::kMarginal:
        break;
    }
    std::vector<std::size_t> all(n_);
    for (std::size_t c = 0; c < n_; ++c) all[c] = c;
    return all;
  }

  bool On(std::size_t c, double z) const {
    return z >= switch_[c];
  }

  // Term for switching alternative c at z (indicator excluded), already
  // divided by the conditioning probability.
  std::vector<double> Terms(double z) const {
    using K = VariationMode::Kind;
    const bool cv = kind_ == VariationKind::kCompensating;
    std::vector<double> q(n_);
    for (std::size_t c = 0; c < n_; ++c) {
      q[c] = cv ? std::min(p_[c], pp_[c] + z) : std::min(p_[c] + z, pp_[c]);
    }
    std::vector<double> terms(n_, 0.0);
    const std::span<const double> before = cv ? std::span<const double>(q) : p_;
    const std::span<const double> after = cv ? std::span<const double>(pp_) : q;
    switch (mode_.kind) {
      case K::kJoint:
      case K::kConditionalOnBoth: {
        const std::size_t c = cv ? mode_.i : mode_.j;
        terms[c] = models_.transition->Probability(mode_.i, mode_.j, before,
                                                   after, y_);
        break;
      }
      case K::kConditionalOnPre:
        if (cv) {
          terms[mode_.i] = models_.choice->Probability(mode_.i, q, y_);
        } else {
          const TransitionMatrix m = models_.transition->Probabilities(before, after, y_);
          for (std::size_t j = 0; j < n_; ++j) terms[j] = m(mode_.i, j);
        }
        break;
      case K::kConditionalOnPost:
        if (cv) {
          const TransitionMatrix m = models_.transition->Probabilities(before, after, y_);
          for (std::size_t i = 0; i < n_; ++i) terms[i] = m(i, mode_.j);
        } else {
          terms[mode_.j] = models_.choice->Probability(mode_.j, q, y_);
        }
        break;
      case K::kMarginal:
        terms = models_.choice->Probabilities(q, y_);
        break;
    }
    for (double& t : terms) t /= denominator_;
    return terms;
  }

  double Value(double z) const {
    const std::vector<std::size_t> active = SwitchingTerms();
    bool any = false;
    for (std::size_t c : active) any = any || On(c, z);
    if (!any) return 0.0;
    const std::vector<double> terms = Terms(z);
    double v = 0.0;
    for (std::size_t c : active) {
      if (On(c, z)) v += terms[c];
    }
    return v;
  }

  nlohmann::json Metadata() const {
    return {{"measure", kind_ == VariationKind::kCompensating ? "cv" : "ev"},
            {"mode", ToJson(mode_)},
            {"models", ModelsMetadata(models_)}};
  }

 private:
  ModelPair models_;
  std::vector<double> p_;
  std::vector<double> pp_;
  double y_;
  VariationKind kind_;
  VariationMode mode_;
  std::size_t n_ = 0;
  std::vector<double> switch_;
  double denominator_ = 1.0;
};

// Contribution of one grid interval to the integral of a curve, with a jump
// of size `jump` at `loc` inside it.
double CellIntegral(double g0, double g1, double v0, double v1, CurveKind kind,
                    double jump, double loc) {
  const double width = g1 - g0;
  if (jump == 0.0) return 0.5 * width * (v0 + v1);
  if (kind == CurveKind::kCcdf) {
    const double cont = (v1 - v0) + jump;
    return width * (v0 + 0.5 * cont) - jump * (g1 - loc);
  }
  const double cont = (v1 - v0) - jump;
  return width * (v0 + 0.5 * cont) + jump * (g1 - loc);
}

// Integral of the curve over its grid. A CCDF jump at loc falls in the
// interval [g_m, g_m+1); a CDF jump in (g_m, g_m+1].
double CurveIntegral(const DistributionCurve& curve) {
  const auto& g = curve.grid();
  const auto& v = curve.values();
  std::vector<double> jump(g.size(), 0.0);
  std::vector<double> loc(g.size(), 0.0);
  for (const MassPoint& m : curve.mass_points()) {
    std::size_t cell;
    if (curve.kind() == CurveKind::kCcdf) {
      const auto it = std::upper_bound(g.begin(), g.end(), m.location);
      if (it == g.end()) continue;
      cell = static_cast<std::size_t>(it - g.begin()) - 1;
    } else {
      const auto it = std::lower_bound(g.begin(), g.end(), m.location);
      if (it == g.begin()) continue;
      cell = static_cast<std::size_t>(it - g.begin()) - 1;
    }
    jump[cell] += m.jump;
    loc[cell] = m.location;
  }
  double total = 0.0;
  for (std::size_t m = 0; m + 1 < g.size(); ++m) {
    total += CellIntegral(g[m], g[m + 1], v[m], v[m + 1], curve.kind(), jump[m],
                          loc[m]);
  }
  return total;
}

double JumpAt(const DistributionCurve& curve, double location) {
  double out = 0.0;
  for (const MassPoint& m : curve.mass_points()) {
    if (m.location == location) out += m.jump;
  }
  return out;
}

// True when the end of the curve is still moving over the outer 5% of the
// grid.
bool Trending(const DistributionCurve& curve, bool at_right) {
  const auto& v = curve.values();
  const std::size_t span = std::max<std::size_t>(1, v.size() / 20);
  if (v.size() < 2) return false;
  const double outer = at_right ? v.back() : v.front();
  const double inner = at_right ? v[v.size() - 1 - std::min(span, v.size() - 1)]
                                : v[std::min(span, v.size() - 1)];
  return std::abs(outer - inner) > 1e-12;
}

}  // namespace

std::string ToString(const LevelMode& mode) {
  switch (mode.kind) {
    case LevelMode::Kind::kJointWithPostChoice:
      return "joint_with_post_choice";
    case LevelMode::Kind::kConditionalOnPostChoice:
      return "conditional_on_post_choice";
    case LevelMode::Kind::kConditionalOnOwnChoice:
      return "conditional_on_own_choice";
    case LevelMode::Kind::kMarginalAtBundle:
      return "marginal_at_bundle";
    case LevelMode::Kind::kMarginalAtOptimum:
      return "marginal_at_optimum";
  }
  return "unknown";
}

std::string ToString(const VariationMode& mode) {
  switch (mode.kind) {
    case VariationMode::Kind::kJoint:
      return "joint";
    case VariationMode::Kind::kConditionalOnBoth:
      return "conditional_on_both";
    case VariationMode::Kind::kConditionalOnPre:
      return "conditional_on_pre";
    case VariationMode::Kind::kConditionalOnPost:
      return "conditional_on_post";
    case VariationMode::Kind::kMarginal:
      return "marginal";
  }
  return "unknown";
}

nlohmann::json ToJson(const LevelMode& mode) {
  nlohmann::json j = {{"kind", ToString(mode)}};
  if (mode.kind == LevelMode::Kind::kJointWithPostChoice ||
      mode.kind == LevelMode::Kind::kConditionalOnPostChoice) {
    j["j"] = mode.j;
  }
  return j;
}

nlohmann::json ToJson(const VariationMode& mode) {
  nlohmann::json j = {{"kind", ToString(mode)}};
  switch (mode.kind) {
    case VariationMode::Kind::kJoint:
    case VariationMode::Kind::kConditionalOnBoth:
      j["i"] = mode.i;
      j["j"] = mode.j;
      break;
    case VariationMode::Kind::kConditionalOnPre:
      j["i"] = mode.i;
      break;
    case VariationMode::Kind::kConditionalOnPost:
      j["j"] = mode.j;
      break;
    case VariationMode::Kind::kMarginal:
      break;
  }
  return j;
}

LevelMode LevelModeFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::size_t idx = j.value("j", std::size_t{0});
  if (kind == "joint_with_post_choice") return LevelMode::JointWithPostChoice(idx);
  if (kind == "conditional_on_post_choice") {
    return LevelMode::ConditionalOnPostChoice(idx);
  }
  if (kind == "conditional_on_own_choice") return LevelMode::ConditionalOnOwnChoice();
  if (kind == "marginal_at_bundle") return LevelMode::MarginalAtBundle();
  if (kind == "marginal_at_optimum") return LevelMode::MarginalAtOptimum();
  throw InvalidArgument("unknown level mode: " + kind);
}

VariationMode VariationModeFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::size_t i = j.value("i", std::size_t{0});
  const std::size_t jj = j.value("j", std::size_t{0});
  if (kind == "joint") return VariationMode::Joint(i, jj);
  if (kind == "conditional_on_both") return VariationMode::ConditionalOnBoth(i, jj);
  if (kind == "conditional_on_pre") return VariationMode::ConditionalOnPre(i);
  if (kind == "conditional_on_post") return VariationMode::ConditionalOnPost(jj);
  if (kind == "marginal") return VariationMode::Marginal();
  throw InvalidArgument("unknown variation mode: " + kind);
}

CurveResult LevelDistribution(const ModelPair& models, const NOSFamily& family_in,
                              std::size_t k, double p_k,
                              std::span<const double> prices, double y,
                              const LevelMode& mode, const GridRequest& grid) {
  const NOSFamily family = FamilyAt(family_in, y);
  const std::size_t n = family.size();
  if (prices.size() != n) throw InvalidArgument("prices have the wrong dimension");
  if (k >= n || mode.j >= n) throw InvalidArgument("bundle index out of range");
  if (!std::isfinite(p_k)) throw InvalidArgument("bundle price not finite");

  using K = LevelMode::Kind;
  const std::vector<double> actual(prices.begin(), prices.end());
  std::vector<double> own = actual;
  own[k] = p_k;
  const bool at_optimum = mode.kind == K::kMarginalAtOptimum;
  const std::vector<double>& base = at_optimum ? actual : own;

  // (p_k, p~_-k(w))
  const auto bundle_prices = [&](double w) {
    std::vector<double> q = family.VirtualPrices(w);
    q[k] = p_k;
    return q;
  };
  const auto holds = [&](std::size_t c, double w) {
    return base[c] <= family.VirtualPrice(c, w);
  };

  const TransitionProbabilityModel* trans = nullptr;
  const ChoiceProbabilityModel* choice = nullptr;
  double denom = 1.0;
  switch (mode.kind) {
    case K::kJointWithPostChoice:
      trans = &NeedTransition(models);
      break;
    case K::kConditionalOnPostChoice:
      trans = &NeedTransition(models);
      denom = Conditioning(NeedChoice(models).Probability(mode.j, actual, y),
                           "the post choice");
      break;
    case K::kConditionalOnOwnChoice:
      choice = &NeedChoice(models);
      denom = Conditioning(choice->Probability(k, own, y), "the own choice");
      break;
    case K::kMarginalAtBundle:
    case K::kMarginalAtOptimum:
      choice = &NeedChoice(models);
      break;
  }

  // Per-alternative terms at w, indicators excluded.
  const auto terms = [&](double w) {
    std::vector<double> t(n, 0.0);
    switch (mode.kind) {
      case K::kJointWithPostChoice:
      case K::kConditionalOnPostChoice:
        t[k] = trans->Probability(mode.j, k, actual, bundle_prices(w), y) / denom;
        break;
      case K::kConditionalOnOwnChoice:
        t[k] = choice->Probability(k, MinWithVirtual(own, family, w), y) / denom;
        break;
      case K::kMarginalAtBundle:
        t[k] = choice->Probability(k, bundle_prices(w), y);
        break;
      case K::kMarginalAtOptimum:
        t = choice->Probabilities(MinWithVirtual(actual, family, w), y);
        break;
    }
    return t;
  };
  const ValueFn value = [&](double w) {
    if (!at_optimum) return holds(k, w) ? terms(w)[k] : 0.0;
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) any = any || holds(c, w);
    if (!any) return 0.0;
    const std::vector<double> t = terms(w);
    double v = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (holds(c, w)) v += t[c];
    }
    return v;
  };

  std::vector<double> thresholds;
  for (std::size_t c = 0; c < n; ++c) {
    thresholds.push_back(family.Threshold(c, base[c]));
  }
  const double w_k = thresholds[k];
  const double w_min = *std::min_element(thresholds.begin(), thresholds.end());
  const double w_max = *std::max_element(thresholds.begin(), thresholds.end());

  JumpList jumps;
  if (at_optimum) {
    for (std::size_t c = 0; c < n; ++c) {
      if (std::isfinite(thresholds[c])) {
        jumps.Add(thresholds[c], terms(thresholds[c])[c]);
      }
    }
  } else if (std::isfinite(w_k)) {
    jumps.Add(w_k, value(w_k));
  }

  std::vector<double> points;
  if (grid.points.empty()) {
    double lo = w_min;
    double hi = at_optimum ? w_max : w_k;
    const bool bounded_below =
        at_optimum || mode.kind == K::kConditionalOnOwnChoice;
    if (!bounded_below && std::isfinite(hi)) {
      lo = LowerTail(value, std::min(hi, w_min));
    }
    std::vector<double> marks{w_min};
    for (const auto& [loc, size] : jumps.jumps) marks.push_back(loc);
    points = AutoGrid(lo, hi, grid.size, marks);
  } else {
    points = ResolveGrid(grid, 0.0, 0.0, {});
  }
  std::vector<double> values(points.size());
  for (std::size_t g = 0; g < points.size(); ++g) values[g] = value(points[g]);

  nlohmann::json meta = {{"measure", "level"},
                         {"mode", ToJson(mode)},
                         {"bundle", k},
                         {"bundle_price", p_k},
                         {"income", y},
                         {"family", family.label()},
                         {"models", ModelsMetadata(models)}};
  if (family.mmu()) meta["reference_prices"] = family.mmu()->reference_prices;
  return FinishCurve(std::move(points), std::move(values), CurveKind::kCcdf,
                     jumps, "w", std::move(meta));
}

double JointBeforeAfter(const TransitionProbabilityModel& trans,
                        const NOSFamily& family0_in, const NOSFamily& family1_in,
                        std::span<const double> p,
                        std::span<const double> p_post, double y,
                        std::size_t i, std::size_t j, double w, double z) {
  const std::size_t n = trans.size();
  CheckSizes(n, p, p_post);
  if (i >= n || j >= n) throw InvalidArgument("cell index out of range");
  const NOSFamily family0 = FamilyAt(family0_in, y);
  const NOSFamily family1 = FamilyAt(family1_in, y);
  if (!(p[i] <= family0.VirtualPrice(i, w))) return 0.0;
  if (!(p_post[j] <= family1.VirtualPrice(j, z))) return 0.0;
  return Clip(trans.Probability(i, j, MinWithVirtual(p, family0, w),
                                MinWithVirtual(p_post, family1, z), y));
}

nlohmann::json QuadratureResult::Metadata() const {
  return {{"scheme", "cellwise_difference_midpoint"},
          {"lower", lower},
          {"upper", upper},
          {"step", step},
          {"cells", cells}};
}

QuadratureResult LevelDifferenceJoint(const TransitionProbabilityModel& trans,
                                      const NOSFamily& family0_in,
                                      const NOSFamily& family1_in,
                                      std::span<const double> p,
                                      std::span<const double> p_post, double y,
                                      std::size_t i, std::size_t j, double w,
                                      double z,
                                      const QuadratureSettings& settings) {
  const std::size_t n = trans.size();
  CheckSizes(n, p, p_post);
  if (i >= n || j >= n) throw InvalidArgument("cell index out of range");
  if (!std::isfinite(z)) throw InvalidArgument("difference level not finite");
  if (settings.cells == 0 || settings.max_cells == 0) {
    throw InvalidArgument("quadrature needs at least one cell");
  }
  const NOSFamily family0 = FamilyAt(family0_in, y);
  const NOSFamily family1 = FamilyAt(family1_in, y);

  QuadratureResult out;
  if (!(p[i] <= family0.VirtualPrice(i, w))) return out;

  // The after-change level lives in [min_c s*_c, s*_j]; the before-change
  // level of i never exceeds x*_i.
  double s_min = kInf;
  for (std::size_t c = 0; c < n; ++c) {
    s_min = std::min(s_min, family1.Threshold(c, p_post[c]));
  }
  const double s_j = family1.Threshold(j, p_post[j]);
  const double x_i = family0.Threshold(i, p[i]);
  if (!std::isfinite(s_min) || !std::isfinite(s_j) || !std::isfinite(x_i)) {
    throw IntegrationDomainError(
        "integration support could not be bracketed within 200 doublings");
  }
  const double lo = s_min - z;
  out.lower = lo;
  out.upper = lo;
  if (!(x_i > lo)) return out;
  double hi = std::min(x_i, s_j - z);
  double step = settings.step > 0.0 ? settings.step : (hi - lo) / settings.cells;
  if (!(step > 0.0)) step = 1e-6 * std::max(1.0, std::abs(lo));
  // Carry the last cell past the atom of the after-change level at s*_j.
  if (s_j - z < x_i) hi = std::min(x_i, s_j - z + step);
  std::size_t cells = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  if (cells > settings.max_cells) {
    cells = settings.max_cells;
    step = (hi - lo) / static_cast<double>(cells);
  }
  cells = std::max<std::size_t>(cells, 1);

  const std::vector<double> before_w = MinWithVirtual(p, family0, w);
  const auto helper = [&](double x, double s) {
    if (!(p_post[j] <= family1.VirtualPrice(j, s))) return 0.0;
    std::vector<double> q0 = MinWithVirtual(before_w, family0, x);
    return trans.Probability(i, j, q0, MinWithVirtual(p_post, family1, s), y);
  };

  double total = 0.0;
  for (std::size_t m = 0; m < cells; ++m) {
    const double a = lo + static_cast<double>(m) * step;
    const double b = m + 1 == cells ? hi : lo + static_cast<double>(m + 1) * step;
    const double mid = 0.5 * (a + b);
    if (!(p[i] <= family0.VirtualPrice(i, mid))) continue;
    total -= helper(mid, b + z) - helper(mid, a + z);
  }
  if (total < -kNegativeRoundOff) {
    throw IntegrationDomainError("quadrature produced a negative probability");
  }
  out.probability = Clip(total);
  out.lower = lo;
  out.upper = hi;
  out.step = step;
  out.cells = cells;
  return out;
}

CurveResult VariationDistribution(const ModelPair& models,
                                  std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  VariationKind kind, const VariationMode& mode,
                                  const GridRequest& grid) {
  const VariationEvaluator eval(models, p, p_post, y, kind, mode);
  const std::vector<std::size_t> active = eval.SwitchingTerms();
  JumpList jumps;
  for (std::size_t c : active) {
    const double z = eval.Switch(c);
    jumps.Add(z, eval.Terms(z)[c]);
  }
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t c = 0; c < eval.size(); ++c) {
    lo = std::min(lo, eval.Switch(c));
    hi = std::max(hi, eval.Switch(c));
  }
  std::vector<double> marks;
  for (std::size_t c = 0; c < eval.size(); ++c) marks.push_back(eval.Switch(c));
  std::vector<double> points = ResolveGrid(grid, lo, hi, marks);
  std::vector<double> values(points.size());
  for (std::size_t g = 0; g < points.size(); ++g) values[g] = eval.Value(points[g]);
  nlohmann::json meta = eval.Metadata();
  meta["income"] = y;
  return FinishCurve(std::move(points), std::move(values), CurveKind::kCdf,
                     jumps, "z", std::move(meta));
}

namespace {

JointGridResult JointGrid(const VariationEvaluator& eval, double y, bool cv,
                          std::span<const double> w_grid,
                          std::span<const double> z_grid) {
  if (w_grid.empty() || z_grid.empty()) {
    throw InvalidArgument("joint grids must be non-empty");
  }
  if (!StrictlyIncreasing(w_grid) || !StrictlyIncreasing(z_grid)) {
    throw InvalidArgument("joint grids must be strictly increasing");
  }
  JointGridResult out;
  out.w_grid.assign(w_grid.begin(), w_grid.end());
  out.z_grid.assign(z_grid.begin(), z_grid.end());
  out.values.resize(w_grid.size() * z_grid.size());
  for (std::size_t a = 0; a < w_grid.size(); ++a) {
    for (std::size_t b = 0; b < z_grid.size(); ++b) {
      double v;
      if (cv) {
        v = eval.Value(std::min(z_grid[b], y - w_grid[a]));
      } else {
        v = w_grid[a] <= y ? eval.Value(z_grid[b]) : 0.0;
      }
      out.values[a * z_grid.size() + b] = Clip(v);
    }
  }
  out.metadata = eval.Metadata();
  out.metadata["income"] = y;
  out.metadata["w_direction"] = "ccdf";
  out.metadata["z_direction"] = "cdf";
  return out;
}

}  // namespace

JointGridResult MmuCvJoint(const ModelPair& models, std::span<const double> p,
                           std::span<const double> p_post, double y,
                           const VariationMode& mode,
                           std::span<const double> w_grid,
                           std::span<const double> z_grid) {
  const VariationEvaluator eval(models, p, p_post, y,
                                VariationKind::kCompensating, mode);
  JointGridResult out = JointGrid(eval, y, true, w_grid, z_grid);
  out.metadata["level"] = "mmu_at_post_prices";
  return out;
}

JointGridResult MmuEvJoint(const ModelPair& models, std::span<const double> p,
                           std::span<const double> p_post, double y,
                           const VariationMode& mode,
                           std::span<const double> w_grid,
                           std::span<const double> z_grid) {
  const VariationEvaluator eval(models, p, p_post, y, VariationKind::kEquivalent,
                                mode);
  JointGridResult out = JointGrid(eval, y, false, w_grid, z_grid);
  out.metadata["level"] = "mmu_at_pre_prices";
  return out;
}

void WriteJointCsv(std::ostream& os, const JointGridResult& joint) {
  os << "w,z,value\n";
  for (std::size_t a = 0; a < joint.w_grid.size(); ++a) {
    for (std::size_t b = 0; b < joint.z_grid.size(); ++b) {
      os << FormatDouble(joint.w_grid[a]) << ',' << FormatDouble(joint.z_grid[b])
         << ',' << FormatDouble(joint.at(a, b)) << '\n';
    }
  }
}

MeanResult MeanFromCurve(const DistributionCurve& curve, bool allow_defective) {
  const auto& g = curve.grid();
  const auto& v = curve.values();
  MeanResult out;
  const double integral = CurveIntegral(curve);
  double left_gap;
  double right_gap;
  if (curve.kind() == CurveKind::kCcdf) {
    out.mean = g.front() + integral;
    left_gap = 1.0 - v.front();
    right_gap = v.back() - JumpAt(curve, g.back());
  } else {
    out.mean = g.back() - integral;
    left_gap = v.front() - JumpAt(curve, g.front());
    right_gap = 1.0 - v.back();
  }
  const bool left_open = left_gap > kTailTolerance;
  const bool right_open = right_gap > kTailTolerance;
  if (!left_open && !right_open) return out;
  out.truncated = true;
  out.warning = "curve tails not resolved on the grid; missing mass placed at";
  out.warning += left_open ? " the left end" : "";
  out.warning += left_open && right_open ? " and" : "";
  out.warning += right_open ? " the right end" : "";
  if (allow_defective) return out;
  if ((left_open && !Trending(curve, false)) ||
      (right_open && !Trending(curve, true))) {
    throw NonintegrableCurve(
        "curve is flat away from its limit at a grid end; the mean diverges or "
        "the grid misses the support");
  }
  return out;
}

MeanInterval MeanIntervalFromCurves(const DistributionCurve& lower,
                                    const DistributionCurve& upper) {
  if (lower.kind() != upper.kind()) {
    throw InvalidArgument("bound curves must be of the same kind");
  }
  const double a = MeanFromCurve(lower, true).mean;
  const double b = MeanFromCurve(upper, true).mean;
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace nosdist
