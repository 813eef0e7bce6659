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

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "nosdist/errors.h"
#include "nosdist/io.h"

namespace nosdist {
namespace {

constexpr double kTailTolerance = 1e-9;

std::vector<double> DefaultProbeGrid() { return Linspace(-10.0, 10.0, 81); }

double MemberIntegral(const ChoiceProbabilityModel& choice,
                      const NOSFamily& family, const AversionFunction& aversion,
                      const BudgetSet& member, std::size_t index,
                      const GridRequest& grid) {
  const ModelPair models{nullptr, &choice};
  const CurveResult level =
      LevelDistribution(models, family.AtIncome(member.income), 0,
                        member.prices[0], member.prices, member.income,
                        LevelMode::MarginalAtOptimum(), grid);
  try {
    return IntegrateAgainstCcdf(level.curve, aversion);
  } catch (const NonintegrableCurve& e) {
    throw NonintegrableCurve("population member " + std::to_string(index) +
                             ": " + e.what());
  }
}

void Support(const NOSFamily& family, const BudgetSet& member, double& lo,
             double& hi, std::vector<double>& marks) {
  const NOSFamily f = family.AtIncome(member.income);
  for (std::size_t c = 0; c < member.size(); ++c) {
    const double t = f.Threshold(c, member.prices[c]);
    if (!std::isfinite(t)) {
      throw InvalidArgument("welfare support unbounded; supply explicit grid");
    }
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    marks.push_back(t);
  }
}

}  // namespace

PopulationSample::PopulationSample(std::vector<BudgetSet> members,
                                   std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw InvalidArgument("population is empty");
  const std::size_t n = members_.front().size();
  for (const BudgetSet& b : members_) {
    b.Validate();
    if (b.size() != n) throw InvalidArgument("population members differ in n");
  }
  if (weights_.empty()) {
    weights_.assign(members_.size(), 1.0 / static_cast<double>(members_.size()));
    return;
  }
  if (weights_.size() != members_.size()) {
    throw InvalidArgument("one weight per population member required");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("population weights must be non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("population weights sum to zero");
  for (double& w : weights_) w /= total;
}

PopulationSample PopulationSample::Shifted(
    const std::vector<PriceVector>& shifts) const {
  if (shifts.size() != 1 && shifts.size() != members_.size()) {
    throw InvalidArgument("need one price shift or one per member");
  }
  std::vector<BudgetSet> moved = members_;
  for (std::size_t m = 0; m < moved.size(); ++m) {
    const PriceVector& d = shifts.size() == 1 ? shifts[0] : shifts[m];
    if (d.size() != moved[m].size()) {
      throw InvalidArgument("price shift has the wrong dimension");
    }
    for (std::size_t c = 0; c < d.size(); ++c) moved[m].prices[c] += d[c];
  }
  return PopulationSample(std::move(moved), weights_);
}

PopulationSample ReadPopulationCsv(std::istream& is) {
  const CsvTable table = ReadCsv(is);
  std::size_t n = 0;
  while (std::find(table.header.begin(), table.header.end(),
                   "p_" + std::to_string(n)) != table.header.end()) {
    ++n;
  }
  if (n == 0) throw InvalidArgument("population CSV has no p_0 column");
  const std::size_t y_col = table.Column("y");
  const bool weighted = std::find(table.header.begin(), table.header.end(),
                                  "weight") != table.header.end();
  std::vector<BudgetSet> members;
  std::vector<double> weights;
  for (const auto& row : table.rows) {
    BudgetSet b;
    for (std::size_t c = 0; c < n; ++c) {
      b.prices.push_back(
          ParseDouble(row[table.Column("p_" + std::to_string(c))], "price"));
    }
    b.income = ParseDouble(row[y_col], "y");
    members.push_back(std::move(b));
    if (weighted) weights.push_back(ParseDouble(row[table.Column("weight")], "weight"));
  }
  return PopulationSample(std::move(members), std::move(weights));
}

void WritePopulationCsv(std::ostream& os, const PopulationSample& population) {
  const std::size_t n = population.members().front().size();
  for (std::size_t c = 0; c < n; ++c) os << "p_" << c << ',';
  os << "y,weight\n";
  for (std::size_t m = 0; m < population.size(); ++m) {
    const BudgetSet& b = population.members()[m];
    for (double v : b.prices) os << FormatDouble(v) << ',';
    os << FormatDouble(b.income) << ',' << FormatDouble(population.weights()[m])
       << '\n';
  }
}

AversionFunction::AversionFunction(Evaluator h, bool declared_concave,
                                   std::string label,
                                   std::span<const double> probe_grid)
    : h_(std::move(h)), concave_(declared_concave), label_(std::move(label)) {
  if (!h_) throw InvalidArgument("aversion function needs an evaluator");
  std::vector<double> probe(probe_grid.begin(), probe_grid.end());
  if (probe.empty()) probe = DefaultProbeGrid();
  if (!StrictlyIncreasing(probe)) {
    throw InvalidArgument("aversion probe grid must be strictly increasing");
  }
  std::vector<double> v;
  for (double w : probe) v.push_back(h_(w));
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw InvalidArgument("aversion function " + label_ +
                            " is not strictly increasing on the probe grid");
    }
  }
  if (!concave_) return;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double left = (v[i] - v[i - 1]) / (probe[i] - probe[i - 1]);
    const double right = (v[i + 1] - v[i]) / (probe[i + 1] - probe[i]);
    if (right > left + 1e-12 * std::max(1.0, std::abs(left))) {
      throw InvalidArgument("aversion function " + label_ +
                            " is declared concave but is not on the probe grid");
    }
  }
}

AversionFunction AversionFunction::Identity() {
  return AversionFunction([](double w) { return w; }, true, "identity");
}

AversionFunction AversionFunction::NegativeExponential(double a) {
  if (!(a > 0.0)) throw InvalidArgument("aversion coefficient must be positive");
  return AversionFunction([a](double w) { return -std::exp(-a * w); }, true,
                          "negative_exponential");
}

double WelfareCdf(const ChoiceProbabilityModel& choice, const NOSFamily& family,
                  std::span<const double> p, double y, double w) {
  if (p.size() != family.size() || choice.size() != family.size()) {
    throw InvalidArgument("prices have the wrong dimension");
  }
  const NOSFamily f = y == family.income() ? family : family.AtIncome(y);
  const PriceVector virt = f.VirtualPrices(w);
  const PriceVector q = ElementwiseMin(p, virt);
  const std::vector<double> probs = choice.Probabilities(q, y);
  double above = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= virt[k]) above += probs[k];
  }
  return std::clamp(1.0 - above, 0.0, 1.0);
}

nlohmann::json SwfResult::ToJson() const {
  return {{"swf", swf}, {"per_member_contributions", contributions}};
}

double IntegrateAgainstCcdf(const DistributionCurve& ccdf,
                            const AversionFunction& aversion) {
  if (ccdf.kind() != CurveKind::kCcdf) {
    throw InvalidArgument("expected a CCDF curve");
  }
  const auto& g = ccdf.grid();
  const auto& s = ccdf.values();
  double end_jump = 0.0;
  std::vector<double> jump(g.size(), 0.0);
  std::vector<double> h_jump(g.size(), 0.0);
  for (const MassPoint& m : ccdf.mass_points()) {
    const auto it = std::upper_bound(g.begin(), g.end(), m.location);
    if (it == g.end()) {
      end_jump += m.jump;
      continue;
    }
    const std::size_t cell = static_cast<std::size_t>(it - g.begin()) - 1;
    jump[cell] += m.jump;
    h_jump[cell] += aversion(m.location) * m.jump;
  }
  if (1.0 - s.front() > kTailTolerance || s.back() - end_jump > kTailTolerance) {
    throw NonintegrableCurve("welfare CDF does not reach 0 and 1 on the grid");
  }
  double total = aversion(g.back()) * end_jump;
  double h_prev = aversion(g.front());
  for (std::size_t m = 0; m + 1 < g.size(); ++m) {
    const double h_next = aversion(g[m + 1]);
    // dF = -dS; the recorded jump is removed from the smooth increment.
    const double smooth = (s[m] - s[m + 1]) - jump[m];
    total += 0.5 * (h_prev + h_next) * smooth + h_jump[m];
    h_prev = h_next;
  }
  return total;
}

SwfResult Swf(const ChoiceProbabilityModel& choice, const NOSFamily& family,
              const AversionFunction& aversion,
              const PopulationSample& population, const GridRequest& grid) {
  if (population.members().front().size() != family.size()) {
    throw InvalidArgument("population and family differ in n");
  }
  SwfResult out;
  for (std::size_t m = 0; m < population.size(); ++m) {
    const double v = MemberIntegral(choice, family, aversion,
                                    population.members()[m], m, grid);
    out.contributions.push_back(population.weights()[m] * v);
    out.swf += out.contributions.back();
  }
  return out;
}

double SwfDifference(const ChoiceProbabilityModel& choice,
                     const NOSFamily& family, const AversionFunction& aversion,
                     const PopulationSample& population,
                     const std::vector<PriceVector>& delta_p,
                     const GridRequest& grid) {
  const PopulationSample shifted = population.Shifted(delta_p);
  GridRequest shared = grid;
  if (shared.points.empty()) {
    double lo = kInf;
    double hi = -kInf;
    std::vector<double> marks;
    for (const BudgetSet& b : population.members()) Support(family, b, lo, hi, marks);
    for (const BudgetSet& b : shifted.members()) Support(family, b, lo, hi, marks);
    double pad = 0.1 * (hi - lo);
    if (!(pad > 0.0)) pad = 0.1 * std::max(1.0, std::abs(hi));
    std::vector<double> extra;
    for (double t : marks) {
      extra.push_back(t);
      extra.push_back(std::nextafter(t, -kInf));
      extra.push_back(std::nextafter(t, kInf));
    }
    shared = GridRequest::Explicit(
        MergeGrid(Linspace(lo - pad, hi + pad, grid.size), extra));
  }
  const SwfResult after = Swf(choice, family, aversion, shifted, shared);
  const SwfResult before = Swf(choice, family, aversion, population, shared);
  return after.swf - before.swf;
}

}  // namespace nosdist
