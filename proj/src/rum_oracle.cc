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

#include "nosdist/rum_oracle.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "nosdist/errors.h"
#include "nosdist/io.h"

namespace nosdist {
namespace {

constexpr std::size_t kBlockSize = 4096;
constexpr std::uint64_t kBudgetStreamTag = 0x62756467;
constexpr std::uint64_t kIncomeStreamTag = 0x696e636d;

std::mt19937_64 StreamEngine(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

// Uniform on the open unit interval from the top 53 bits.
double OpenUniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

double Gumbel(std::mt19937_64& rng) {
  return -std::log(-std::log(OpenUniform(rng)));
}

// Box-Muller, one variate per call so the stream layout stays simple.
double StandardNormal(std::mt19937_64& rng) {
  const double u1 = OpenUniform(rng);
  const double u2 = OpenUniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void CheckFinite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " not finite");
}

void CheckDraw(const PreferenceDraw& draw, std::size_t n) {
  if (draw.alpha.size() != n || draw.epsilon.size() != n) {
    throw InvalidArgument("preference draw has the wrong dimension");
  }
}

std::string PriceColumns(const std::string& prefix, std::size_t n) {
  std::string out;
  for (std::size_t c = 0; c < n; ++c) {
    out += prefix + std::to_string(c) + ',';
  }
  return out;
}

std::size_t CountPrefixed(const std::vector<std::string>& header,
                          const std::string& prefix) {
  std::size_t n = 0;
  while (std::find(header.begin(), header.end(), prefix + std::to_string(n)) !=
         header.end()) {
    ++n;
  }
  return n;
}

DistributionCurve Empirical(std::span<const double> samples,
                            std::vector<double> grid, CurveKind kind) {
  if (samples.empty()) throw InvalidArgument("empirical curve needs samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double total = static_cast<double>(sorted.size());
  std::vector<double> values(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (kind == CurveKind::kCcdf) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), grid[g]);
      values[g] = static_cast<double>(sorted.end() - it) / total;
    } else {
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[g]);
      values[g] = static_cast<double>(it - sorted.begin()) / total;
    }
  }
  std::vector<MassPoint> masses;
  const double threshold = 2.0 / std::sqrt(total);
  std::size_t start = 0;
  while (start < sorted.size()) {
    std::size_t end = start + 1;
    while (end < sorted.size() &&
           sorted[end] - sorted[start] <= 1e-9 * (1.0 + std::abs(sorted[start]))) {
      ++end;
    }
    const double jump = static_cast<double>(end - start) / total;
    const double loc =
        kind == CurveKind::kCcdf ? sorted[end - 1] : sorted[start];
    if (jump > threshold && !grid.empty() && loc >= grid.front() &&
        loc <= grid.back()) {
      masses.push_back({loc, jump});
    }
    start = end;
  }
  return DistributionCurve(std::move(grid), std::move(values), kind,
                           std::move(masses));
}

}  // namespace

UtilitySpec UtilitySpec::Logit(std::vector<double> alpha, double beta) {
  UtilitySpec spec;
  spec.form = AdditiveLogit{std::move(alpha), beta};
  spec.Validate();
  return spec;
}

std::size_t UtilitySpec::size() const {
  if (const auto* l = std::get_if<AdditiveLogit>(&form)) return l->alpha.size();
  return std::get<RandomCoefficients>(form).alpha_mean.size();
}

void UtilitySpec::Validate() const {
  if (size() == 0) throw InvalidArgument("utility spec needs n >= 1");
  if (const auto* l = std::get_if<AdditiveLogit>(&form)) {
    for (double a : l->alpha) CheckFinite(a, "alpha");
    CheckFinite(l->beta, "beta");
    if (!(l->beta > 0.0)) throw InvalidArgument("beta must be positive");
    return;
  }
  const auto& rc = std::get<RandomCoefficients>(form);
  if (rc.alpha_sd.size() != rc.alpha_mean.size()) {
    throw InvalidArgument("alpha_sd and alpha_mean differ in length");
  }
  for (double a : rc.alpha_mean) CheckFinite(a, "alpha_mean");
  for (double s : rc.alpha_sd) {
    CheckFinite(s, "alpha_sd");
    if (s < 0.0) throw InvalidArgument("alpha_sd must be non-negative");
  }
  CheckFinite(rc.log_beta_mean, "log_beta_mean");
  CheckFinite(rc.log_beta_sd, "log_beta_sd");
  if (rc.log_beta_sd < 0.0) {
    throw InvalidArgument("log_beta_sd must be non-negative");
  }
}

DrawTable DrawTable::Generate(const UtilitySpec& spec, std::uint64_t seed,
                              std::size_t count) {
  spec.Validate();
  if (count == 0) throw InvalidArgument("draw count must be positive");
  DrawTable t;
  t.n_ = spec.size();
  t.alphas_.resize(count * t.n_);
  t.epsilons_.resize(count * t.n_);
  t.intercepts_.resize(count * t.n_);
  t.betas_.resize(count);
  const auto* logit = std::get_if<AdditiveLogit>(&spec.form);
  const auto* rc = std::get_if<RandomCoefficients>(&spec.form);
  for (std::size_t block = 0; block * kBlockSize < count; ++block) {
    std::mt19937_64 rng = StreamEngine(seed, block);
    const std::size_t end = std::min(count, (block + 1) * kBlockSize);
    for (std::size_t r = block * kBlockSize; r < end; ++r) {
      double* alpha = t.alphas_.data() + r * t.n_;
      if (logit != nullptr) {
        std::copy(logit->alpha.begin(), logit->alpha.end(), alpha);
        t.betas_[r] = logit->beta;
      } else {
        for (std::size_t c = 0; c < t.n_; ++c) {
          alpha[c] = rc->alpha_mean[c] + rc->alpha_sd[c] * StandardNormal(rng);
        }
        t.betas_[r] =
            std::exp(rc->log_beta_mean + rc->log_beta_sd * StandardNormal(rng));
      }
      for (std::size_t c = 0; c < t.n_; ++c) {
        const double eps = Gumbel(rng);
        t.epsilons_[r * t.n_ + c] = eps;
        t.intercepts_[r * t.n_ + c] = alpha[c] + eps;
      }
    }
  }
  return t;
}

DrawTable DrawTable::FromDraws(std::span<const PreferenceDraw> draws) {
  if (draws.empty()) throw InvalidArgument("draw table needs draws");
  DrawTable t;
  t.n_ = draws.front().size();
  if (t.n_ == 0) throw InvalidArgument("draws need n >= 1");
  for (const PreferenceDraw& d : draws) {
    CheckDraw(d, t.n_);
    if (!(d.beta > 0.0) || !std::isfinite(d.beta)) {
      throw InvalidArgument("draw beta must be positive and finite");
    }
    for (std::size_t c = 0; c < t.n_; ++c) {
      CheckFinite(d.alpha[c], "draw alpha");
      CheckFinite(d.epsilon[c], "draw epsilon");
      t.alphas_.push_back(d.alpha[c]);
      t.epsilons_.push_back(d.epsilon[c]);
      t.intercepts_.push_back(d.alpha[c] + d.epsilon[c]);
    }
    t.betas_.push_back(d.beta);
  }
  return t;
}

PreferenceDraw DrawTable::At(std::size_t r) const {
  PreferenceDraw d;
  d.alpha.assign(alphas_.begin() + r * n_, alphas_.begin() + (r + 1) * n_);
  d.epsilon.assign(epsilons_.begin() + r * n_, epsilons_.begin() + (r + 1) * n_);
  d.beta = betas_[r];
  return d;
}

std::vector<PreferenceDraw> DrawTable::ToDraws() const {
  std::vector<PreferenceDraw> out;
  out.reserve(size());
  for (std::size_t r = 0; r < size(); ++r) out.push_back(At(r));
  return out;
}

std::size_t DrawTable::Choose(std::size_t r, std::span<const double> prices,
                              double income) const {
  const double* a = intercepts_.data() + r * n_;
  const double beta = betas_[r];
  std::size_t best = 0;
  double best_u = a[0] + beta * (income - prices[0]);
  for (std::size_t c = 1; c < n_; ++c) {
    const double u = a[c] + beta * (income - prices[c]);
    if (u > best_u) {
      best_u = u;
      best = c;
    }
  }
  return best;
}

std::vector<PreferenceDraw> DrawPreferences(const UtilitySpec& spec,
                                            std::uint64_t seed,
                                            std::size_t count) {
  return DrawTable::Generate(spec, seed, count).ToDraws();
}

std::size_t Choose(const PreferenceDraw& draw, const BudgetSet& budget) {
  CheckDraw(draw, budget.size());
  std::size_t best = 0;
  double best_u = draw.Utility(0, budget.income - budget.prices[0]);
  for (std::size_t c = 1; c < budget.size(); ++c) {
    const double u = draw.Utility(c, budget.income - budget.prices[c]);
    if (u > best_u) {
      best_u = u;
      best = c;
    }
  }
  return best;
}

double ExactWelfare(const PreferenceDraw& draw, const NOSFamily& family,
                    std::size_t k, double p_k, double y) {
  const std::size_t n = family.size();
  CheckDraw(draw, n);
  if (k >= n) throw InvalidArgument("welfare bundle index out of range");
  const NOSFamily f = y == family.income() ? family : family.AtIncome(y);
  const double own = draw.Utility(k, y - p_k);
  const auto& mmu = f.mmu();
  // Residual income y - p~_c(lambda); for an MMU family it is lambda - r_c,
  // evaluated with a single rounding.
  const auto residual = [&](std::size_t c, double lambda) {
    if (mmu) return lambda - mmu->reference_prices[c];
    return y - f.VirtualPrice(c, lambda);
  };
  // The own bundle stops holding exactly where p~_k(lambda) drops below p_k.
  double root = f.Threshold(k, p_k);
  if (root == -kInf) {
    throw NoSolution("welfare bracket did not close for bundle " +
                     std::to_string(k));
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (c == k) continue;
    const auto holds = [&](double lambda) {
      return draw.Utility(c, residual(c, lambda)) <= own;
    };
    if (std::isfinite(root) && holds(root)) continue;
    const Boundary b =
        LastTrue(holds, std::isfinite(root) ? root : y, f.lambda_domain());
    if (b.found()) {
      root = b.last_true;
    } else if (b.status != SearchStatus::kAlwaysTrue) {
      throw NoSolution("welfare bracket did not close for bundle " +
                       std::to_string(k));
    }
  }
  return root;
}

double ExactVariation(const PreferenceDraw& draw, std::span<const double> p,
                      std::span<const double> p_post, double y,
                      VariationKind kind) {
  if (p.size() != p_post.size()) {
    throw InvalidArgument("price vectors differ in length");
  }
  CheckDraw(draw, p.size());
  if (std::equal(p.begin(), p.end(), p_post.begin())) return 0.0;
  // CV <= z iff max_c U_c(y - p'_c - z) <= U_i(y - p_i), with i chosen at p.
  // EV swaps the roles of the two price vectors. The chosen bundle's own root
  // is the price difference; other bundles are bisected only when they bind.
  const bool cv = kind == VariationKind::kCompensating;
  const std::span<const double> base = cv ? p : p_post;
  const std::span<const double> moved = cv ? p_post : p;
  const std::size_t k = Choose(draw, BudgetSet{{base.begin(), base.end()}, y});
  const double target = draw.Utility(k, y - base[k]);
  double root = base[k] - moved[k];
  for (std::size_t c = 0; c < draw.size(); ++c) {
    if (c == k) continue;
    const auto beats = [&](double z) {
      return draw.Utility(c, y - moved[c] - z) > target;
    };
    if (!beats(root)) continue;
    const Boundary b = LastTrue(beats, root);
    if (!b.found()) throw NoSolution("variation bracket did not close");
    root = b.first_false;
  }
  return root;
}

BudgetSampler FixedBudget(BudgetSet budget) {
  budget.Validate();
  return [budget](std::mt19937_64&) { return budget; };
}

IncomeSampler FixedIncome(double income) {
  return [income](std::mt19937_64&) { return income; };
}

CrossSectionData SimulateCrossSection(const UtilitySpec& spec,
                                      const BudgetSampler& budget_sampler,
                                      std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("row count must be positive");
  const DrawTable draws = DrawTable::Generate(spec, seed, count);
  std::mt19937_64 rng = StreamEngine(seed, kBudgetStreamTag << 32);
  CrossSectionData data;
  data.n = spec.size();
  data.rows.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    BudgetSet budget = budget_sampler(rng);
    if (budget.size() != data.n) {
      throw InvalidArgument("budget sampler returned the wrong dimension");
    }
    const std::size_t choice = draws.Choose(r, budget.prices, budget.income);
    data.rows.push_back({std::move(budget), choice});
  }
  return data;
}

PanelData SimulatePanel(const UtilitySpec& spec, std::span<const double> p,
                        std::span<const double> p_post,
                        const IncomeSampler& y_sampler, std::size_t count,
                        std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("row count must be positive");
  if (p.size() != spec.size() || p_post.size() != spec.size()) {
    throw InvalidArgument("panel prices have the wrong dimension");
  }
  const DrawTable draws = DrawTable::Generate(spec, seed, count);
  std::mt19937_64 rng = StreamEngine(seed, kIncomeStreamTag << 32);
  PanelData data;
  data.n = spec.size();
  data.rows.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    PanelRow row;
    row.prices.assign(p.begin(), p.end());
    row.prices_post.assign(p_post.begin(), p_post.end());
    row.income = y_sampler(rng);
    row.choice_pre = draws.Choose(r, row.prices, row.income);
    row.choice_post = draws.Choose(r, row.prices_post, row.income);
    data.rows.push_back(std::move(row));
  }
  return data;
}

DistributionCurve EmpiricalCcdf(std::span<const double> samples,
                                std::vector<double> grid) {
  return Empirical(samples, std::move(grid), CurveKind::kCcdf);
}

DistributionCurve EmpiricalCdf(std::span<const double> samples,
                               std::vector<double> grid) {
  return Empirical(samples, std::move(grid), CurveKind::kCdf);
}

void WriteCrossSectionCsv(std::ostream& os, const CrossSectionData& data) {
  os << PriceColumns("p_", data.n) << "y,choice\n";
  for (const CrossSectionRow& row : data.rows) {
    for (double v : row.budget.prices) os << FormatDouble(v) << ',';
    os << FormatDouble(row.budget.income) << ',' << row.choice << '\n';
  }
}

CrossSectionData ReadCrossSectionCsv(std::istream& is) {
  const CsvTable table = ReadCsv(is);
  CrossSectionData data;
  data.n = CountPrefixed(table.header, "p_");
  if (data.n == 0) throw InvalidArgument("cross-section CSV has no p_0 column");
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < data.n; ++c) {
    cols.push_back(table.Column("p_" + std::to_string(c)));
  }
  const std::size_t y_col = table.Column("y");
  const std::size_t choice_col = table.Column("choice");
  for (const auto& fields : table.rows) {
    CrossSectionRow row;
    for (std::size_t c = 0; c < data.n; ++c) {
      row.budget.prices.push_back(ParseDouble(fields[cols[c]], "price"));
    }
    row.budget.income = ParseDouble(fields[y_col], "y");
    row.choice = ParseIndex(fields[choice_col], "choice");
    if (row.choice >= data.n) throw InvalidArgument("choice index out of range");
    data.rows.push_back(std::move(row));
  }
  return data;
}

void WritePanelCsv(std::ostream& os, const PanelData& data) {
  os << PriceColumns("p_", data.n) << PriceColumns("pp_", data.n)
     << "y,choice_pre,choice_post\n";
  for (const PanelRow& row : data.rows) {
    for (double v : row.prices) os << FormatDouble(v) << ',';
    for (double v : row.prices_post) os << FormatDouble(v) << ',';
    os << FormatDouble(row.income) << ',' << row.choice_pre << ','
       << row.choice_post << '\n';
  }
}

PanelData ReadPanelCsv(std::istream& is) {
  const CsvTable table = ReadCsv(is);
  PanelData data;
  data.n = CountPrefixed(table.header, "p_");
  if (data.n == 0 || CountPrefixed(table.header, "pp_") != data.n) {
    throw InvalidArgument("panel CSV needs matching p_ and pp_ columns");
  }
  std::vector<std::size_t> pre;
  std::vector<std::size_t> post;
  for (std::size_t c = 0; c < data.n; ++c) {
    pre.push_back(table.Column("p_" + std::to_string(c)));
    post.push_back(table.Column("pp_" + std::to_string(c)));
  }
  const std::size_t y_col = table.Column("y");
  const std::size_t a_col = table.Column("choice_pre");
  const std::size_t b_col = table.Column("choice_post");
  for (const auto& fields : table.rows) {
    PanelRow row;
    for (std::size_t c = 0; c < data.n; ++c) {
      row.prices.push_back(ParseDouble(fields[pre[c]], "price"));
      row.prices_post.push_back(ParseDouble(fields[post[c]], "post price"));
    }
    row.income = ParseDouble(fields[y_col], "y");
    row.choice_pre = ParseIndex(fields[a_col], "choice_pre");
    row.choice_post = ParseIndex(fields[b_col], "choice_post");
    if (row.choice_pre >= data.n || row.choice_post >= data.n) {
      throw InvalidArgument("choice index out of range");
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

void to_json(nlohmann::json& j, const UtilitySpec& spec) {
  if (const auto* l = std::get_if<AdditiveLogit>(&spec.form)) {
    j = {{"form", "additive_logit"}, {"alpha", l->alpha}, {"beta", l->beta}};
    return;
  }
  const auto& rc = std::get<RandomCoefficients>(spec.form);
  j = {{"form", "random_coefficients"},
       {"alpha_mean", rc.alpha_mean},
       {"alpha_sd", rc.alpha_sd},
       {"log_beta_mean", rc.log_beta_mean},
       {"log_beta_sd", rc.log_beta_sd}};
}

void from_json(const nlohmann::json& j, UtilitySpec& spec) {
  const std::string form = j.value("form", "additive_logit");
  if (form == "additive_logit") {
    AdditiveLogit l;
    j.at("alpha").get_to(l.alpha);
    l.beta = j.value("beta", 1.0);
    spec.form = std::move(l);
  } else if (form == "random_coefficients") {
    RandomCoefficients rc;
    j.at("alpha_mean").get_to(rc.alpha_mean);
    rc.alpha_sd = j.value("alpha_sd", std::vector<double>(rc.alpha_mean.size(), 0.0));
    rc.log_beta_mean = j.value("log_beta_mean", 0.0);
    rc.log_beta_sd = j.value("log_beta_sd", 0.0);
    spec.form = std::move(rc);
  } else {
    throw InvalidArgument("unknown utility form: " + form);
  }
}

}  // namespace nosdist
