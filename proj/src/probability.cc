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

#include "nosdist/probability.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nosdist/errors.h"

namespace nosdist {
namespace {

void CheckPrices(std::span<const double> prices, std::size_t n,
                 const char* what) {
  if (prices.size() != n) {
    throw InvalidArgument(std::string(what) + " has the wrong dimension");
  }
}

// Turns non-negative kernel sums into shares. All but the last share are
// plain ratios; the last one is the remainder so that a left-to-right sum of
// the shares reproduces 1.
void NormalizeShares(std::vector<double>& sums) {
  double total = 0.0;
  for (double s : sums) total += s;
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < sums.size(); ++i) {
    sums[i] = std::clamp(sums[i] / total, 0.0, 1.0);
    partial += sums[i];
  }
  sums.back() = std::clamp(1.0 - partial, 0.0, 1.0);
}

double SampleSd(const std::vector<double>& x, std::size_t dim, std::size_t d,
                std::size_t count) {
  if (count < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t r = 0; r < count; ++r) mean += x[r * dim + d];
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t r = 0; r < count; ++r) {
    const double e = x[r * dim + d] - mean;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(count - 1));
}

nlohmann::json SmootherMetadata(const KernelSmoother& s) {
  return {{"kernel", "product_gaussian"},
          {"bandwidths", s.bandwidths()},
          {"sample_size", s.samples()},
          {"bandwidth_floor", kBandwidthFloor},
          {"extrapolation_radius", kExtrapolationRadius}};
}

}  // namespace

double TransitionMatrix::RowSum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += (*this)(i, j);
  return s;
}

double TransitionMatrix::ColumnSum(std::size_t j) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (*this)(i, j);
  return s;
}

double TransitionMatrix::Total() const {
  double s = 0.0;
  for (double v : cells) s += v;
  return s;
}

LogitChoiceModel::LogitChoiceModel(std::vector<double> alpha, double beta)
    : alpha_(std::move(alpha)), beta_(beta) {
  if (alpha_.empty()) throw InvalidArgument("logit needs n >= 1");
  if (!(beta_ > 0.0) || !std::isfinite(beta_)) {
    throw InvalidArgument("logit beta must be positive");
  }
  for (double a : alpha_) {
    if (!std::isfinite(a)) throw InvalidArgument("logit alpha not finite");
  }
}

std::vector<double> LogitChoiceModel::Probabilities(
    std::span<const double> prices, double income) const {
  CheckPrices(prices, alpha_.size(), "logit prices");
  // The income enters every index equally and cancels.
  (void)income;
  std::vector<double> v(alpha_.size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = alpha_[c] - beta_ * prices[c];
  const double top = *std::max_element(v.begin(), v.end());
  for (double& e : v) e = std::exp(e - top);
  NormalizeShares(v);
  return v;
}

nlohmann::json LogitChoiceModel::Metadata() const {
  return {{"model", "logit"}, {"n", alpha_.size()}, {"alpha", alpha_},
          {"beta", beta_}};
}

ChoiceModelPtr MakeLogitChoiceModel(std::vector<double> alpha, double beta) {
  return std::make_shared<LogitChoiceModel>(std::move(alpha), beta);
}

McTransitionModel::McTransitionModel(const UtilitySpec& spec, std::size_t draws,
                                     std::uint64_t seed)
    : table_(std::make_shared<const DrawTable>(
          DrawTable::Generate(spec, seed, draws))),
      seed_(seed),
      seeded_(true) {}

McTransitionModel::McTransitionModel(std::shared_ptr<const DrawTable> table)
    : table_(std::move(table)) {
  if (!table_ || table_->size() == 0) {
    throw InvalidArgument("Monte Carlo model needs draws");
  }
}

std::vector<std::uint64_t> McTransitionModel::Counts(
    std::span<const double> p, std::span<const double> p_post,
    double income) const {
  const std::size_t n = size();
  CheckPrices(p, n, "pre-change prices");
  CheckPrices(p_post, n, "post-change prices");
  std::vector<std::uint64_t> counts(n * n, 0);
  for (std::size_t r = 0; r < table_->size(); ++r) {
    const std::size_t i = table_->Choose(r, p, income);
    const std::size_t j = table_->Choose(r, p_post, income);
    ++counts[i * n + j];
  }
  return counts;
}

TransitionMatrix McTransitionModel::Probabilities(std::span<const double> p,
                                                  std::span<const double> p_post,
                                                  double income) const {
  const std::vector<std::uint64_t> counts = Counts(p, p_post, income);
  TransitionMatrix m(size());
  const double total = static_cast<double>(table_->size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    m.cells[c] = static_cast<double>(counts[c]) / total;
  }
  return m;
}

double McTransitionModel::Probability(std::size_t i, std::size_t j,
                                      std::span<const double> p,
                                      std::span<const double> p_post,
                                      double income) const {
  const std::size_t n = size();
  CheckPrices(p, n, "pre-change prices");
  CheckPrices(p_post, n, "post-change prices");
  std::uint64_t hits = 0;
  for (std::size_t r = 0; r < table_->size(); ++r) {
    if (table_->Choose(r, p, income) == i &&
        table_->Choose(r, p_post, income) == j) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(table_->size());
}

nlohmann::json McTransitionModel::Metadata() const {
  nlohmann::json j = {{"model", "monte_carlo_transition"},
                      {"n", size()},
                      {"draws", table_->size()}};
  if (seeded_) j["seed"] = seed_;
  return j;
}

McChoiceModel::McChoiceModel(std::shared_ptr<const DrawTable> table)
    : table_(std::move(table)) {
  if (!table_ || table_->size() == 0) {
    throw InvalidArgument("Monte Carlo model needs draws");
  }
}

std::vector<double> McChoiceModel::Probabilities(std::span<const double> prices,
                                                 double income) const {
  CheckPrices(prices, size(), "prices");
  std::vector<std::uint64_t> counts(size(), 0);
  for (std::size_t r = 0; r < table_->size(); ++r) {
    ++counts[table_->Choose(r, prices, income)];
  }
  std::vector<double> out(counts.begin(), counts.end());
  NormalizeShares(out);
  return out;
}

nlohmann::json McChoiceModel::Metadata() const {
  return {{"model", "monte_carlo_choice"}, {"n", size()},
          {"draws", table_->size()}};
}

KernelSmoother::KernelSmoother(std::vector<double> regressors, std::size_t dim,
                               const BandwidthRule& rule)
    : x_(std::move(regressors)), dim_(dim), count_(0) {
  if (dim_ == 0 || x_.empty() || x_.size() % dim_ != 0) {
    throw InvalidArgument("kernel smoother needs a non-empty sample");
  }
  count_ = x_.size() / dim_;
  bandwidths_.resize(dim_);
  if (rule.kind == BandwidthRule::Kind::kFixed) {
    if (rule.fixed.size() != 1 && rule.fixed.size() != dim_) {
      throw InvalidArgument("fixed bandwidth needs 1 or " +
                            std::to_string(dim_) + " entries");
    }
    for (std::size_t d = 0; d < dim_; ++d) {
      const double h = rule.fixed.size() == 1 ? rule.fixed[0] : rule.fixed[d];
      if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidArgument("bandwidth must be positive");
      }
      bandwidths_[d] = h;
    }
    return;
  }
  const double scale =
      kRuleOfThumbConstant *
      std::pow(static_cast<double>(count_), -1.0 / (4.0 + static_cast<double>(dim_)));
  for (std::size_t d = 0; d < dim_; ++d) {
    const double sd = SampleSd(x_, dim_, d, count_);
    bandwidths_[d] = sd > 0.0 ? scale * sd : kBandwidthFloor;
  }
}

bool KernelSmoother::Weights(std::span<const double> query,
                             std::vector<double>& out) const {
  if (query.size() != dim_) throw InvalidArgument("query has the wrong dimension");
  out.resize(count_);
  double best = kInf;
  for (std::size_t r = 0; r < count_; ++r) {
    const double* row = x_.data() + r * dim_;
    double q = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double u = (query[d] - row[d]) / bandwidths_[d];
      q += u * u;
    }
    out[r] = q;
    best = std::min(best, q);
  }
  for (double& q : out) q = std::exp(-0.5 * (q - best));
  return best > kExtrapolationRadius * kExtrapolationRadius;
}

NwChoiceEstimator::NwChoiceEstimator(const CrossSectionData& data,
                                     const BandwidthRule& rule)
    : n_(data.n),
      smoother_(
          [&] {
            if (data.rows.empty() || data.n == 0) {
              throw InvalidArgument("kernel estimation needs data");
            }
            std::vector<double> x;
            x.reserve(data.rows.size() * (data.n + 1));
            for (const CrossSectionRow& row : data.rows) {
              CheckPrices(row.budget.prices, data.n, "data prices");
              x.insert(x.end(), row.budget.prices.begin(), row.budget.prices.end());
              x.push_back(row.budget.income);
            }
            return x;
          }(),
          data.n + 1, rule) {
  choices_.reserve(data.rows.size());
  for (const CrossSectionRow& row : data.rows) {
    if (row.choice >= n_) throw InvalidArgument("choice index out of range");
    choices_.push_back(row.choice);
  }
}

NwChoiceEstimate NwChoiceEstimator::Estimate(std::span<const double> prices,
                                             double income) const {
  CheckPrices(prices, n_, "query prices");
  std::vector<double> query(prices.begin(), prices.end());
  query.push_back(income);
  std::vector<double> w;
  NwChoiceEstimate out;
  out.extrapolated = smoother_.Weights(query, w);
  if (out.extrapolated) extrapolated_.fetch_add(1, std::memory_order_relaxed);
  out.probabilities.assign(n_, 0.0);
  for (std::size_t r = 0; r < w.size(); ++r) out.probabilities[choices_[r]] += w[r];
  NormalizeShares(out.probabilities);
  return out;
}

std::vector<double> NwChoiceEstimator::Probabilities(std::span<const double> prices,
                                                     double income) const {
  return Estimate(prices, income).probabilities;
}

nlohmann::json NwChoiceEstimator::Metadata() const {
  nlohmann::json j = SmootherMetadata(smoother_);
  j["model"] = "nadaraya_watson_choice";
  j["n"] = n_;
  j["extrapolated_queries"] = extrapolated_queries();
  return j;
}

NwTransitionEstimator::NwTransitionEstimator(const PanelData& data,
                                             const BandwidthRule& rule)
    : n_(data.n),
      smoother_(
          [&] {
            if (data.rows.empty() || data.n == 0) {
              throw InvalidArgument("kernel estimation needs data");
            }
            std::vector<double> x;
            x.reserve(data.rows.size() * (2 * data.n + 1));
            for (const PanelRow& row : data.rows) {
              CheckPrices(row.prices, data.n, "data prices");
              CheckPrices(row.prices_post, data.n, "data post prices");
              x.insert(x.end(), row.prices.begin(), row.prices.end());
              x.insert(x.end(), row.prices_post.begin(), row.prices_post.end());
              x.push_back(row.income);
            }
            return x;
          }(),
          2 * data.n + 1, rule) {
  cells_.reserve(data.rows.size());
  for (const PanelRow& row : data.rows) {
    if (row.choice_pre >= n_ || row.choice_post >= n_) {
      throw InvalidArgument("choice index out of range");
    }
    cells_.push_back(row.choice_pre * n_ + row.choice_post);
  }
}

NwTransitionEstimate NwTransitionEstimator::Estimate(
    std::span<const double> p, std::span<const double> p_post,
    double income) const {
  CheckPrices(p, n_, "query prices");
  CheckPrices(p_post, n_, "query post prices");
  std::vector<double> query(p.begin(), p.end());
  query.insert(query.end(), p_post.begin(), p_post.end());
  query.push_back(income);
  std::vector<double> w;
  NwTransitionEstimate out{TransitionMatrix(n_), false};
  out.extrapolated = smoother_.Weights(query, w);
  if (out.extrapolated) extrapolated_.fetch_add(1, std::memory_order_relaxed);
  std::vector<double>& cells = out.probabilities.cells;
  for (std::size_t r = 0; r < w.size(); ++r) cells[cells_[r]] += w[r];
  NormalizeShares(cells);
  return out;
}

TransitionMatrix NwTransitionEstimator::Probabilities(
    std::span<const double> p, std::span<const double> p_post,
    double income) const {
  return Estimate(p, p_post, income).probabilities;
}

nlohmann::json NwTransitionEstimator::Metadata() const {
  nlohmann::json j = SmootherMetadata(smoother_);
  j["model"] = "nadaraya_watson_transition";
  j["n"] = n_;
  j["extrapolated_queries"] = extrapolated_queries();
  return j;
}

NormalizedBudgets NormalizeIncome(std::span<const double> p,
                                  std::span<const double> p_post, double y,
                                  double y_post) {
  if (p.size() != p_post.size()) {
    throw InvalidArgument("price vectors differ in length");
  }
  NormalizedBudgets out;
  out.prices.assign(p.begin(), p.end());
  out.income = y;
  out.prices_post.resize(p_post.size());
  for (std::size_t c = 0; c < p_post.size(); ++c) {
    out.prices_post[c] = (p_post[c] - y_post) + y;
  }
  return out;
}

OutsideOptionShift::OutsideOptionShift(ChoiceModelPtr model, std::size_t o,
                                       double delta)
    : model_(std::move(model)), o_(o), delta_(delta) {
  if (!model_) throw InvalidArgument("outside-option shift needs a model");
  if (o_ >= model_->size()) throw InvalidArgument("outside option out of range");
  if (!std::isfinite(delta_)) throw InvalidArgument("shift not finite");
}

std::shared_ptr<OutsideOptionShift> OutsideOptionShift::Anchored(
    ChoiceModelPtr model, std::size_t o, double anchor) {
  auto out = std::make_shared<OutsideOptionShift>(std::move(model), o, anchor);
  out->anchored_ = true;
  return out;
}

std::vector<double> OutsideOptionShift::Probabilities(
    std::span<const double> prices, double income) const {
  CheckPrices(prices, size(), "prices");
  const double delta = anchored_ ? prices[o_] - delta_ : delta_;
  if (delta == 0.0) return model_->Probabilities(prices, income);
  std::vector<double> shifted(prices.begin(), prices.end());
  for (double& v : shifted) v -= delta;
  if (anchored_) shifted[o_] = delta_;
  return model_->Probabilities(shifted, income - delta);
}

nlohmann::json OutsideOptionShift::Metadata() const {
  nlohmann::json j = {{"model", "outside_option_shift"},
                      {"outside_option", o_},
                      {"inner", model_->Metadata()}};
  if (anchored_) {
    j["anchor"] = delta_;
  } else {
    j["delta"] = delta_;
  }
  return j;
}

OutsideOptionTransitionShift::OutsideOptionTransitionShift(
    TransitionModelPtr model, std::size_t o, double delta)
    : model_(std::move(model)), o_(o), delta_(delta) {
  if (!model_) throw InvalidArgument("outside-option shift needs a model");
  if (o_ >= model_->size()) throw InvalidArgument("outside option out of range");
  if (!std::isfinite(delta_)) throw InvalidArgument("shift not finite");
}

TransitionMatrix OutsideOptionTransitionShift::Probabilities(
    std::span<const double> p, std::span<const double> p_post,
    double income) const {
  std::vector<double> a(p.begin(), p.end());
  std::vector<double> b(p_post.begin(), p_post.end());
  for (double& v : a) v -= delta_;
  for (double& v : b) v -= delta_;
  return model_->Probabilities(a, b, income - delta_);
}

nlohmann::json OutsideOptionTransitionShift::Metadata() const {
  return {{"model", "outside_option_shift"},
          {"outside_option", o_},
          {"delta", delta_},
          {"inner", model_->Metadata()}};
}

}  // namespace nosdist
