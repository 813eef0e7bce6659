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

#include "nosdist/cli/run.h"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "nosdist/bounds.h"
#include "nosdist/errors.h"
#include "nosdist/io.h"
#include "nosdist/probability.h"
#include "nosdist/social.h"

namespace nosdist::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Writes artifacts into the output directory and remembers their digests.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void Write(const std::string& name,
             const std::function<void(std::ostream&)>& emit) {
    const fs::path path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw InvalidArgument("cannot write " + path.string());
      emit(out);
      if (!out) throw InvalidArgument("failed writing " + path.string());
    }
    written_.push_back({{"file", name}, {"sha256", FileDigest(path)}});
  }

  void WriteJson(const std::string& name, const json& j) {
    Write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  const json& written() const { return written_; }

 private:
  fs::path dir_;
  json written_ = json::array();
};

struct Models {
  std::shared_ptr<const DrawTable> table;
  ChoiceModelPtr choice;
  TransitionModelPtr transition;
};

BandwidthRule Rule(const ModelSection& m) {
  if (m.bandwidth.empty()) return BandwidthRule::RuleOfThumb();
  if (m.bandwidth.size() == 1) return BandwidthRule::Fixed(m.bandwidth[0]);
  return BandwidthRule::Fixed(m.bandwidth);
}

CrossSectionData LoadCrossSection(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  return ReadCrossSectionCsv(in);
}

PanelData LoadPanel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path);
  return ReadPanelCsv(in);
}

// Draw tables are only generated when something reads them.
Models BuildModels(const RunConfig& c, bool need_transition) {
  const ModelSection& m = c.model;
  Models out;
  auto table = [&] {
    if (!out.table) {
      out.table = std::make_shared<const DrawTable>(
          DrawTable::Generate(*m.utility, c.seed, m.draws));
    }
    return out.table;
  };
  switch (m.probability) {
    case ProbabilitySource::kLogit: {
      const auto& l = std::get<AdditiveLogit>(m.utility->form);
      out.choice = MakeLogitChoiceModel(l.alpha, l.beta);
      if (need_transition) {
        out.transition = std::make_shared<McTransitionModel>(table());
      }
      break;
    }
    case ProbabilitySource::kMonteCarlo:
      out.choice = std::make_shared<McChoiceModel>(table());
      if (need_transition) {
        out.transition = std::make_shared<McTransitionModel>(table());
      }
      break;
    case ProbabilitySource::kKernel:
      out.choice = std::make_shared<NwChoiceEstimator>(
          LoadCrossSection(m.cross_section), Rule(m));
      if (need_transition) {
        out.transition = std::make_shared<NwTransitionEstimator>(
            LoadPanel(m.panel), Rule(m));
      }
      break;
  }
  return out;
}

bool LevelNeedsTransition(const LevelMode& mode) {
  return mode.kind == LevelMode::Kind::kJointWithPostChoice ||
         mode.kind == LevelMode::Kind::kConditionalOnPostChoice;
}

bool VariationNeedsTransition(const VariationMode& mode) {
  using K = VariationMode::Kind;
  return mode.kind == K::kJoint || mode.kind == K::kConditionalOnBoth ||
         mode.kind == K::kConditionalOnPost;
}

json ModelsMetadata(const Models& models) {
  json j = {{"choice", models.choice->Metadata()}};
  if (models.transition) j["transition"] = models.transition->Metadata();
  return j;
}

GridRequest Grid(const AnalysisSection& a) {
  if (!a.grid.empty()) return GridRequest::Explicit(a.grid);
  GridRequest g;
  g.size = a.grid_size;
  return g;
}

void RunSimulate(const RunConfig& c, Artifacts& art) {
  const AnalysisSection& a = c.analysis;
  const double jitter = a.price_jitter;
  const BudgetSet base{a.p, a.y};
  BudgetSampler sampler = FixedBudget(base);
  if (jitter > 0.0) {
    sampler = [base, jitter](std::mt19937_64& rng) {
      BudgetSet b = base;
      std::uniform_real_distribution<double> u(-jitter, jitter);
      for (double& p : b.prices) p += u(rng);
      return b;
    };
  }
  const CrossSectionData cs =
      SimulateCrossSection(*c.model.utility, sampler, a.count, c.seed);
  art.Write("cross_section.csv",
            [&](std::ostream& os) { WriteCrossSectionCsv(os, cs); });
  if (!a.p_post.empty()) {
    IncomeSampler income = FixedIncome(a.y);
    if (jitter > 0.0) {
      income = [y = a.y, jitter](std::mt19937_64& rng) {
        return std::uniform_real_distribution<double>(y - jitter,
                                                      y + jitter)(rng);
      };
    }
    const PanelData panel = SimulatePanel(*c.model.utility, a.p, a.p_post,
                                          income, a.count, c.seed);
    art.Write("panel.csv", [&](std::ostream& os) { WritePanelCsv(os, panel); });
  }
}

void RunEstimate(const RunConfig& c, Artifacts& art) {
  const ModelSection& m = c.model;
  const AnalysisSection& a = c.analysis;
  json summary = json::object();
  if (!m.cross_section.empty()) {
    const NwChoiceEstimator est(LoadCrossSection(m.cross_section), Rule(m));
    const NwChoiceEstimate e = est.Estimate(a.p, a.y);
    art.Write("choice_probabilities.csv", [&](std::ostream& os) {
      os << "alternative,probability\n";
      for (std::size_t k = 0; k < e.probabilities.size(); ++k) {
        os << k << ',' << FormatDouble(e.probabilities[k]) << '\n';
      }
    });
    summary["choice"] = est.Metadata();
    summary["choice"]["extrapolated"] = e.extrapolated;
  }
  if (!m.panel.empty()) {
    const NwTransitionEstimator est(LoadPanel(m.panel), Rule(m));
    const NwTransitionEstimate e = est.Estimate(a.p, a.p_post, a.y);
    art.Write("transition_probabilities.csv", [&](std::ostream& os) {
      os << "i,j,probability\n";
      for (std::size_t i = 0; i < e.probabilities.n; ++i) {
        for (std::size_t j = 0; j < e.probabilities.n; ++j) {
          os << i << ',' << j << ',' << FormatDouble(e.probabilities(i, j))
             << '\n';
        }
      }
    });
    summary["transition"] = est.Metadata();
    summary["transition"]["extrapolated"] = e.extrapolated;
  }
  art.WriteJson("estimate.json", summary);
}

void RunBounds(const RunConfig& c, Artifacts& art) {
  const AnalysisSection& a = c.analysis;
  const Models models = BuildModels(c, false);
  const BoundMatrices b =
      TransitionBoundMatrices(*models.choice, a.p, a.p_post, a.y);
  art.Write("bounds.csv", [&](std::ostream& os) {
    os << "i,j,lower,upper\n";
    for (std::size_t i = 0; i < b.lower.n; ++i) {
      for (std::size_t j = 0; j < b.lower.n; ++j) {
        os << i << ',' << j << ',' << FormatDouble(b.lower(i, j)) << ','
           << FormatDouble(b.upper(i, j)) << '\n';
      }
    }
  });
  art.WriteJson("metadata.json", ModelsMetadata(models));
}

void WriteCurve(const CurveResult& r, const Models& models, Artifacts& art) {
  art.Write("curve.csv", [&](std::ostream& os) { WriteCurveCsv(os, r.curve); });
  art.WriteJson("curve.json", r.curve.Sidecar());
  json meta = r.metadata;
  meta["models"] = ModelsMetadata(models);
  art.WriteJson("metadata.json", meta);
}

void RunWelfare(const RunConfig& c, Artifacts& art) {
  const AnalysisSection& a = c.analysis;
  bool need_transition = false;
  switch (a.quantity) {
    case Quantity::kLevel:
      need_transition = LevelNeedsTransition(a.level_mode);
      break;
    case Quantity::kLevelDifference:
      need_transition = true;
      break;
    default:
      need_transition = VariationNeedsTransition(a.variation_mode);
  }
  const Models models = BuildModels(c, need_transition);
  const ModelPair pair{models.transition.get(), models.choice.get()};

  switch (a.quantity) {
    case Quantity::kLevel: {
      const NOSFamily family = NOSFamily::Mmu({a.reference_prices, a.y});
      const bool post = LevelNeedsTransition(a.level_mode);
      const CurveResult r =
          LevelDistribution(pair, family, a.k, a.p[a.k], post ? a.p_post : a.p,
                            a.y, a.level_mode, Grid(a));
      WriteCurve(r, models, art);
      return;
    }
    case Quantity::kCompensatingVariation:
    case Quantity::kEquivalentVariation: {
      const VariationKind kind = a.quantity == Quantity::kCompensatingVariation
                                     ? VariationKind::kCompensating
                                     : VariationKind::kEquivalent;
      WriteCurve(VariationDistribution(pair, a.p, a.p_post, a.y, kind,
                                       a.variation_mode, Grid(a)),
                 models, art);
      return;
    }
    case Quantity::kMmuCvJoint:
    case Quantity::kMmuEvJoint: {
      const JointGridResult r =
          a.quantity == Quantity::kMmuCvJoint
              ? MmuCvJoint(pair, a.p, a.p_post, a.y, a.variation_mode,
                           a.w_grid, a.z_grid)
              : MmuEvJoint(pair, a.p, a.p_post, a.y, a.variation_mode,
                           a.w_grid, a.z_grid);
      art.Write("joint.csv", [&](std::ostream& os) { WriteJointCsv(os, r); });
      json meta = r.metadata;
      meta["models"] = ModelsMetadata(models);
      art.WriteJson("metadata.json", meta);
      return;
    }
    case Quantity::kLevelDifference: {
      const NOSFamily f0 = NOSFamily::Mmu({a.reference_prices, a.y});
      const NOSFamily f1 = NOSFamily::Mmu({a.reference_prices_post, a.y});
      const QuadratureResult r =
          LevelDifferenceJoint(*models.transition, f0, f1, a.p, a.p_post, a.y,
                               a.i, a.j, a.w, a.z, a.quadrature);
      json out = {{"probability", r.probability},
                  {"i", a.i},
                  {"j", a.j},
                  {"w", a.w},
                  {"z", a.z},
                  {"quadrature", r.Metadata()},
                  {"models", ModelsMetadata(models)}};
      art.WriteJson("level_difference.json", out);
      return;
    }
  }
}

void RunSwf(const RunConfig& c, Artifacts& art) {
  const AnalysisSection& a = c.analysis;
  std::ifstream in(a.population);
  if (!in) throw InvalidArgument("cannot read " + a.population);
  const PopulationSample population = ReadPopulationCsv(in);
  const Models models = BuildModels(c, false);
  const NOSFamily family = NOSFamily::Mmu({a.reference_prices, a.y});
  const AversionFunction h =
      a.aversion == AversionKind::kIdentity
          ? AversionFunction::Identity()
          : AversionFunction::NegativeExponential(a.aversion_coefficient);
  json out = Swf(*models.choice, family, h, population, Grid(a)).ToJson();
  out["aversion"] = h.label();
  if (!a.delta_p.empty()) {
    out["delta_p"] = a.delta_p;
    out["difference"] =
        SwfDifference(*models.choice, family, h, population, {a.delta_p}, Grid(a));
  }
  out["models"] = ModelsMetadata(models);
  art.WriteJson("swf.json", out);
}

json ErrorRecord(const std::string& code, const std::string& message,
                 const std::vector<std::string>& problems = {}) {
  json j = {{"code", code}, {"message", message}};
  if (!problems.empty()) j["problems"] = problems;
  return j;
}

int Fail(const fs::path& dir, const json& record, std::ostream& err) {
  err << "nosdist: " << record.at("message").get<std::string>() << '\n';
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  if (out) out << record.dump(2) << '\n';
  return record.at("code") == "config" ? 2 : 1;
}

}  // namespace

std::string FileDigest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InvalidArgument("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

int Run(const RunConfig& config, std::ostream& err) {
  const fs::path dir(config.out);
  try {
    fs::create_directories(dir);
    fs::remove(dir / "error.json");
    Artifacts art(dir);
    switch (config.command) {
      case Command::kSimulate: RunSimulate(config, art); break;
      case Command::kEstimate: RunEstimate(config, art); break;
      case Command::kBounds: RunBounds(config, art); break;
      case Command::kWelfare: RunWelfare(config, art); break;
      case Command::kSwf: RunSwf(config, art); break;
    }
    json inputs = json::array();
    for (const std::string& path :
         {config.model.cross_section, config.model.panel,
          config.analysis.population}) {
      if (path.empty() || config.command == Command::kSimulate) continue;
      inputs.push_back({{"path", path}, {"sha256", FileDigest(path)}});
    }
    const json manifest = {{"tool", "nosdist"},
                           {"version", kVersion},
                           {"command", ToString(config.command)},
                           {"seed", config.seed},
                           {"config", EmitConfig(config)},
                           {"inputs", inputs},
                           {"outputs", art.written()}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw InvalidArgument("failed writing manifest.json");
    return 0;
  } catch (const ConfigError& e) {
    return Fail(dir, ErrorRecord(e.code(), e.what(), e.problems()), err);
  } catch (const Error& e) {
    return Fail(dir, ErrorRecord(e.code(), e.what()), err);
  } catch (const std::exception& e) {
    return Fail(dir, ErrorRecord("internal", e.what()), err);
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"Welfare distributions for discrete-choice random utility models"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  for (const char* name : {"simulate", "estimate", "bounds", "welfare", "swf"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name +
                                                 " pipeline");
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--out", out_dir, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const bool seed_given = sub->count("--seed") > 0;

  fs::path fallback_dir = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError({"cannot read config file '" + config_path + "'"});
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError({"config file is not valid JSON: " +
                         std::string(e.what())});
    }
    if (!j.is_object()) throw ConfigError({"config must be a JSON object"});
    if (out_dir.empty() && j.contains("out") && j["out"].is_string()) {
      fallback_dir = j["out"].get<std::string>();
    }
    if (!j.contains("command")) j["command"] = command;
    if (j["command"] != command) {
      throw ConfigError({"config.command is " + j["command"].dump() +
                         " but the subcommand is '" + command + "'"});
    }
    if (seed_given) j["seed"] = seed;
    if (!out_dir.empty()) j["out"] = out_dir;
    const RunConfig config =
        ParseConfig(j, fs::path(config_path).parent_path());
    return Run(config, std::cerr);
  } catch (const ConfigError& e) {
    return Fail(fallback_dir, ErrorRecord(e.code(), e.what(), e.problems()),
                std::cerr);
  }
}

}  // namespace nosdist::cli
