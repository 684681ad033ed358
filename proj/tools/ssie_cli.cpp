//
// Copyright 2026 The SSIE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//


// ssie: command-line front end.
//
//   ssie simulate --n 16 --iters 10000 --seed 7
//   ssie model pvc --n 100 --r 0.2 --s 0.2
//   ssie model curves --exponents 0.5,1,2 --s 0.9
//   ssie model threshold --p 0.5 --odd-only
//   ssie model bias --r 0.2 --s1 0.3 --s2 0.1 --exponent 2
//   ssie audit --data data/adult.data --schema schemas/adult.schema.json
//
// Tables go to stdout; CSV/JSON files and a manifest go to --out.
// Exit codes: 0 ok, 2 usage, 3 data, 4 numerical.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssie/ssie.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Collects output files so the manifest can list their digests.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    if (dir_.empty()) return;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw ssie::UsageError("cannot create output directory '" + dir_ + "'");
    }
  }

  bool enabled() const { return !dir_.empty(); }

  void Write(const std::string& name, const std::string& content) {
    if (!enabled()) return;
    const fs::path path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw ssie::UsageError("cannot write '" + path.string() + "'");
    files_.push_back({name, ssie::Sha256Hex(content)});
  }

  void WriteManifest(ssie::OrderedJson manifest) {
    if (!enabled()) return;
    ssie::OrderedJson outputs = ssie::OrderedJson::array();
    for (const auto& [name, digest] : files_) {
      outputs.push_back({{"file", name}, {"sha256", digest}});
    }
    manifest["outputs"] = outputs;
    const fs::path path = fs::path(dir_) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw ssie::UsageError("cannot write '" + path.string() + "'");
    std::cout << "wrote " << files_.size() + 1 << " files to " << dir_ << '\n';
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

ssie::OrderedJson Manifest(const std::string& command, std::uint64_t seed,
                           ssie::OrderedJson parameters) {
  ssie::OrderedJson m;
  m["tool"] = "ssie";
  m["version"] = ssie::kVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["parameters"] = std::move(parameters);
  return m;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::int64_t n = 16;
  std::int64_t iterations = 10000;
  std::uint64_t seed = 7;
  std::int64_t shards = 1;
  std::string out;
};

int RunSimulate(const SimulateArgs& a) {
  const auto table =
      ssie::SimulateGeneratingProbabilities(a.n, a.iterations, a.seed, a.shards);
  ssie::PrintGeneratingTable(std::cout, table);
  OutputDir dir(a.out);
  std::ostringstream csv;
  ssie::WriteGeneratingTableCsv(csv, table);
  dir.Write("generating_probabilities.csv", csv.str());
  dir.WriteManifest(Manifest("simulate", a.seed,
                             {{"n", a.n},
                              {"iterations", a.iterations},
                              {"shards", a.shards}}));
  return 0;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
  // pvc
  std::int64_t n = 100;
  double r = 0.2;
  std::optional<double> s;
  std::optional<double> s1;
  std::optional<double> s2;
  double a = 1.0;
  double b = 1.0;
  // curves / threshold / bias
  std::vector<double> exponents;
  std::vector<double> s_grid;
  double fraction = 0.2;
  std::int64_t n_max = 100;
  double p = 0.5;
  bool odd_only = false;
  double exponent = 2.0;
  std::uint64_t seed = 7;
  std::string out;
};

double RateOr(const std::optional<double>& specific,
              const std::optional<double>& shared, double fallback) {
  if (specific) return *specific;
  if (shared) return *shared;
  return fallback;
}

int RunModelPvc(const ModelArgs& a) {
  ssie::PvcScenario s;
  s.total = a.n;
  s.minority_fraction = a.r;
  s.majority_rate = RateOr(a.s1, a.s, 0.2);
  s.minority_rate = RateOr(a.s2, a.s, 0.2);
  s.prior = ssie::BetaPrior(a.a, a.b);
  const auto result = ssie::SinglePvcScenario(s);
  ssie::PrintScenario(std::cout, s, result);
  OutputDir dir(a.out);
  dir.Write("scenario.json", ssie::ToJson(s, result).dump(2) + "\n");
  dir.WriteManifest(Manifest("model pvc", a.seed,
                             {{"n", s.total},
                              {"r", s.minority_fraction},
                              {"s1", s.majority_rate},
                              {"s2", s.minority_rate},
                              {"a", a.a},
                              {"b", a.b}}));
  return 0;
}

std::string ExponentLabel(double x) { return "exponent_" + ssie::FormatDouble(x); }

int RunModelCurves(const ModelArgs& a) {
  const std::vector<double> exponents =
      a.exponents.empty() ? ssie::DefaultExponentGrid() : a.exponents;
  const std::vector<double> qualities =
      a.s_grid.empty() ? ssie::DefaultQualityGrid() : a.s_grid;
  const double quality = a.s.value_or(0.9);
  const ssie::BetaPrior prior(a.a, a.b);

  const auto by_exponent = ssie::UnderpredictionByExponent(
      exponents, a.n_max, quality, a.fraction, prior);
  std::cout << "Underprediction vs power-law exponent (S=" << quality
            << ", group fraction=" << a.fraction << ", F<=" << a.n_max
            << ")\n";
  for (const auto& p : by_exponent) {
    std::cout << "  " << ssie::FormatFixed(p.x, 2) << "  "
              << ssie::FormatPercent(p.value, 2) << '\n';
  }

  // One column per exponent, one row per S.
  std::ostringstream wide;
  wide << "S";
  for (double x : exponents) wide << ',' << ExponentLabel(x);
  wide << '\n';
  std::vector<std::vector<ssie::CurvePoint>> by_quality;
  for (double x : exponents) {
    by_quality.push_back(ssie::UnderpredictionByQuality(
        qualities, ssie::LeafSizeDistribution(x, a.n_max), a.fraction, prior));
  }
  std::cout << "\nUnderprediction vs leaf quality S\n  S    ";
  for (double x : exponents) std::cout << "  x=" << ssie::FormatFixed(x, 1);
  std::cout << '\n';
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    wide << ssie::FormatDouble(qualities[i]);
    std::cout << "  " << ssie::FormatFixed(qualities[i], 2);
    for (const auto& curve : by_quality) {
      wide << ',' << ssie::FormatDouble(curve[i].value);
      std::cout << "  " << ssie::FormatFixed(100.0 * curve[i].value, 2);
    }
    wide << '\n';
    std::cout << '\n';
  }

  OutputDir dir(a.out);
  std::ostringstream csv;
  ssie::WriteCurveCsv(csv, "exponent", "underprediction", by_exponent);
  dir.Write("underprediction_by_exponent.csv", csv.str());
  dir.Write("underprediction_by_quality.csv", wide.str());
  dir.WriteManifest(Manifest("model curves", a.seed,
                             {{"exponents", exponents},
                              {"s", quality},
                              {"s_grid", qualities},
                              {"fraction", a.fraction},
                              {"n_max", a.n_max},
                              {"a", a.a},
                              {"b", a.b}}));
  return 0;
}

int RunModelThreshold(const ModelArgs& a) {
  const std::vector<double> exponents =
      a.exponents.empty() ? ssie::DefaultExponentGrid() : a.exponents;
  const auto support = a.odd_only ? ssie::LeafSizeDistribution::Support::kOddOnly
                                  : ssie::LeafSizeDistribution::Support::kAll;
  std::vector<ssie::CurvePoint> curve;
  std::cout << "Predicted target rate under a 0.5 threshold (p=" << a.p
            << ", F<=" << a.n_max << (a.odd_only ? ", odd sizes" : "")
            << ")\n";
  for (double x : exponents) {
    const ssie::LeafSizeDistribution d(x, a.n_max, support);
    const double rate = ssie::ThresholdGroupRate(d, a.p);
    curve.push_back({x, rate});
    std::cout << "  " << ssie::FormatFixed(x, 2) << "  "
              << ssie::FormatFixed(rate, 6) << '\n';
  }
  OutputDir dir(a.out);
  std::ostringstream csv;
  ssie::WriteCurveCsv(csv, "exponent", "predicted_rate", curve);
  dir.Write("threshold_by_exponent.csv", csv.str());
  dir.WriteManifest(Manifest("model threshold", a.seed,
                             {{"p", a.p},
                              {"odd_only", a.odd_only},
                              {"exponents", exponents},
                              {"n_max", a.n_max}}));
  return 0;
}

int RunModelBias(const ModelArgs& a) {
  const double s1 = RateOr(a.s1, a.s, 0.3);
  const double s2 = RateOr(a.s2, a.s, 0.1);
  const ssie::LeafSizeDistribution d(a.exponent, a.n_max);
  const double b = ssie::AggregateBias(d, a.r, s1, s2);
  std::cout << "Aggregate bias ratio (R=" << a.r << ", S1=" << s1
            << ", S2=" << s2 << ", exponent=" << a.exponent
            << ", F<=" << a.n_max << "): " << ssie::FormatFixed(b, 6) << '\n';
  OutputDir dir(a.out);
  ssie::OrderedJson j{{"aggregate_bias", b}};
  dir.Write("bias.json", j.dump(2) + "\n");
  dir.WriteManifest(Manifest("model bias", a.seed,
                             {{"r", a.r},
                              {"s1", s1},
                              {"s2", s2},
                              {"exponent", a.exponent},
                              {"n_max", a.n_max}}));
  return 0;
}

// ---------------------------------------------------------------------------

struct AuditArgs {
  std::vector<std::string> data;
  std::string schema;
  std::uint64_t seed = 7;
  std::string protocol = "train-on-all";
  int folds = 5;
  double holdout = 0.3;
  bool per_subset = false;
  bool exclude_split_feature = false;
  std::optional<int> max_depth;
  std::int64_t min_split = 2;
  std::int64_t min_leaf = 1;
  unsigned threads = 1;
  std::optional<std::string> group;
  std::int64_t min_minority = 100;
  std::string out;
  bool dump_encoded = false;
  bool dump_tree = false;
};

int RunAudit(const AuditArgs& a) {
  const auto schema = ssie::SchemaConfig::FromFile(a.schema);
  const auto d = ssie::LoadCsv(a.data, schema);

  ssie::AuditConfig config;
  config.tree.max_depth = a.max_depth;
  config.tree.min_samples_split = a.min_split;
  config.tree.min_samples_leaf = a.min_leaf;
  config.tree.seed = a.seed;
  config.protocol.kind = ssie::EvaluationProtocol::ParseKind(a.protocol);
  config.protocol.folds = a.folds;
  config.protocol.holdout_fraction = a.holdout;
  config.protocol.seed = a.seed;
  config.protocol.per_subset = a.per_subset;
  config.protocol.exclude_split_feature = a.exclude_split_feature;
  config.filter.min_minority = a.min_minority;
  config.threads = a.threads;
  config.group = a.group;

  const auto result = ssie::RunAudit(d, config);
  ssie::PrintAuditSummary(std::cout, result);

  bool undefined = false;
  for (const auto& name : ssie::HeadlineCells()) {
    if (!result.correlations.Cell(name).value) undefined = true;
  }
  if (undefined) {
    std::cerr << "warning: some correlations are undefined (fewer than "
              << ssie::kMinCorrelationPoints
              << " splits or zero variance in bias or predictor)\n";
  }

  OutputDir dir(a.out);
  dir.Write("report.json", ssie::ToJson(result).dump(2) + "\n");
  std::ostringstream rows;
  ssie::WriteAuditRowsCsv(rows, result);
  dir.Write("audit_rows.csv", rows.str());
  std::ostringstream corr;
  corr << "cell,pearson,points\n";
  for (const auto& c : result.correlations.cells) {
    corr << c.name << ',' << (c.value ? ssie::FormatDouble(*c.value) : "")
         << ',' << c.points << '\n';
  }
  dir.Write("correlations.csv", corr.str());
  if (a.dump_encoded) {
    std::ostringstream enc;
    d.WriteCsv(enc);
    dir.Write("encoded.csv", enc.str());
  }
  if (a.dump_tree) {
    std::ostringstream tree;
    ssie::TrainTree(d, config.tree).Dump(tree);
    dir.Write("tree.txt", tree.str());
  }

  ssie::OrderedJson inputs = ssie::OrderedJson::array();
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inputs.push_back({{"path", a.data[i]},
                      {"sha256", d.provenance().source_digests[i]}});
  }
  inputs.push_back({{"path", a.schema}, {"sha256", ssie::FileSha256(a.schema)}});
  auto manifest = Manifest(
      "audit", a.seed,
      {{"protocol", config.protocol.Name()},
       {"folds", a.folds},
       {"holdout", a.holdout},
       {"max_depth", a.max_depth ? ssie::OrderedJson(*a.max_depth)
                                 : ssie::OrderedJson(nullptr)},
       {"min_split", a.min_split},
       {"min_leaf", a.min_leaf},
       {"min_minority", a.min_minority},
       {"group", a.group ? ssie::OrderedJson(*a.group)
                         : ssie::OrderedJson(nullptr)}});
  manifest["inputs"] = inputs;
  manifest["content_digest"] = result.content_digest;
  dir.WriteManifest(std::move(manifest));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-sample inference bias: simulation, analytic models and "
               "decision-tree audits"};
  app.set_version_flag("--version", std::string(ssie::kVersion));
  app.set_config("--config", "", "TOML/INI file of option defaults; flags override");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Mean generating probability per observed K (Monte Carlo)");
  simulate->add_option("--n", sim.n, "Trials per sample (N)")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 20));
  simulate->add_option("--iters", sim.iterations, "Iterations")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--shards", sim.shards, "Independent RNG streams")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output directory");

  ModelArgs model;
  auto* model_cmd = app.add_subcommand("model", "Analytic models");
  model_cmd->require_subcommand(1);
  model_cmd->add_option("--seed", model.seed, "Recorded in the manifest");

  auto* pvc = model_cmd->add_subcommand("pvc", "Single predictor-combination scenario");
  pvc->add_option("--n", model.n, "Sample size");
  pvc->add_option("--r", model.r, "Minority fraction R");
  pvc->add_option("--s", model.s, "Target rate in both groups");
  pvc->add_option("--s1", model.s1, "Majority target rate");
  pvc->add_option("--s2", model.s2, "Minority target rate");
  pvc->add_option("--a", model.a, "Beta prior a");
  pvc->add_option("--b", model.b, "Beta prior b");
  pvc->add_option("--out", model.out, "Output directory");

  auto* curves = model_cmd->add_subcommand("curves", "Underprediction curves");
  curves->add_option("--exponents", model.exponents, "Power-law exponents")
      ->delimiter(',');
  curves->add_option("--s", model.s, "Leaf quality for the exponent curve");
  curves->add_option("--s-grid", model.s_grid, "Leaf qualities")->delimiter(',');
  curves->add_option("--fraction", model.fraction, "Group fraction of each leaf");
  curves->add_option("--n-max", model.n_max, "Largest leaf size");
  curves->add_option("--a", model.a, "Beta prior a");
  curves->add_option("--b", model.b, "Beta prior b");
  curves->add_option("--out", model.out, "Output directory");

  auto* threshold = model_cmd->add_subcommand("threshold", "0.5-threshold model");
  threshold->add_option("--p", model.p, "Generating probability");
  threshold->add_flag("--odd-only", model.odd_only, "Odd leaf sizes only");
  threshold->add_option("--exponents", model.exponents, "Power-law exponents")
      ->delimiter(',');
  threshold->add_option("--n-max", model.n_max, "Largest leaf size");
  threshold->add_option("--out", model.out, "Output directory");

  auto* bias = model_cmd->add_subcommand("bias", "Aggregate leaf bias ratio");
  bias->add_option("--r", model.r, "Minority fraction R");
  bias->add_option("--s", model.s, "Target rate in both groups");
  bias->add_option("--s1", model.s1, "Majority target rate");
  bias->add_option("--s2", model.s2, "Minority target rate");
  bias->add_option("--exponent", model.exponent, "Power-law exponent");
  bias->add_option("--n-max", model.n_max, "Largest leaf size");
  bias->add_option("--out", model.out, "Output directory");

  AuditArgs audit;
  auto* audit_cmd = app.add_subcommand("audit", "Decision-tree bias audit");
  audit_cmd->add_option("--data", audit.data, "CSV file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  audit_cmd->add_option("--schema", audit.schema, "Schema JSON")
      ->required()
      ->check(CLI::ExistingFile);
  audit_cmd->add_option("--seed", audit.seed, "Random seed");
  audit_cmd->add_option("--protocol", audit.protocol,
                        "train-on-all, cv or holdout");
  audit_cmd->add_option("--folds", audit.folds, "Cross-validation folds");
  audit_cmd->add_option("--holdout", audit.holdout, "Held-out fraction");
  audit_cmd->add_flag("--per-subset", audit.per_subset,
                      "Train one model per split side");
  audit_cmd->add_flag("--exclude-split-feature", audit.exclude_split_feature,
                      "Withhold the split's source column from training");
  audit_cmd->add_option("--max-depth", audit.max_depth, "Tree depth limit");
  audit_cmd->add_option("--min-split", audit.min_split, "Min samples to split");
  audit_cmd->add_option("--min-leaf", audit.min_leaf, "Min samples per leaf");
  audit_cmd->add_option("--threads", audit.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  audit_cmd->add_option("--group", audit.group, "Group feature, e.g. sex=Female");
  audit_cmd->add_option("--min-minority", audit.min_minority,
                        "Smallest minority side kept");
  audit_cmd->add_option("--out", audit.out, "Output directory");
  audit_cmd->add_flag("--dump-encoded", audit.dump_encoded,
                      "Write the one-hot matrix");
  audit_cmd->add_flag("--dump-tree", audit.dump_tree,
                      "Write the tree trained on all rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return RunSimulate(sim);
    if (*pvc) return RunModelPvc(model);
    if (*curves) return RunModelCurves(model);
    if (*threshold) return RunModelThreshold(model);
    if (*bias) return RunModelBias(model);
    if (*audit_cmd) return RunAudit(audit);
  } catch (const ssie::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ssie::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ssie::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
