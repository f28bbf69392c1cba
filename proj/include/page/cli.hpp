#pragma once

#include "page/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace page::cli {

enum ExitCode { kOk = 0, kUsage = 1, kFloor = 2, kInternal = 3 };

struct BudgetList {
  std::vector<int> top_k;
  std::vector<double> keep_ratio;

  std::vector<Budget> budgets() const;
};

struct ExportFlags {
  bool json = true;
  bool csv = true;
  int dot = 0;  // number of instances exported as explanation JSON + DOT
};

struct RunConfig {
  std::string dataset = "ba-shapes";
  std::filesystem::path data_root;  // TU datasets only
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  TargetTrainOptions target;
  std::optional<double> min_accuracy;  // train-target quality floor
  ExplainerConfig explainer;
  StageConfig stage;
  BudgetList budgets;
  ExportFlags exports;
};

// Per-dataset defaults: top-K budgets for the synthetic sets, keep-ratios
// for the molecular ones.
RunConfig default_config(const std::string& dataset);

nlohmann::json to_json(const RunConfig& config);
// Fields absent from `j` keep their value in `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base);

// Every component draws from its own seed expanded from the root seed.
struct DerivedSeeds {
  std::uint64_t dataset, split, target_init, target_train, explainer_init, explainer_train, evaluation;
};
DerivedSeeds derive_seeds(std::uint64_t root);
nlohmann::json to_json(const DerivedSeeds& seeds);

// Output layout under RunConfig::out.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path target() const { return root / "target.json"; }
  std::filesystem::path target_log() const { return root / "target_log.csv"; }
  std::filesystem::path explainer() const { return root / "explainer.json"; }
  std::filesystem::path history() const { return root / "history.csv"; }
  std::filesystem::path metrics_json() const { return root / "metrics.json"; }
  std::filesystem::path metrics_csv() const { return root / "metrics.csv"; }
  std::filesystem::path explanations() const { return root / "explanations"; }
  std::filesystem::path manifest(const std::string& verb) const { return root / "manifests" / (verb + ".json"); }
};

int cmd_prepare(const RunConfig& config, std::ostream& out);
int cmd_train_target(const RunConfig& config, std::ostream& out);
int cmd_train_explainer(const RunConfig& config, std::ostream& out);
int cmd_evaluate(const RunConfig& config, std::ostream& out);

// Parses arguments, dispatches, and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace page::cli
