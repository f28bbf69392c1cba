#include "page/cli.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace page::cli {

using nlohmann::json;

namespace {

void check_dataset(const std::string& name) {
  const auto names = supported_datasets();
  if (std::find(names.begin(), names.end(), name) != names.end()) return;
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw UsageError("unknown dataset '" + name + "'; supported: " + list);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// 64-bit FNV-1a over file contents, hex encoded.
std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

// Hashes of every regular file under each output, keyed relative to the run root.
json output_hashes(const Layout& layout, const std::vector<std::filesystem::path>& outputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& p : outputs) {
    if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::recursive_directory_iterator(p))
        if (e.is_regular_file()) files.push_back(e.path());
    } else if (std::filesystem::exists(p)) {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  json out = json::object();
  for (const auto& f : files) out[std::filesystem::relative(f, layout.root).generic_string()] = file_hash(f);
  return out;
}

void write_manifest(const Layout& layout, const std::string& verb, const RunConfig& config, json extra,
                    const std::vector<std::filesystem::path>& outputs) {
  json m{{"command", verb},
         {"finished_at", utc_now()},
         {"config", to_json(config)},
         {"seeds", to_json(derive_seeds(config.seed))},
         {"nondeterminism",
          "wall-clock fields only; results are bit-for-bit reproducible on the same build and platform"}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  m["outputs"] = output_hashes(layout, outputs);
  write_text(layout.manifest(verb), m.dump(2) + "\n");
}

DatasetBundle load_prepared(const Layout& layout) {
  if (!std::filesystem::exists(layout.data() / "manifest.json"))
    throw UsageError("no prepared dataset under " + layout.data().string() + "; run 'prepare' first");
  return load_bundle(layout.data());
}

TargetModel load_required_target(const Layout& layout) {
  if (!std::filesystem::exists(layout.target()))
    throw UsageError("no target checkpoint at " + layout.target().string() + "; run 'train-target' first");
  return load_target(layout.target());
}

std::string target_log_csv(const std::vector<TargetEpochLog>& log) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << "epoch,loss,train_accuracy,val_accuracy\n";
  for (const auto& e : log) ss << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',' << e.val_accuracy << '\n';
  return ss.str();
}

}  // namespace

std::vector<Budget> BudgetList::budgets() const {
  std::vector<Budget> out;
  for (int k : top_k) out.push_back(Budget::top(k));
  for (double r : keep_ratio) out.push_back(Budget::ratio(r));
  return out;
}

RunConfig default_config(const std::string& dataset) {
  RunConfig c;
  c.dataset = dataset;
  if (dataset == "ba-shapes") {
    c.budgets.top_k = {5, 6, 7, 8, 9};
  } else if (dataset == "tree-cycles") {
    c.budgets.top_k = {6, 7, 8, 9, 10};
  } else {
    c.budgets.keep_ratio = {0.5, 0.6, 0.7, 0.8, 0.9};
  }
  return c;
}

json to_json(const RunConfig& c) {
  auto stage = to_json(c.stage);
  stage.erase("seed");
  auto target = to_json(c.target);
  target.erase("seed");
  target["min_accuracy"] = c.min_accuracy ? json(*c.min_accuracy) : json(nullptr);
  stage["causal_dim"] = c.explainer.causal_dim;
  stage["decoder_hidden"] = c.explainer.decoder_hidden;
  stage["readout"] = c.explainer.readout == Readout::mean ? "mean" : "max";
  return {{"dataset", c.dataset},
          {"data_root", c.data_root.string()},
          {"seed", c.seed},
          {"out", c.out.string()},
          {"target", target},
          {"explainer", stage},
          {"budgets", {{"top_k", c.budgets.top_k}, {"keep_ratio", c.budgets.keep_ratio}}},
          {"export", {{"json", c.exports.json}, {"csv", c.exports.csv}, {"dot", c.exports.dot}}}};
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    if (j.contains("dataset")) {
      const auto name = j.at("dataset").get<std::string>();
      if (name != c.dataset) {
        const auto d = default_config(name);
        c.dataset = name;
        c.budgets = d.budgets;
      }
    }
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("target")) {
      const auto& t = j.at("target");
      c.target = target_options_from_json(t, c.target);
      if (t.contains("min_accuracy"))
        c.min_accuracy = t.at("min_accuracy").is_null() ? std::nullopt
                                                          : std::optional<double>(t.at("min_accuracy").get<double>());
    }
    if (j.contains("explainer")) {
      const auto& e = j.at("explainer");
      c.stage = stage_config_from_json(e, c.stage);
      c.explainer.variant = c.stage.variant;
      c.explainer.causal_dim = e.value("causal_dim", c.explainer.causal_dim);
      c.explainer.decoder_hidden = e.value("decoder_hidden", c.explainer.decoder_hidden);
      if (e.contains("readout")) {
        const auto r = e.at("readout").get<std::string>();
        if (r != "mean" && r != "max") throw UsageError("readout must be 'mean' or 'max'");
        c.explainer.readout = r == "mean" ? Readout::mean : Readout::max;
      }
    }
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      c.budgets.top_k = b.value("top_k", std::vector<int>{});
      c.budgets.keep_ratio = b.value("keep_ratio", std::vector<double>{});
    }
    if (j.contains("export")) {
      const auto& e = j.at("export");
      c.exports.json = e.value("json", c.exports.json);
      c.exports.csv = e.value("csv", c.exports.csv);
      c.exports.dot = e.value("dot", c.exports.dot);
    }
  } catch (const json::exception& err) {
    throw UsageError(std::string("config: ") + err.what());
  } catch (const ParameterError& err) {
    throw UsageError(std::string("config: ") + err.what());
  }
  return c;
}

DerivedSeeds derive_seeds(std::uint64_t root) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32)};
  std::array<std::uint32_t, 14> words{};
  seq.generate(words.begin(), words.end());
  auto pick = [&](int i) {
    return (static_cast<std::uint64_t>(words[2 * i]) << 32) | static_cast<std::uint64_t>(words[2 * i + 1]);
  };
  return {pick(0), pick(1), pick(2), pick(3), pick(4), pick(5), pick(6)};
}

json to_json(const DerivedSeeds& s) {
  return {{"dataset", s.dataset},
          {"split", s.split},
          {"target_init", s.target_init},
          {"target_train", s.target_train},
          {"explainer_init", s.explainer_init},
          {"explainer_train", s.explainer_train},
          {"evaluation", s.evaluation}};
}

int cmd_prepare(const RunConfig& config, std::ostream& out) {
  check_dataset(config.dataset);
  const Layout layout{config.out};
  const auto seeds = derive_seeds(config.seed);
  const auto start = std::chrono::steady_clock::now();
  DatasetBundle bundle;
  if (config.dataset == "ba-shapes") {
    bundle = generate_ba_shapes(seeds.dataset);
  } else if (config.dataset == "tree-cycles") {
    bundle = generate_tree_cycles(seeds.dataset);
  } else {
    if (config.data_root.empty()) throw UsageError("dataset '" + config.dataset + "' needs --data-root");
    bundle = make_splits(load_tu_dataset(config.data_root, config.dataset), {0.8, 0.1, 0.1}, seeds.split);
  }
  save_bundle(bundle, layout.data());
  write_manifest(layout, "prepare", config, {{"elapsed_ms", elapsed_ms(start)}}, {layout.data()});
  std::size_t nodes = 0;
  for (const auto& g : bundle.graphs) nodes += static_cast<std::size_t>(g.num_nodes());
  out << "prepared " << bundle.name << ": " << bundle.graphs.size() << " graph(s), " << nodes << " nodes, splits "
      << bundle.splits.train.size() << '/' << bundle.splits.val.size() << '/' << bundle.splits.test.size() << '\n';
  return kOk;
}

int cmd_train_target(const RunConfig& config, std::ostream& out) {
  const Layout layout{config.out};
  const auto bundle = load_prepared(layout);
  const auto seeds = derive_seeds(config.seed);
  const auto start = std::chrono::steady_clock::now();
  auto model = make_target_model(bundle.task, bundle.graphs.at(0).feature_dim(), bundle.num_classes, seeds.target_init);
  auto options = config.target;
  options.seed = seeds.target_train;
  const auto result = train_target(std::move(model), bundle, options);
  save_target(layout.target(), result.model);
  write_text(layout.target_log(), target_log_csv(result.log));
  write_manifest(layout, "train-target", config,
                 {{"elapsed_ms", elapsed_ms(start)},
                  {"best_epoch", result.best_epoch},
                  {"test_accuracy", result.test_accuracy}},
                 {layout.target(), layout.target_log()});
  out << "target " << bundle.name << ": test accuracy " << result.test_accuracy << " (best epoch "
      << result.best_epoch << ")\n";
  if (config.min_accuracy && result.test_accuracy < *config.min_accuracy) {
    out << "test accuracy below floor " << *config.min_accuracy << '\n';
    return kFloor;
  }
  return kOk;
}

int cmd_train_explainer(const RunConfig& config, std::ostream& out) {
  const Layout layout{config.out};
  const auto bundle = load_prepared(layout);
  const auto target = load_required_target(layout);
  const auto seeds = derive_seeds(config.seed);
  const auto start = std::chrono::steady_clock::now();
  auto explainer_config = config.explainer;
  explainer_config.variant = config.stage.variant;
  auto model = make_explainer(bundle.task, target.input_dim, target.num_classes, explainer_config, seeds.explainer_init);
  model.dataset = bundle.name;
  auto stage = config.stage;
  stage.seed = seeds.explainer_train;
  const auto result = train_explainer(std::move(model), target, bundle, stage);
  save_explainer(layout.explainer(), result.model);
  write_text(layout.history(), history_csv(result.history));
  write_manifest(layout, "train-explainer", config,
                 {{"elapsed_ms", elapsed_ms(start)}, {"epochs", result.history.size()}},
                 {layout.explainer(), layout.history()});
  out << "explainer " << bundle.name << ": " << result.history.size() << " epochs";
  if (!result.history.empty()) out << ", final loss " << result.history.back().terms.total;
  out << '\n';
  return kOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  const Layout layout{config.out};
  const auto bundle = load_prepared(layout);
  const auto target = load_required_target(layout);
  if (!std::filesystem::exists(layout.explainer()))
    throw UsageError("no explainer checkpoint at " + layout.explainer().string() + "; run 'train-explainer' first");
  const auto model = load_explainer(layout.explainer());
  const auto instances = evaluation_instances(bundle);
  const auto budgets = config.budgets.budgets();

  auto report = evaluate(model, target, instances, budgets);
  report.dataset = bundle.name;
  report.seed = config.seed;
  if (config.exports.json) write_text(layout.metrics_json(), report.to_json(false) + "\n");
  if (config.exports.csv) write_text(layout.metrics_csv(), report.to_csv(false));

  const int samples = std::min<int>(config.exports.dot, static_cast<int>(instances.size()));
  if (samples > 0) {
    const auto budget = budgets.empty() ? Budget::ratio(1.0) : budgets.front();
    for (int i = 0; i < samples; ++i) {
      const auto& inst = instances[static_cast<std::size_t>(i)];
      const auto e = explain_instance(model, target, inst, budget);
      const auto stem = layout.explanations() / ("instance_" + std::to_string(inst.source));
      const int graph_id = bundle.task == Task::node ? 0 : inst.source;
      write_text(stem.string() + ".json", explanation_to_json(e, graph_id).dump(2) + "\n");
      write_text(stem.string() + ".dot", explanation_to_dot(e, graph_id));
    }
  }

  json timing = json::array();
  for (const auto& r : report.records) timing.push_back({{"budget", r.budget}, {"inference_ms", r.inference_ms}});
  write_manifest(layout, "evaluate", config, {{"instances", instances.size()}, {"timing", timing}},
                 {layout.metrics_json(), layout.metrics_csv(), layout.explanations()});

  out << "evaluated " << instances.size() << " instance(s) of " << bundle.name << '\n';
  out << report.to_csv(false);
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train graph classifiers and explain them with a generative explainer", "page"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, dataset, data_root, variant, readout;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, stage1, stage2, causal_dim, decoder_hidden, dot, instances_per_epoch;
  std::optional<double> lr, min_accuracy, gamma, explainer_lr;
  std::vector<int> top_k;
  std::vector<double> keep_ratio;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--dataset", dataset, "ba-shapes, tree-cycles, Mutagenicity or NCI1");
  app.add_option("--data-root", data_root, "directory holding TU-format files");

  auto* prepare = app.add_subcommand("prepare", "generate or load a dataset and cache it");
  auto* train_target_cmd = app.add_subcommand("train-target", "train the classifier to be explained");
  train_target_cmd->add_option("--epochs", epochs, "maximum training epochs");
  train_target_cmd->add_option("--lr", lr, "learning rate");
  train_target_cmd->add_option("--min-accuracy", min_accuracy, "exit with code 2 below this test accuracy");
  auto* train_explainer_cmd = app.add_subcommand("train-explainer", "train the explainer in two stages");
  train_explainer_cmd->add_option("--stage1-epochs", stage1, "epochs of the first stage");
  train_explainer_cmd->add_option("--stage2-epochs", stage2, "epochs of the second stage");
  train_explainer_cmd->add_option("--lr", explainer_lr, "learning rate");
  train_explainer_cmd->add_option("--gamma", gamma, "target mask density");
  train_explainer_cmd->add_option("--variant", variant, "vgae or gae")->check(CLI::IsMember({"vgae", "gae"}));
  train_explainer_cmd->add_option("--causal-dim", causal_dim, "width of the causal latent block");
  train_explainer_cmd->add_option("--decoder-hidden", decoder_hidden,
                                  "width of the decoder perceptron; 0 keeps the decoder parameter-free");
  train_explainer_cmd->add_option("--readout", readout, "mean or max")->check(CLI::IsMember({"mean", "max"}));
  train_explainer_cmd->add_option("--instances-per-epoch", instances_per_epoch, "0 uses the whole train split");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score explanations over the configured budgets");
  evaluate_cmd->add_option("--top-k", top_k, "top-K budgets")->delimiter(',');
  evaluate_cmd->add_option("--keep-ratio", keep_ratio, "keep-ratio budgets")->delimiter(',');
  evaluate_cmd->add_flag("--no-budgets", "evaluate with an empty budget list");
  evaluate_cmd->add_option("--dot", dot, "export this many explanations as JSON and DOT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig config = default_config(dataset.empty() ? "ba-shapes" : dataset);
    if (!config_path.empty()) config = config_from_json(read_json(config_path), config);
    if (!dataset.empty() && dataset != config.dataset) {
      const auto d = default_config(dataset);
      config.dataset = dataset;
      config.budgets = d.budgets;
    }
    if (!data_root.empty()) config.data_root = data_root;
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out = out_dir;
    if (epochs) config.target.epochs = *epochs;
    if (lr) config.target.lr = *lr;
    if (min_accuracy) config.min_accuracy = *min_accuracy;
    if (stage1) config.stage.epochs_stage1 = *stage1;
    if (stage2) config.stage.epochs_stage2 = *stage2;
    if (explainer_lr) config.stage.lr = *explainer_lr;
    if (gamma) config.stage.gamma = *gamma;
    if (!variant.empty()) config.stage.variant = variant == "vgae" ? Variant::vgae : Variant::gae;
    config.explainer.variant = config.stage.variant;
    if (causal_dim) config.explainer.causal_dim = *causal_dim;
    if (decoder_hidden) config.explainer.decoder_hidden = *decoder_hidden;
    if (!readout.empty()) config.explainer.readout = readout == "mean" ? Readout::mean : Readout::max;
    if (instances_per_epoch) config.stage.instances_per_epoch = *instances_per_epoch;
    if (!top_k.empty() || !keep_ratio.empty()) config.budgets = {top_k, keep_ratio};
    if (evaluate_cmd->count("--no-budgets") > 0) config.budgets = {};
    if (dot) config.exports.dot = *dot;
    check_dataset(config.dataset);
    try {
      config.stage.validate();
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }

    if (prepare->parsed()) return cmd_prepare(config, out);
    if (train_target_cmd->parsed()) return cmd_train_target(config, out);
    if (train_explainer_cmd->parsed()) return cmd_train_explainer(config, out);
    return cmd_evaluate(config, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DatasetFormatError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace page::cli
