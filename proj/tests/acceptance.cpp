// Acceptance checks, one report line per criterion. Exit codes: 0 when every
// criterion of the group was evaluated (FAIL lines included), 77 when the
// group cannot run here, 1 with --strict if anything failed, 3 on error.

#include "fixtures.hpp"
#include "page/cli.hpp"
#include "page/metrics.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace page;

namespace {

constexpr int kSkip = 77;

class Report {
 public:
  explicit Report(std::filesystem::path file) : file_(std::move(file)) {}

  void line(const std::string& status, const std::string& id, const std::string& text) {
    std::ostringstream ss;
    ss << '[' << status << "] " << id << ' ' << text;
    std::cout << ss.str() << std::endl;
    lines_.push_back(ss.str());
    if (status == "FAIL") ++failed_;
    if (status == "BLOCKED") ++blocked_;
  }
  void check(bool ok, const std::string& id, const std::string& text) { line(ok ? "PASS" : "FAIL", id, text); }
  void note(const std::string& text) { std::cout << "  " << text << std::endl; }

  int failed() const { return failed_; }
  int blocked() const { return blocked_; }
  std::size_t size() const { return lines_.size(); }

  void save() const {
    if (file_.empty()) return;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_);
    for (const auto& l : lines_) out << l << '\n';
  }

 private:
  std::filesystem::path file_;
  std::vector<std::string> lines_;
  int failed_ = 0;
  int blocked_ = 0;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string fmt_list(const std::vector<double>& v, int digits = 3) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i], digits);
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// One end-to-end run with the CLI's defaults and seed derivation.
struct PipelineRun {
  DatasetBundle bundle;
  TargetTrainResult target;
  double target_s = 0.0;
  ExplainerTrainResult explainer;
  ExplainerModel initial;
  double explainer_s = 0.0;  // training plus evaluation
  std::vector<Instance> evaluated;
  MetricsReport metrics;
};

PipelineRun run_pipeline(const std::string& dataset, std::uint64_t root_seed, const std::filesystem::path& tu_root,
                         const std::vector<Budget>& extra_budgets = {}) {
  const auto config = cli::default_config(dataset);
  const auto seeds = cli::derive_seeds(root_seed);
  PipelineRun run;
  if (dataset == "ba-shapes") {
    run.bundle = generate_ba_shapes(seeds.dataset);
  } else if (dataset == "tree-cycles") {
    run.bundle = generate_tree_cycles(seeds.dataset);
  } else {
    run.bundle = make_splits(load_tu_dataset(tu_root, dataset), {0.8, 0.1, 0.1}, seeds.split);
  }

  auto start = std::chrono::steady_clock::now();
  auto target = make_target_model(run.bundle.task, run.bundle.graphs.at(0).feature_dim(), run.bundle.num_classes,
                                   seeds.target_init);
  auto target_options = config.target;
  target_options.seed = seeds.target_train;
  run.target = train_target(std::move(target), run.bundle, target_options);
  run.target_s = seconds_since(start);

  start = std::chrono::steady_clock::now();
  auto explainer_config = config.explainer;
  explainer_config.variant = config.stage.variant;
  run.initial = make_explainer(run.bundle.task, run.target.model.input_dim, run.target.model.num_classes,
                               explainer_config, seeds.explainer_init);
  auto stage = config.stage;
  stage.seed = seeds.explainer_train;
  run.explainer = train_explainer(run.initial, run.target.model, run.bundle, stage);
  run.evaluated = evaluation_instances(run.bundle);
  auto budgets = config.budgets.budgets();
  for (const auto& b : extra_budgets) budgets.push_back(b);
  run.metrics = evaluate(run.explainer.model, run.target.model, run.evaluated, budgets);
  run.explainer_s = seconds_since(start);
  return run;
}

const BudgetRecord& record(const MetricsReport& report, const std::string& budget) {
  for (const auto& r : report.records)
    if (r.budget == budget) return r;
  throw std::runtime_error("no metrics for budget " + budget);
}

// Identities that must hold bit-for-bit: keeping every edge costs nothing,
// removing no edge costs nothing, and a full mask is the unmasked path.
struct IdentityCheck {
  double infidelity_full = 0.0;
  double fidelity_empty = 0.0;
  double max_abs_diff = 0.0;
};

IdentityCheck identities(const TargetModel& target, const std::vector<Instance>& instances) {
  std::vector<Eigen::MatrixXd> full, empty;
  IdentityCheck c;
  for (const auto& inst : instances) {
    const auto& a = inst.graph.adjacency;
    full.push_back((a.array() != 0.0).cast<double>().matrix());
    empty.push_back(Eigen::MatrixXd::Zero(a.rows(), a.cols()));
    const Eigen::MatrixXd diff = (predict_masked(target, inst.graph, full.back()) - predict(target, inst.graph)).cwiseAbs();
    c.max_abs_diff = std::max(c.max_abs_diff, diff.maxCoeff());
  }
  c.infidelity_full = infidelity(target, instances, full);
  c.fidelity_empty = fidelity(target, instances, empty);
  return c;
}

void report_identities(Report& rep, const std::string& id, const std::string& dataset,
                       const std::vector<IdentityCheck>& checks) {
  IdentityCheck worst;
  for (const auto& c : checks) {
    worst.infidelity_full = std::max(worst.infidelity_full, std::abs(c.infidelity_full));
    worst.fidelity_empty = std::max(worst.fidelity_empty, std::abs(c.fidelity_empty));
    worst.max_abs_diff = std::max(worst.max_abs_diff, c.max_abs_diff);
  }
  const bool ok = worst.infidelity_full == 0.0 && worst.fidelity_empty == 0.0 && worst.max_abs_diff == 0.0;
  std::ostringstream ss;
  ss << "exact identities " << dataset << ": infidelity(full) " << worst.infidelity_full << ", fidelity(empty) "
     << worst.fidelity_empty << ", max|predict_masked(full) - predict| " << worst.max_abs_diff << " (all == 0)";
  rep.check(ok, id, ss.str());
}

struct SyntheticCase {
  std::string dataset;
  std::string tag;  // criterion suffix
  double target_floor;
  std::vector<int> scored_k;
  double explanation_floor;
  double edge_floor;
};

void group_synthetic(Report& rep, const SyntheticCase& setup, int num_seeds) {
  std::vector<PipelineRun> runs;
  for (int s = 0; s < num_seeds; ++s) {
    runs.push_back(run_pipeline(setup.dataset, static_cast<std::uint64_t>(s), {}, {Budget::top(6)}));
    const auto& r = runs.back();
    rep.note("seed " + std::to_string(s) + ": target " + fmt(r.target.test_accuracy) + " in " + fmt(r.target_s, 1) +
             " s, explainer+eval " + fmt(r.explainer_s, 1) + " s, " + std::to_string(r.evaluated.size()) +
             " instances");
  }

  {
    std::vector<double> acc;
    double worst_s = 0.0;
    for (const auto& r : runs) {
      acc.push_back(r.target.test_accuracy);
      worst_s = std::max(worst_s, r.target_s);
    }
    const double lo = *std::min_element(acc.begin(), acc.end());
    rep.check(lo >= setup.target_floor && worst_s <= 900.0, "1" + setup.tag,
              "target accuracy " + setup.dataset + " per seed: " + fmt_list(acc) + " (each >= " +
                  fmt(setup.target_floor, 2) + "), slowest " + fmt(worst_s, 1) + " s (<= 900 s)");
  }

  {
    std::vector<double> per_k;
    bool ok = true;
    double worst_s = 0.0;
    for (int k : setup.scored_k) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(record(r.metrics, "top-" + std::to_string(k)).explanation_accuracy);
      per_k.push_back(mean(v));
      ok = ok && per_k.back() >= setup.explanation_floor;
    }
    for (const auto& r : runs) worst_s = std::max(worst_s, r.explainer_s);
    rep.check(ok && worst_s <= 600.0, "2" + setup.tag,
              "explanation accuracy " + setup.dataset + " top-" + std::to_string(setup.scored_k.front()) + ".." +
                  std::to_string(setup.scored_k.back()) + ", mean of " + std::to_string(num_seeds) +
                  " seeds: " + fmt_list(per_k) + " (each >= " + fmt(setup.explanation_floor, 2) + "), slowest " +
                  fmt(worst_s, 1) + " s (<= 600 s)");
  }

  {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(record(r.metrics, "top-6").edge_accuracy.value_or(0.0));
    rep.check(mean(v) >= setup.edge_floor, "4" + setup.tag,
              "edge accuracy " + setup.dataset + " at top-6 (motif size), per seed " + fmt_list(v) + ", mean " +
                  fmt(mean(v)) + " (>= " + fmt(setup.edge_floor, 2) + ")");
  }

  {
    std::vector<double> v;
    bool ok = true;
    for (const auto& r : runs) {
      v.push_back(r.metrics.mean_mask_ratio);
      ok = ok && v.back() >= 0.35 && v.back() <= 0.65;
    }
    rep.check(ok, "5" + setup.tag,
              "mean soft-mask ratio " + setup.dataset + " over test instances, per seed " + fmt_list(v) +
                  " (each in [0.35, 0.65], gamma 0.5)");
  }

  {
    std::vector<IdentityCheck> checks;
    for (const auto& r : runs) checks.push_back(identities(r.target.model, r.evaluated));
    report_identities(rep, "6" + setup.tag, setup.dataset, checks);
  }

  if (setup.dataset == "ba-shapes") {
    std::vector<double> before, after;
    bool ok = true;
    for (const auto& r : runs) {
      const auto val = make_instances(r.bundle, r.bundle.splits.val);
      before.push_back(discriminator_gap(r.initial, r.target.model, val));
      after.push_back(discriminator_gap(r.explainer.after_stage_one, r.target.model, val));
      ok = ok && after.back() < before.back();
    }
    rep.check(ok, "8",
              "validation KL[P(Y|g(Zc)) || P_phi(Y|Zc)] ba-shapes, initial -> after stage one per seed: " +
                  fmt_list(before, 4) + " -> " + fmt_list(after, 4) + " (strict decrease in every seed)");
  }
}

// Five-node instance with random features, target and explainer.
struct FdCase {
  Instance instance;
  TargetModel target;
  ExplainerModel model;
  Eigen::RowVectorXd original;
  Eigen::MatrixXd noise;
};

FdCase fd_case(Task task, std::uint64_t seed, bool frozen) {
  std::mt19937_64 rng(seed);
  FdCase c;
  c.instance.graph = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}, {0, 4}}, 3);
  c.instance.graph.features = fixtures::random_matrix(5, 3, rng);
  if (task == Task::node) c.instance.center = static_cast<int>(seed % 5);
  c.target = make_target_model(task, 3, 3, seed);
  c.model = make_explainer(task, 3, 3, {}, seed + 1);
  c.model.discriminator_frozen = frozen;
  c.original = instance_prediction(predict(c.target, c.instance.graph), c.instance);
  c.noise = fixtures::random_matrix(5, 16, rng);
  return c;
}

// Worst relative error over every parameter entry.
double stage_gradient_error(Stage stage, Task task, std::uint64_t seed, int& entries) {
  auto c = fd_case(task, seed, stage == Stage::two);
  StageConfig cfg;
  const auto ev = evaluate_stage(stage, c.model, c.target, c.instance, c.original, cfg, &c.noise, true);
  auto params = c.model.encoder_parameters();
  auto grads = ev.encoder_grads;
  if (stage == Stage::one) {
    for (auto* p : c.model.discriminator_parameters()) params.push_back(p);
    for (const auto& g : ev.discriminator_grads) grads.push_back(g);
  }
  if (params.size() != grads.size()) throw std::runtime_error("gradient blocks do not match parameters");
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& p = *params[b];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p.data()[i];
      p.data()[i] = keep + h;
      const double up = evaluate_stage(stage, c.model, c.target, c.instance, c.original, cfg, &c.noise, false).terms.total;
      p.data()[i] = keep - h;
      const double down =
          evaluate_stage(stage, c.model, c.target, c.instance, c.original, cfg, &c.noise, false).terms.total;
      p.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double an = grads[b].data()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-5}));
      ++entries;
    }
  }
  return worst;
}

void group_numerics(Report& rep) {
  for (auto stage : {Stage::one, Stage::two}) {
    double worst = 0.0;
    int entries = 0;
    for (auto task : {Task::node, Task::graph})
      for (std::uint64_t seed : {11u, 12u}) worst = std::max(worst, stage_gradient_error(stage, task, seed, entries));
    const std::string name = stage == Stage::one ? "stage-1" : "stage-2";
    rep.check(worst < 1e-4, stage == Stage::one ? "7a" : "7b",
              name + " loss gradients vs central differences on a 5-node instance: worst relative error " +
                  fmt(worst * 1e6, 3) + "e-6 over " + std::to_string(entries) + " entries (< 1e-4)");
  }

  // Closed-form Gaussian KL against E_q[log q(z) - log p(z)] from 1e5 draws.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto mu = fixtures::random_matrix(4, 16, rng, 0.8);
  const auto logvar = fixtures::random_matrix(4, 16, rng, 0.5);
  const double closed = vgae_kl(mu, logvar);
  const int draws = 100000;
  double acc = 0.0;
  for (int s = 0; s < draws; ++s)
    for (Eigen::Index i = 0; i < mu.rows(); ++i)
      for (Eigen::Index d = 0; d < mu.cols(); ++d) {
        const double sigma = std::exp(0.5 * logvar(i, d));
        const double eps = normal(rng);
        const double z = mu(i, d) + sigma * eps;
        acc += -0.5 * eps * eps - std::log(sigma) + 0.5 * z * z;
      }
  const double estimate = acc / draws / static_cast<double>(mu.rows());
  const double rel = std::abs(estimate - closed) / closed;
  rep.check(rel < 0.01, "7c",
            "VGAE KL closed form " + fmt(closed, 5) + " vs 1e5-sample Monte Carlo " + fmt(estimate, 5) +
                ": relative gap " + fmt(rel * 100, 3) + "% (< 1%)");
}

// Label 1 graphs carry a triangle; the explanation budget is the motif size.
void group_oracle(Report& rep) {
  constexpr int k = 3;
  const auto train = fixtures::triangle_dataset(400, 101);
  auto target = make_target_model(Task::graph, 4, 2, 102);
  TargetTrainOptions topts;
  topts.seed = 103;
  const auto trained = train_target(std::move(target), train, topts);
  rep.note("toy target test accuracy " + fmt(trained.test_accuracy));

  ExplainerConfig econfig;
  auto model = make_explainer(Task::graph, 4, 2, econfig, 104);
  StageConfig stage;
  stage.seed = 105;
  const auto explainer = train_explainer(std::move(model), trained.model, train, stage).model;

  const auto fresh = fixtures::triangle_dataset(50, 106);
  std::vector<Instance> instances;
  for (int i = 0; i < static_cast<int>(fresh.graphs.size()); ++i) {
    Instance inst;
    inst.graph = fresh.graphs[static_cast<std::size_t>(i)];
    inst.source = i;
    instances.push_back(std::move(inst));
  }
  // Baseline per instance: mean probability over 20 random equal-size masks.
  constexpr int kRandomDraws = 20;
  std::vector<std::vector<Eigen::MatrixXd>> random;
  for (int r = 0; r < kRandomDraws; ++r) random.push_back(random_masks(instances, Budget::top(k), 107 + r));

  int close = 0, beats = 0, ties = 0, max_edges = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& g = instances[i].graph;
    Eigen::Index cls = 0;
    predict(trained.model, g).row(0).maxCoeff(&cls);
    auto prob = [&](const Eigen::MatrixXd& m) { return predict_masked(trained.model, g, m)(0, cls); };

    const auto edges = mask_edges((g.adjacency.array() != 0.0).cast<double>().matrix());
    max_edges = std::max(max_edges, static_cast<int>(edges.size()));
    const int m = static_cast<int>(edges.size());
    double best = 0.0;
    std::vector<bool> pick(static_cast<std::size_t>(m), false);
    std::fill(pick.begin(), pick.begin() + std::min(k, m), true);
    do {
      Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
      for (int e = 0; e < m; ++e)
        if (pick[static_cast<std::size_t>(e)]) {
          mask(edges[static_cast<std::size_t>(e)].first, edges[static_cast<std::size_t>(e)].second) = 1.0;
          mask(edges[static_cast<std::size_t>(e)].second, edges[static_cast<std::size_t>(e)].first) = 1.0;
        }
      best = std::max(best, prob(mask));
    } while (std::prev_permutation(pick.begin(), pick.end()));

    const double page = prob(explain_instance(explainer, trained.model, instances[i], Budget::top(k)).hard_mask);
    if (best - page <= 0.05) ++close;
    double baseline = 0.0;
    for (const auto& draw : random) baseline += prob(draw[i]) / kRandomDraws;
    if (page > baseline) ++beats;
    if (page == baseline) ++ties;
  }
  const double n = static_cast<double>(instances.size());
  rep.note("largest graph has " + std::to_string(max_edges) + " edges, budget top-" + std::to_string(k));
  rep.check(close / n >= 0.60, "9a",
            "PAGE top-3 within 0.05 of exhaustive best subset: " + std::to_string(close) + "/" +
                std::to_string(instances.size()) + " = " + fmt(close / n) + " (>= 0.60)");
  rep.check(beats / n >= 0.70, "9b",
            "PAGE top-3 strictly beats the mean of 20 random equal-size masks: " + std::to_string(beats) + "/" +
                std::to_string(instances.size()) + " = " + fmt(beats / n) + " (>= 0.70); exact ties " +
                std::to_string(ties));
}

void group_efficiency(Report& rep) {
  const auto bundle = generate_ba_shapes(cli::derive_seeds(0).dataset);
  std::vector<int> all(static_cast<std::size_t>(bundle.graphs.front().num_nodes()));
  std::iota(all.begin(), all.end(), 0);
  const auto instances = make_instances(bundle, all);
  // Inference cost does not depend on the trained weights.
  const auto model = make_explainer(Task::node, bundle.graphs.front().feature_dim(), bundle.num_classes, {}, 1);

  const auto t = measure_inference(model, instances);
  rep.check(t.forward_passes == t.instances, "10a",
            "encoder passes during inference: " + std::to_string(t.forward_passes) + " for " +
                std::to_string(t.instances) + " instances (one per instance)");

  // Node ids are ordered base graph first and per-instance cost is heavy
  // tailed, so prefixes or random draws change the mix. Workload j holds the
  // whole population j times; only the count varies.
  // Repeats run round-robin so a transient slowdown hits one timing of
  // several workloads instead of every timing of one.
  constexpr int kWorkloads = 8, kRounds = 5;
  std::vector<std::vector<Instance>> workloads(kWorkloads);
  for (int j = 0; j < kWorkloads; ++j)
    for (int r = 0; r <= j; ++r) workloads[j].insert(workloads[j].end(), instances.begin(), instances.end());
  std::vector<double> x, y(kWorkloads, std::numeric_limits<double>::infinity());
  for (const auto& w : workloads) x.push_back(static_cast<double>(w.size()));
  for (int r = 0; r < kRounds; ++r)
    for (int j = 0; j < kWorkloads; ++j) y[j] = std::min(y[j], measure_inference(model, workloads[j]).inference_ms);
  const auto fit = fit_line(x, y);
  rep.check(fit.r_squared > 0.95, "10b",
            "inference time vs instance count (" + std::to_string(x.size()) + " workloads of 700..5600, best of 5 interleaved): slope " +
                fmt(fit.slope, 4) + " ms/instance, R^2 " + fmt(fit.r_squared, 4) + " (> 0.95)");
}

std::filesystem::path tu_root_from_env() {
  const char* root = std::getenv("PAGE_TU_ROOT");
  return root == nullptr ? std::filesystem::path{} : std::filesystem::path(root);
}

bool has_tu(const std::filesystem::path& root, const std::string& name) {
  return !root.empty() && (std::filesystem::exists(root / name / (name + "_A.txt")) ||
                           std::filesystem::exists(root / (name + "_A.txt")));
}

struct RealCase {
  std::string dataset;
  std::string target_id, explain_id, identity_id;
  double target_floor, explain_floor;
};

int group_real_world(Report& rep) {
  const auto root = tu_root_from_env();
  const std::vector<RealCase> setups{{"Mutagenicity", "1c", "3a", "6c", 0.83, 0.78}, {"NCI1", "1d", "3b", "6d", 0.72, 0.80}};
  int ran = 0;
  for (const auto& setup : setups) {
    if (!has_tu(root, setup.dataset)) {
      const std::string why = setup.dataset + " TU files not found (set PAGE_TU_ROOT)";
      rep.line("BLOCKED", setup.target_id, "target accuracy " + setup.dataset + ": " + why);
      rep.line("BLOCKED", setup.explain_id, "explanation accuracy " + setup.dataset + " keep-0.9: " + why);
      rep.line("BLOCKED", setup.identity_id, "exact identities " + setup.dataset + ": " + why);
      if (setup.dataset == "Mutagenicity") rep.line("BLOCKED", "10c", "Mutagenicity test-set inference time: " + why);
      continue;
    }
    ++ran;
    const auto run = run_pipeline(setup.dataset, 0, root);
    rep.check(run.target.test_accuracy >= setup.target_floor && run.target_s <= 900.0, setup.target_id,
              "target accuracy " + setup.dataset + ": " + fmt(run.target.test_accuracy) + " (>= " +
                  fmt(setup.target_floor, 2) + "), " + fmt(run.target_s, 1) + " s (<= 900 s)");
    const double acc = record(run.metrics, "keep-0.9").explanation_accuracy;
    rep.check(acc >= setup.explain_floor && run.explainer_s <= 2700.0, setup.explain_id,
              "explanation accuracy " + setup.dataset + " keep-0.9: " + fmt(acc) + " (>= " +
                  fmt(setup.explain_floor, 2) + "), " + fmt(run.explainer_s, 1) + " s (<= 2700 s)");
    report_identities(rep, setup.identity_id, setup.dataset, {identities(run.target.model, run.evaluated)});
    if (setup.dataset == "Mutagenicity") {
      const auto t = measure_inference(run.explainer.model, run.evaluated);
      rep.check(t.inference_ms < 5000.0 && t.forward_passes == t.instances, "10c",
                "Mutagenicity test-set inference: " + fmt(t.inference_ms, 1) + " ms for " +
                    std::to_string(t.instances) + " graphs (< 5000 ms)");
    }
  }
  return ran;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks", "page_acceptance"};
  std::string group;
  std::string report_path;
  int seeds = 3;
  bool strict = false;
  app.add_option("group", group, "ba-shapes | tree-cycles | numerics | oracle | efficiency | real-world")
      ->required()
      ->check(CLI::IsMember({"ba-shapes", "tree-cycles", "numerics", "oracle", "efficiency", "real-world"}));
  app.add_option("--report", report_path, "Also write the report lines to this file");
  app.add_option("--seeds", seeds, "Root seeds for the synthetic groups")->check(CLI::Range(1, 10));
  app.add_flag("--strict", strict, "Exit 1 if any criterion fails");
  CLI11_PARSE(app, argc, argv);

  Report rep(report_path);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (group == "ba-shapes") {
      group_synthetic(rep, {"ba-shapes", "a", 0.90, {5, 6, 7, 8, 9}, 0.85, 0.88}, seeds);
    } else if (group == "tree-cycles") {
      group_synthetic(rep, {"tree-cycles", "b", 0.92, {8, 9, 10}, 0.95, 0.90}, seeds);
    } else if (group == "numerics") {
      group_numerics(rep);
    } else if (group == "oracle") {
      group_oracle(rep);
    } else if (group == "efficiency") {
      group_efficiency(rep);
    } else if (group_real_world(rep) == 0) {
      rep.save();
      std::cout << "group " << group << ": blocked, no data" << std::endl;
      return kSkip;
    }
  } catch (const std::exception& e) {
    std::cerr << "acceptance " << group << ": " << e.what() << std::endl;
    rep.save();
    return 3;
  }
  rep.save();
  std::cout << "group " << group << ": " << rep.size() << " criteria, " << rep.failed() << " failed, "
            << rep.blocked() << " blocked, " << fmt(seconds_since(start), 1) << " s" << std::endl;
  return strict && rep.failed() > 0 ? 1 : 0;
}
