#include "page/datasets.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace page {

namespace fs = std::filesystem;
using json = nlohmann::json;

void DatasetBundle::validate() const {
  if (graphs.empty()) throw InvalidGraph("bundle has no graphs");
  for (const auto& g : graphs) g.validate();
  if (task == Task::node) {
    if (graphs.size() != 1) throw InvalidGraph("node-classification bundle must hold exactly one graph");
    if (graphs[0].node_labels.empty()) throw InvalidGraph("node-classification graph needs node labels");
  } else {
    for (const auto& g : graphs)
      if (!g.graph_label) throw InvalidGraph("graph-classification graph needs a graph label");
  }
}

namespace {

// Preferential-attachment growth from a seed clique.
void grow_barabasi_albert(Graph& g, int n, int m, int clique, std::mt19937_64& rng) {
  clique = std::max(clique, m + 1);
  std::vector<int> endpoints;
  for (int u = 0; u < clique; ++u)
    for (int v = u + 1; v < clique; ++v) {
      g.add_edge(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  for (int t = clique; t < n; ++t) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
      targets.insert(endpoints[pick(rng)]);
    }
    for (int u : targets) {
      g.add_edge(t, u);
      endpoints.push_back(t);
      endpoints.push_back(u);
    }
  }
}

Graph empty_graph(int n, int feature_dim) {
  Graph g;
  g.features = Eigen::MatrixXd::Ones(n, feature_dim);
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  g.node_labels.assign(static_cast<std::size_t>(n), 0);
  return g;
}

void add_motif_edge(Graph& g, int u, int v) {
  g.add_edge(u, v);
  g.motif_edges.insert(make_edge(u, v));
}

}  // namespace

DatasetBundle generate_ba_shapes(std::uint64_t seed, const BaShapesOptions& options) {
  std::mt19937_64 rng(seed);
  const int base = options.base_nodes;
  const int total = base + 5 * options.num_houses;
  Graph g = empty_graph(total, options.feature_dim);
  grow_barabasi_albert(g, base, options.attach_edges, options.seed_clique, rng);

  std::uniform_int_distribution<int> anchor(0, base - 1);
  for (int h = 0; h < options.num_houses; ++h) {
    const int s = base + 5 * h;
    // Square s..s+3 with roof s+4 over the upper pair s, s+1.
    add_motif_edge(g, s, s + 1);
    add_motif_edge(g, s + 1, s + 2);
    add_motif_edge(g, s + 2, s + 3);
    add_motif_edge(g, s + 3, s);
    add_motif_edge(g, s + 4, s);
    add_motif_edge(g, s + 4, s + 1);
    g.node_labels[s] = g.node_labels[s + 1] = 2;
    g.node_labels[s + 2] = g.node_labels[s + 3] = 3;
    g.node_labels[s + 4] = 1;
    g.add_edge(s, anchor(rng));
  }

  DatasetBundle bundle;
  bundle.name = "ba-shapes";
  bundle.task = Task::node;
  bundle.num_classes = 4;
  bundle.graphs.push_back(std::move(g));
  return make_splits(std::move(bundle), {0.8, 0.1, 0.1}, seed);
}

DatasetBundle generate_tree_cycles(std::uint64_t seed, const TreeCyclesOptions& options) {
  std::mt19937_64 rng(seed);
  const int tree = (1 << (options.tree_height + 1)) - 1;
  const int total = tree + options.cycle_size * options.num_cycles;
  Graph g = empty_graph(total, options.feature_dim);
  for (int v = 1; v < tree; ++v) g.add_edge(v, (v - 1) / 2);

  std::uniform_int_distribution<int> anchor(0, tree - 1);
  for (int c = 0; c < options.num_cycles; ++c) {
    const int s = tree + options.cycle_size * c;
    for (int i = 0; i < options.cycle_size; ++i) {
      add_motif_edge(g, s + i, s + (i + 1) % options.cycle_size);
      g.node_labels[s + i] = 1;
    }
    g.add_edge(s, anchor(rng));
  }

  DatasetBundle bundle;
  bundle.name = "tree-cycles";
  bundle.task = Task::node;
  bundle.num_classes = 2;
  bundle.graphs.push_back(std::move(g));
  return make_splits(std::move(bundle), {0.8, 0.1, 0.1}, seed);
}

DatasetBundle make_splits(DatasetBundle bundle, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions)
    if (f < 0.0) throw ParameterError("split fractions must be non-negative");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw ParameterError("split fractions must sum to 1");
  const int n = bundle.task == Task::node ? (bundle.graphs.empty() ? 0 : bundle.graphs[0].num_nodes())
                                          : static_cast<int>(bundle.graphs.size());
  const int val = static_cast<int>(std::lround(fractions[1] * n));
  const int test = static_cast<int>(std::lround(fractions[2] * n));
  const int train = n - val - test;
  if (train <= 0 || (fractions[1] > 0 && val == 0) || (fractions[2] > 0 && test == 0))
    throw ParameterError("split would leave a requested partition empty");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::shuffle(order.begin(), order.end(), rng);
  auto slice = [&](int from, int count) {
    std::vector<int> out(order.begin() + from, order.begin() + from + count);
    std::sort(out.begin(), out.end());
    return out;
  };
  bundle.splits.train = slice(0, train);
  bundle.splits.val = slice(train, val);
  bundle.splits.test = slice(train + val, test);
  bundle.seed = seed;
  return bundle;
}

namespace {

std::vector<long long> read_ints(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetFormatError("missing dataset file: " + file.filename().string());
  std::vector<long long> out;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    long long x;
    while (ss >> x) out.push_back(x);
  }
  return out;
}

std::map<long long, int> dense_index(const std::vector<long long>& values) {
  std::map<long long, int> index;
  for (auto v : values) index.emplace(v, 0);
  int next = 0;
  for (auto& [k, i] : index) i = next++;
  return index;
}

}  // namespace

DatasetBundle load_tu_dataset(const fs::path& root, const std::string& name) {
  const fs::path dir = fs::exists(root / name / (name + "_A.txt")) ? root / name : root;
  auto file = [&](const std::string& suffix) { return dir / (name + "_" + suffix + ".txt"); };

  const auto edges = read_ints(file("A"));
  const auto indicator = read_ints(file("graph_indicator"));
  const auto graph_labels = read_ints(file("graph_labels"));
  const auto node_labels = read_ints(file("node_labels"));
  if (edges.size() % 2 != 0) throw DatasetFormatError(name + "_A.txt: odd number of endpoints");
  if (node_labels.size() != indicator.size())
    throw IntegrityError(name + "_node_labels.txt: row count differs from graph indicator");

  const auto num_nodes = static_cast<long long>(indicator.size());
  const auto num_graphs = static_cast<long long>(graph_labels.size());
  const auto label_index = dense_index(node_labels);
  const auto class_index = dense_index(graph_labels);
  const int feature_dim = static_cast<int>(label_index.size());

  std::vector<int> count(static_cast<std::size_t>(num_graphs), 0);
  std::vector<int> local(static_cast<std::size_t>(num_nodes));
  for (long long v = 0; v < num_nodes; ++v) {
    const long long gid = indicator[v];
    if (gid < 1 || gid > num_graphs)
      throw IntegrityError("graph indicator references unknown graph " + std::to_string(gid));
    local[v] = count[gid - 1]++;
  }

  DatasetBundle bundle;
  bundle.name = name;
  bundle.task = Task::graph;
  bundle.num_classes = static_cast<int>(class_index.size());
  bundle.graphs.resize(static_cast<std::size_t>(num_graphs));
  for (long long gi = 0; gi < num_graphs; ++gi) {
    auto& g = bundle.graphs[gi];
    const int n = count[gi];
    g.features = Eigen::MatrixXd::Zero(n, feature_dim);
    g.adjacency = Eigen::MatrixXd::Zero(n, n);
    g.graph_label = class_index.at(graph_labels[gi]);
  }
  for (long long v = 0; v < num_nodes; ++v)
    bundle.graphs[indicator[v] - 1].features(local[v], label_index.at(node_labels[v])) = 1.0;

  for (std::size_t e = 0; e < edges.size(); e += 2) {
    const long long u = edges[e], w = edges[e + 1];
    if (u < 1 || u > num_nodes || w < 1 || w > num_nodes)
      throw IntegrityError("edge references dangling node id " + std::to_string(u < 1 || u > num_nodes ? u : w));
    if (indicator[u - 1] != indicator[w - 1]) throw IntegrityError("edge crosses graph boundary");
    if (u == w) continue;
    auto& g = bundle.graphs[indicator[u - 1] - 1];
    g.add_edge(local[u - 1], local[w - 1]);
  }
  // Every graph starts in train; make_splits assigns the real partition.
  bundle.splits.train.resize(bundle.graphs.size());
  std::iota(bundle.splits.train.begin(), bundle.splits.train.end(), 0);
  return bundle;
}

void write_tu_dataset(const DatasetBundle& bundle, const fs::path& root) {
  fs::create_directories(root);
  const auto& name = bundle.name;
  std::ofstream a(root / (name + "_A.txt")), ind(root / (name + "_graph_indicator.txt")),
      gl(root / (name + "_graph_labels.txt")), nl(root / (name + "_node_labels.txt"));
  long long offset = 0;
  for (std::size_t gi = 0; gi < bundle.graphs.size(); ++gi) {
    const auto& g = bundle.graphs[gi];
    for (int v = 0; v < g.num_nodes(); ++v) {
      ind << gi + 1 << '\n';
      Eigen::Index label = 0;
      g.features.row(v).maxCoeff(&label);
      nl << label << '\n';
    }
    for (int u = 0; u < g.num_nodes(); ++u)
      for (int v = 0; v < g.num_nodes(); ++v)
        if (g.adjacency(u, v) != 0.0) a << offset + u + 1 << ", " << offset + v + 1 << '\n';
    gl << g.graph_label.value_or(0) << '\n';
    offset += g.num_nodes();
  }
}

namespace {

const char* task_name(Task t) { return t == Task::node ? "node" : "graph"; }

Task parse_task(const std::string& s) {
  if (s == "node") return Task::node;
  if (s == "graph") return Task::graph;
  throw DatasetFormatError("unknown task '" + s + "'");
}

}  // namespace

void save_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["name"] = bundle.name;
  manifest["task"] = task_name(bundle.task);
  manifest["num_classes"] = bundle.num_classes;
  manifest["seed"] = bundle.seed;
  manifest["splits"] = {{"train", bundle.splits.train}, {"val", bundle.splits.val}, {"test", bundle.splits.test}};
  json graphs = json::array();
  for (std::size_t gi = 0; gi < bundle.graphs.size(); ++gi) {
    const auto& g = bundle.graphs[gi];
    const std::string stem = "graph_" + std::to_string(gi);
    std::ofstream edges(dir / (stem + ".edges"));
    for (const auto& [u, v] : g.edges()) edges << u << ' ' << v << '\n';
    std::ofstream table(dir / (stem + ".nodes"));
    table << std::setprecision(17);
    for (int v = 0; v < g.num_nodes(); ++v) {
      table << (g.node_labels.empty() ? -1 : g.node_labels[v]);
      for (int d = 0; d < g.feature_dim(); ++d) table << ' ' << g.features(v, d);
      table << '\n';
    }
    json entry{{"nodes", g.num_nodes()}, {"feature_dim", g.feature_dim()}, {"file", stem}};
    if (g.graph_label) entry["graph_label"] = *g.graph_label;
    if (!g.motif_edges.empty()) {
      json motif = json::array();
      for (const auto& [u, v] : g.motif_edges) motif.push_back({u, v});
      entry["motif_edges"] = motif;
    }
    graphs.push_back(entry);
  }
  manifest["graphs"] = graphs;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

DatasetBundle load_bundle(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DatasetFormatError("missing dataset file: manifest.json in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DatasetFormatError(std::string("manifest.json: ") + e.what());
  }
  DatasetBundle bundle;
  bundle.name = manifest.at("name").get<std::string>();
  bundle.task = parse_task(manifest.at("task").get<std::string>());
  bundle.num_classes = manifest.at("num_classes").get<int>();
  bundle.seed = manifest.at("seed").get<std::uint64_t>();
  bundle.splits.train = manifest.at("splits").at("train").get<std::vector<int>>();
  bundle.splits.val = manifest.at("splits").at("val").get<std::vector<int>>();
  bundle.splits.test = manifest.at("splits").at("test").get<std::vector<int>>();
  for (const auto& entry : manifest.at("graphs")) {
    const int n = entry.at("nodes").get<int>();
    const int d = entry.at("feature_dim").get<int>();
    const std::string stem = entry.at("file").get<std::string>();
    Graph g;
    g.features = Eigen::MatrixXd::Zero(n, d);
    g.adjacency = Eigen::MatrixXd::Zero(n, n);
    std::ifstream table(dir / (stem + ".nodes"));
    if (!table) throw DatasetFormatError("missing dataset file: " + stem + ".nodes");
    bool labelled = false;
    for (int v = 0; v < n; ++v) {
      int label;
      if (!(table >> label)) throw DatasetFormatError(stem + ".nodes: truncated");
      labelled = labelled || label >= 0;
      g.node_labels.push_back(label);
      for (int k = 0; k < d; ++k)
        if (!(table >> g.features(v, k))) throw DatasetFormatError(stem + ".nodes: truncated");
    }
    if (!labelled) g.node_labels.clear();
    std::ifstream edges(dir / (stem + ".edges"));
    if (!edges) throw DatasetFormatError("missing dataset file: " + stem + ".edges");
    int u, v;
    while (edges >> u >> v) {
      if (u < 0 || v < 0 || u >= n || v >= n) throw IntegrityError(stem + ".edges: dangling node id");
      g.add_edge(u, v);
    }
    if (entry.contains("graph_label")) g.graph_label = entry["graph_label"].get<int>();
    if (entry.contains("motif_edges"))
      for (const auto& e : entry["motif_edges"]) g.motif_edges.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
    bundle.graphs.push_back(std::move(g));
  }
  bundle.validate();
  return bundle;
}

std::vector<std::string> supported_datasets() { return {"ba-shapes", "tree-cycles", "Mutagenicity", "NCI1"}; }

}  // namespace page
