#include "page/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace page {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

const char* task_name(Task t) { return t == Task::node ? "node" : "graph"; }

Task parse_task(const std::string& s) {
  if (s == "node") return Task::node;
  if (s == "graph") return Task::graph;
  throw ModelError("unknown task '" + s + "'");
}

json dense_to_json(const Dense& d) { return {{"weight", tensor_to_json(d.weight)}, {"bias", tensor_to_json(d.bias)}}; }

Dense dense_from_json(const json& j, int in, int out, const std::string& name) {
  Dense d{tensor_from_json(j.at("weight")), tensor_from_json(j.at("bias"))};
  if (d.weight.rows() != in || d.weight.cols() != out || d.bias.rows() != 1 || d.bias.cols() != out)
    throw IntegrityError("layer '" + name + "' has shape " + std::to_string(d.weight.rows()) + "x" +
                         std::to_string(d.weight.cols()) + ", expected " + std::to_string(in) + "x" +
                         std::to_string(out));
  return d;
}

void check_format(const json& j, const std::string& expected) {
  if (!j.is_object() || j.value("format", "") != expected)
    throw ModelError("not a " + expected + " checkpoint");
  if (j.value("version", 0) != kFormatVersion)
    throw ModelError("unsupported " + expected + " checkpoint version " + std::to_string(j.value("version", 0)));
}

}  // namespace

json tensor_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw IntegrityError("tensor data does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
  return m;
}

json to_json(const TargetModel& model) {
  json layers = json::array();
  for (const auto& l : model.layers) layers.push_back(dense_to_json(l));
  return {{"format", "page-target"},
          {"version", kFormatVersion},
          {"task", task_name(model.task)},
          {"input_dim", model.input_dim},
          {"hidden_dim", model.hidden_dim},
          {"num_classes", model.num_classes},
          {"dataset", model.dataset},
          {"metrics", model.metrics},
          {"layers", std::move(layers)},
          {"head", dense_to_json(model.head)}};
}

TargetModel target_from_json(const json& j) {
  check_format(j, "page-target");
  TargetModel m;
  m.task = parse_task(j.at("task").get<std::string>());
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden_dim = j.at("hidden_dim").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.dataset = j.value("dataset", "");
  m.metrics = j.value("metrics", std::map<std::string, double>{});
  const auto& layers = j.at("layers");
  if (layers.size() != 3) throw IntegrityError("target checkpoint needs three GCN layers");
  int in = m.input_dim;
  for (std::size_t i = 0; i < 3; ++i) {
    m.layers[i] = dense_from_json(layers[i], in, m.hidden_dim, "gcn" + std::to_string(i + 1));
    in = m.hidden_dim;
  }
  m.head = dense_from_json(j.at("head"), m.task == Task::node ? 3 * m.hidden_dim : m.hidden_dim, m.num_classes, "head");
  return m;
}

json to_json(const ExplainerModel& model) {
  const auto& c = model.config;
  json j = {{"format", "page-explainer"},
            {"version", kFormatVersion},
            {"task", task_name(model.task)},
            {"input_dim", model.input_dim},
            {"num_classes", model.num_classes},
            {"dataset", model.dataset},
            {"trained", model.trained},
            {"discriminator_frozen", model.discriminator_frozen},
            {"config",
             {{"variant", c.variant == Variant::vgae ? "vgae" : "gae"},
              {"hidden1", c.hidden1},
              {"hidden2", c.hidden2},
              {"latent_dim", c.latent_dim},
              {"causal_dim", c.causal_dim},
              {"discriminator_hidden", c.discriminator_hidden},
              {"decoder_hidden", c.decoder_hidden},
              {"readout", c.readout == Readout::mean ? "mean" : "max"}}},
            {"enc1", dense_to_json(model.enc1)},
            {"enc2", dense_to_json(model.enc2)},
            {"enc_mu", dense_to_json(model.enc_mu)},
            {"disc1", dense_to_json(model.disc1)},
            {"disc2", dense_to_json(model.disc2)}};
  if (c.variant == Variant::vgae) j["enc_logvar"] = dense_to_json(model.enc_logvar);
  if (c.mlp_decoder()) {
    j["dec1"] = dense_to_json(model.dec1);
    j["dec2"] = dense_to_json(model.dec2);
  }
  return j;
}

ExplainerModel explainer_from_json(const json& j) {
  check_format(j, "page-explainer");
  const auto& jc = j.at("config");
  ExplainerConfig c;
  const auto variant = jc.at("variant").get<std::string>();
  if (variant != "vgae" && variant != "gae") throw ModelError("unknown explainer variant '" + variant + "'");
  c.variant = variant == "vgae" ? Variant::vgae : Variant::gae;
  c.hidden1 = jc.at("hidden1").get<int>();
  c.hidden2 = jc.at("hidden2").get<int>();
  c.latent_dim = jc.at("latent_dim").get<int>();
  c.causal_dim = jc.at("causal_dim").get<int>();
  c.discriminator_hidden = jc.at("discriminator_hidden").get<int>();
  c.decoder_hidden = jc.value("decoder_hidden", 0);
  const auto readout = jc.at("readout").get<std::string>();
  if (readout != "mean" && readout != "max") throw ModelError("unknown readout '" + readout + "'");
  c.readout = readout == "mean" ? Readout::mean : Readout::max;

  auto m = make_explainer(parse_task(j.at("task").get<std::string>()), j.at("input_dim").get<int>(),
                          j.at("num_classes").get<int>(), c, 0);
  m.dataset = j.value("dataset", "");
  m.trained = j.at("trained").get<bool>();
  m.discriminator_frozen = j.value("discriminator_frozen", false);
  m.enc1 = dense_from_json(j.at("enc1"), m.input_dim, c.hidden1, "enc1");
  m.enc2 = dense_from_json(j.at("enc2"), c.hidden1, c.hidden2, "enc2");
  m.enc_mu = dense_from_json(j.at("enc_mu"), c.hidden2, c.latent_dim, "enc_mu");
  if (c.variant == Variant::vgae)
    m.enc_logvar = dense_from_json(j.at("enc_logvar"), c.hidden2, c.latent_dim, "enc_logvar");
  if (c.mlp_decoder()) {
    m.dec1 = dense_from_json(j.at("dec1"), c.latent_dim, c.decoder_hidden, "dec1");
    m.dec2 = dense_from_json(j.at("dec2"), c.decoder_hidden, c.decoder_hidden, "dec2");
  }
  m.disc1 = dense_from_json(j.at("disc1"), c.causal_dim, c.discriminator_hidden, "disc1");
  m.disc2 = dense_from_json(j.at("disc2"), c.discriminator_hidden, m.num_classes, "disc2");
  return m;
}

void save_target(const std::filesystem::path& path, const TargetModel& model) {
  write_text(path, to_json(model).dump() + "\n");
}

TargetModel load_target(const std::filesystem::path& path) { return target_from_json(read_json(path)); }

void save_explainer(const std::filesystem::path& path, const ExplainerModel& model) {
  write_text(path, to_json(model).dump() + "\n");
}

ExplainerModel load_explainer(const std::filesystem::path& path) { return explainer_from_json(read_json(path)); }

json to_json(const StageConfig& c) {
  return {{"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"lambda3", c.lambda3},
          {"gamma", c.gamma},
          {"lr", c.lr},
          {"epochs_stage1", c.epochs_stage1},
          {"epochs_stage2", c.epochs_stage2},
          {"variant", c.variant == Variant::vgae ? "vgae" : "gae"},
          {"batch_size", c.batch_size},
          {"lambda1_discriminator_first", c.lambda1_discriminator_first},
          {"instances_per_epoch", c.instances_per_epoch},
          {"seed", c.seed}};
}

StageConfig stage_config_from_json(const json& j, StageConfig c) {
  if (!j.is_object()) throw ParameterError("stage config must be a JSON object");
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.lambda3 = j.value("lambda3", c.lambda3);
  c.gamma = j.value("gamma", c.gamma);
  c.lr = j.value("lr", c.lr);
  c.epochs_stage1 = j.value("epochs_stage1", c.epochs_stage1);
  c.epochs_stage2 = j.value("epochs_stage2", c.epochs_stage2);
  if (j.contains("variant")) {
    const auto v = j.at("variant").get<std::string>();
    if (v != "vgae" && v != "gae") throw ParameterError("variant must be 'vgae' or 'gae'");
    c.variant = v == "vgae" ? Variant::vgae : Variant::gae;
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lambda1_discriminator_first = j.value("lambda1_discriminator_first", c.lambda1_discriminator_first);
  c.instances_per_epoch = j.value("instances_per_epoch", c.instances_per_epoch);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

json to_json(const TargetTrainOptions& o) {
  return {{"lr", o.lr},
          {"epochs", o.epochs},
          {"patience", o.patience},
          {"batch_size", o.batch_size},
          {"weight_decay", o.weight_decay},
          {"seed", o.seed}};
}

TargetTrainOptions target_options_from_json(const json& j, TargetTrainOptions o) {
  if (!j.is_object()) throw ParameterError("target options must be a JSON object");
  o.lr = j.value("lr", o.lr);
  o.epochs = j.value("epochs", o.epochs);
  o.patience = j.value("patience", o.patience);
  o.batch_size = j.value("batch_size", o.batch_size);
  o.weight_decay = j.value("weight_decay", o.weight_decay);
  o.seed = j.value("seed", o.seed);
  if (o.lr <= 0 || o.epochs < 0 || o.patience < 1 || o.batch_size < 1 || o.weight_decay < 0)
    throw ParameterError("target options out of range");
  return o;
}

namespace {

int original_id(const Explanation& e, int local) {
  return e.original_ids.empty() ? local : e.original_ids[static_cast<std::size_t>(local)];
}

int explained_class(const Explanation& e) {
  Eigen::Index y = 0;
  e.original_prediction.maxCoeff(&y);
  return static_cast<int>(y);
}

}  // namespace

json explanation_to_json(const Explanation& e, int graph_id) {
  json scores = json::array(), selected = json::array();
  const auto& a = e.masked.adjacency;
  // `masked` keeps the full node set; its adjacency is A .* hard mask, so the
  // candidate edges come from the soft mask's support.
  for (Eigen::Index u = 0; u < e.soft_mask.rows(); ++u)
    for (Eigen::Index v = u + 1; v < e.soft_mask.cols(); ++v) {
      if (e.hard_mask(u, v) == 0.0 && e.soft_mask(u, v) == 0.0 && a(u, v) == 0.0) continue;
      const int ou = original_id(e, static_cast<int>(u)), ov = original_id(e, static_cast<int>(v));
      scores.push_back({ou, ov, e.soft_mask(u, v)});
      if (e.hard_mask(u, v) != 0.0) selected.push_back({ou, ov});
    }
  auto row = [](const Eigen::RowVectorXd& p) { return std::vector<double>(p.data(), p.data() + p.size()); };
  json j{{"graph_id", graph_id},
         {"target_node", e.target_node ? json(original_id(e, *e.target_node)) : json(nullptr)},
         {"edge_scores", std::move(scores)},
         {"selected_edges", std::move(selected)},
         {"predicted_class", explained_class(e)},
         {"original_prediction", row(e.original_prediction)},
         {"masked_prediction", row(e.prediction)}};
  return j;
}

std::string explanation_to_dot(const Explanation& e, int graph_id) {
  const int y = explained_class(e);
  std::ostringstream ss;
  ss << std::setprecision(4);
  ss << "graph explanation_" << graph_id << " {\n";
  ss << "  label=\"class " << y << ": p=" << e.original_prediction(y) << ", explanation p=" << e.prediction(y)
     << "\";\n";
  ss << "  node [shape=circle, fontsize=10];\n";
  const auto n = e.soft_mask.rows();
  for (Eigen::Index u = 0; u < n; ++u) {
    ss << "  n" << original_id(e, static_cast<int>(u));
    if (e.target_node && *e.target_node == u) ss << " [style=filled, fillcolor=\"#f4c542\"]";
    ss << ";\n";
  }
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = u + 1; v < n; ++v) {
      const bool on_support = e.soft_mask(u, v) != 0.0 || e.hard_mask(u, v) != 0.0 || e.masked.adjacency(u, v) != 0.0;
      if (!on_support) continue;
      const bool chosen = e.hard_mask(u, v) != 0.0;
      ss << "  n" << original_id(e, static_cast<int>(u)) << " -- n" << original_id(e, static_cast<int>(v)) << " [";
      ss << (chosen ? "color=black, penwidth=2.5" : "color=gray70, style=dashed");
      ss << ", label=\"" << e.soft_mask(u, v) << "\"];\n";
    }
  ss << "}\n";
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ParameterError(path.string() + ": " + err.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

}  // namespace page
