#pragma once

#include "page/metrics.hpp"
#include "page/training.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace page {

// Tensors are stored as {rows, cols, data (row-major)}; doubles are written
// in shortest round-trip form so reloading is bit-exact.
nlohmann::json tensor_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd tensor_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TargetModel& model);
TargetModel target_from_json(const nlohmann::json& j);
void save_target(const std::filesystem::path& path, const TargetModel& model);
TargetModel load_target(const std::filesystem::path& path);

nlohmann::json to_json(const ExplainerModel& model);
ExplainerModel explainer_from_json(const nlohmann::json& j);
void save_explainer(const std::filesystem::path& path, const ExplainerModel& model);
ExplainerModel load_explainer(const std::filesystem::path& path);

nlohmann::json to_json(const StageConfig& config);
StageConfig stage_config_from_json(const nlohmann::json& j, StageConfig base = {});
nlohmann::json to_json(const TargetTrainOptions& options);
TargetTrainOptions target_options_from_json(const nlohmann::json& j, TargetTrainOptions base = {});

// Edge scores are listed once per undirected edge with u < v, in original
// node ids when the explanation comes from a k-hop subgraph.
nlohmann::json explanation_to_json(const Explanation& e, int graph_id);

// Selected edges black and bold, the rest gray and dashed; the graph label
// carries the predicted probability of the originally predicted class.
std::string explanation_to_dot(const Explanation& e, int graph_id);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace page
