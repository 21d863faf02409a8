#pragma once

#include <json.hpp>

#include "hoofwatch/learners.hpp"

namespace hoofwatch::model_io {

inline constexpr int kSchemaVersion = 1;

nlohmann::json tree_to_json(const learners::TreeNode& node);
std::unique_ptr<learners::TreeNode> tree_from_json(const nlohmann::json& j);

nlohmann::json forest_to_json(const learners::ForestModel& model);
learners::ForestModel forest_from_json(const nlohmann::json& j);

nlohmann::json knn_to_json(const learners::KnnModel& model);
learners::KnnModel knn_from_json(const nlohmann::json& j);

nlohmann::json ensemble_to_json(const learners::EnsembleModel& model);
learners::EnsembleModel ensemble_from_json(const nlohmann::json& j);

}  // namespace hoofwatch::model_io
