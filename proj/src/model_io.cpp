#include "hoofwatch/model_io.hpp"

#include "hoofwatch/error.hpp"

namespace hoofwatch::model_io {

using nlohmann::json;

namespace {

void check_version(const json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion)
        throw Error("bad_model_schema", "unsupported model schema version");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    auto rows = static_cast<Eigen::Index>(j.size());
    auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

}  // namespace

json tree_to_json(const learners::TreeNode& node) {
    if (node.is_leaf()) return {{"p", {1.0 - node.p1, node.p1}}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"left", tree_to_json(*node.left)},
            {"right", tree_to_json(*node.right)}};
}

std::unique_ptr<learners::TreeNode> tree_from_json(const json& j) {
    auto node = std::make_unique<learners::TreeNode>();
    if (j.contains("p")) {
        node->p1 = j.at("p").at(1).get<double>();
        return node;
    }
    node->feature = j.at("feature").get<int>();
    node->threshold = j.at("threshold").get<double>();
    node->left = tree_from_json(j.at("left"));
    node->right = tree_from_json(j.at("right"));
    return node;
}

json forest_to_json(const learners::ForestModel& model) {
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(*t));
    json params = {{"n_trees", model.params.n_trees},
                   {"min_samples_split", model.params.min_samples_split},
                   {"bootstrap", model.params.bootstrap}};
    params["max_depth"] = model.params.max_depth ? json(*model.params.max_depth) : json();
    params["max_features"] = model.params.max_features ? json(*model.params.max_features) : json();
    return {{"schema_version", kSchemaVersion},
            {"type", "forest"},
            {"params", params},
            {"seed", model.seed},
            {"n_features", model.n_features},
            {"trees", std::move(trees)}};
}

learners::ForestModel forest_from_json(const json& j) {
    check_version(j);
    learners::ForestModel model;
    const auto& params = j.at("params");
    model.params.n_trees = params.at("n_trees").get<int>();
    model.params.min_samples_split = params.at("min_samples_split").get<int>();
    model.params.bootstrap = params.at("bootstrap").get<bool>();
    if (!params.at("max_depth").is_null()) model.params.max_depth = params.at("max_depth").get<int>();
    if (!params.at("max_features").is_null())
        model.params.max_features = params.at("max_features").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.n_features = j.at("n_features").get<int>();
    for (const auto& t : j.at("trees")) model.trees.push_back(tree_from_json(t));
    return model;
}

json knn_to_json(const learners::KnnModel& model) {
    return {{"schema_version", kSchemaVersion},
            {"type", "knn"},
            {"k", model.k},
            {"x", matrix_to_json(model.train_x)},
            {"y", model.train_y}};
}

learners::KnnModel knn_from_json(const json& j) {
    check_version(j);
    learners::KnnModel model;
    model.k = j.at("k").get<int>();
    model.train_x = matrix_from_json(j.at("x"));
    model.train_y = j.at("y").get<std::vector<int>>();
    return model;
}

json ensemble_to_json(const learners::EnsembleModel& model) {
    return {{"schema_version", kSchemaVersion},
            {"type", "ensemble"},
            {"weights", {model.forest_weight, model.knn_weight}},
            {"members", {forest_to_json(model.forest), knn_to_json(model.knn)}}};
}

learners::EnsembleModel ensemble_from_json(const json& j) {
    check_version(j);
    learners::EnsembleModel model;
    model.forest_weight = j.at("weights").at(0).get<double>();
    model.knn_weight = j.at("weights").at(1).get<double>();
    model.forest = forest_from_json(j.at("members").at(0));
    model.knn = knn_from_json(j.at("members").at(1));
    return model;
}

}  // namespace hoofwatch::model_io
