#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace hoofwatch::learners {

// Binary CART node: a leaf carries P(class 1), an internal node routes
// row[feature] <= threshold to the left child.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    double p1 = 0.0;

    bool is_leaf() const { return !left; }
};

struct TreeParams {
    std::optional<int> max_depth;   // nullopt = unlimited
    int min_samples_split = 2;
    std::optional<int> max_features;  // per-split subsample; nullopt = all
};

// Best-split CART on Gini impurity gain. Candidate thresholds are midpoints
// between consecutive distinct sorted values; ties break to the lowest
// feature index, then the lowest threshold. `feature_seed` drives per-split
// feature subsampling when max_features is set.
std::unique_ptr<TreeNode> train_tree(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                     const TreeParams& params, std::uint64_t feature_seed = 0);

double tree_proba(const TreeNode& node, const Eigen::RowVectorXd& row);

struct ForestParams {
    int n_trees = 100;
    std::optional<int> max_depth;
    int min_samples_split = 2;
    std::optional<int> max_features;  // default ceil(sqrt(c)) when unset
    bool bootstrap = true;
};

struct ForestModel {
    ForestParams params;
    std::uint64_t seed = 0;
    int n_features = 0;
    std::vector<std::unique_ptr<TreeNode>> trees;
};

// Each tree sees a bootstrap resample drawn from a stream derived from
// (seed, tree index), so training is reproducible and order-independent.
ForestModel forest_train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const ForestParams& params, std::uint64_t seed);
double forest_proba(const ForestModel& model, const Eigen::RowVectorXd& row);
int forest_predict(const ForestModel& model, const Eigen::RowVectorXd& row);

struct KnnModel {
    Eigen::MatrixXd train_x;
    std::vector<int> train_y;
    int k = 5;
};

KnnModel knn_train(const Eigen::MatrixXd& x, const std::vector<int>& y, int k);
// Fraction of the k nearest rows (Euclidean, ties to the lower row index)
// labeled 1.
double knn_proba(const KnnModel& model, const Eigen::RowVectorXd& row);
int knn_predict(const KnnModel& model, const Eigen::RowVectorXd& row);

struct KMeansParams {
    int max_iter = 300;
    double tol = 1e-6;
    int n_init = 10;  // k-means++ restarts; best final inertia wins
};

struct KMeansResult {
    Eigen::MatrixXd centroids;  // k x d
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // winning restart, one entry per assignment step
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. An emptied cluster is re-seeded
// at the point farthest from its nearest centroid. Final assignments pick the
// nearest centroid with lowest-index tie-break.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    const KMeansParams& params = {});

struct EnsembleModel {
    ForestModel forest;
    KnnModel knn;
    double forest_weight = 0.5;
    double knn_weight = 0.5;
};

double ensemble_proba(const EnsembleModel& model, const Eigen::RowVectorXd& row);
int ensemble_predict(const EnsembleModel& model, const Eigen::RowVectorXd& row);

// Probability threshold ties classify positive.
inline int classify(double proba) { return proba >= 0.5 ? 1 : 0; }

}  // namespace hoofwatch::learners
