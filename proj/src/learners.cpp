#include "hoofwatch/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hoofwatch/error.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::learners {

namespace {

double gini(long n0, long n1) {
    double n = static_cast<double>(n0 + n1);
    double f0 = static_cast<double>(n0) / n;
    double f1 = static_cast<double>(n1) / n;
    return 1.0 - f0 * f0 - f1 * f1;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const std::vector<int>& y;
    const TreeParams& params;
    hoofwatch::Rng rng;

    std::unique_ptr<TreeNode> build(std::vector<Eigen::Index>& idx, int depth) {
        auto node = std::make_unique<TreeNode>();
        long n1 = 0;
        for (auto i : idx) n1 += y[static_cast<std::size_t>(i)];
        long n0 = static_cast<long>(idx.size()) - n1;
        node->p1 = static_cast<double>(n1) / static_cast<double>(idx.size());

        bool pure = n0 == 0 || n1 == 0;
        bool depth_stop = params.max_depth && depth >= *params.max_depth;
        bool size_stop = static_cast<int>(idx.size()) < params.min_samples_split;
        if (pure || depth_stop || size_stop) return node;

        auto choice = best_split(idx, n0, n1);
        if (choice.feature < 0) return node;

        std::vector<Eigen::Index> left, right;
        for (auto i : idx)
            (x(i, choice.feature) <= choice.threshold ? left : right).push_back(i);

        node->feature = choice.feature;
        node->threshold = choice.threshold;
        node->left = build(left, depth + 1);
        node->right = build(right, depth + 1);
        return node;
    }

    std::vector<int> considered_features() {
        int c = static_cast<int>(x.cols());
        if (!params.max_features || *params.max_features >= c) {
            std::vector<int> all(static_cast<std::size_t>(c));
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        // Partial Fisher-Yates, then sorted so tie-breaks stay index-ordered.
        std::vector<int> pool(static_cast<std::size_t>(c));
        std::iota(pool.begin(), pool.end(), 0);
        int m = *params.max_features;
        for (int i = 0; i < m; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            rng.uniform_index(static_cast<std::size_t>(c - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        std::vector<int> chosen(pool.begin(), pool.begin() + m);
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    SplitChoice best_split(const std::vector<Eigen::Index>& idx, long n0, long n1) {
        const double parent = gini(n0, n1);
        const double total = static_cast<double>(idx.size());
        SplitChoice best;

        std::vector<std::pair<double, int>> sorted;
        sorted.reserve(idx.size());
        for (int feature : considered_features()) {
            sorted.clear();
            for (auto i : idx)
                sorted.emplace_back(x(i, feature), y[static_cast<std::size_t>(i)]);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            long left0 = 0, left1 = 0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                left0 += sorted[i].second == 0;
                left1 += sorted[i].second == 1;
                if (sorted[i].first == sorted[i + 1].first) continue;
                double threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
                long nl = left0 + left1;
                long nr = static_cast<long>(sorted.size()) - nl;
                double weighted = (static_cast<double>(nl) / total) * gini(left0, left1) +
                                  (static_cast<double>(nr) / total) * gini(n0 - left0, n1 - left1);
                double gain = parent - weighted;
                if (gain > best.gain) best = {feature, threshold, gain};
                // Equal gains keep the earlier (lower feature, lower threshold) choice.
            }
        }
        return best;
    }
};

}  // namespace

std::unique_ptr<TreeNode> train_tree(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                     const TreeParams& params, std::uint64_t feature_seed) {
    if (x.rows() == 0) throw Error("empty_matrix", "cannot train a tree on an empty matrix");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
        throw Error("matrix_shape", "label count does not match row count");
    TreeBuilder builder{x, y, params, hoofwatch::Rng(feature_seed)};
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    return builder.build(idx, 0);
}

double tree_proba(const TreeNode& node, const Eigen::RowVectorXd& row) {
    const TreeNode* cur = &node;
    while (!cur->is_leaf()) cur = row(cur->feature) <= cur->threshold ? cur->left.get() : cur->right.get();
    return cur->p1;
}

ForestModel forest_train(const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const ForestParams& params, std::uint64_t seed) {
    if (x.rows() == 0) throw Error("empty_matrix", "cannot train a forest on an empty matrix");
    if (params.n_trees < 1) throw Error("bad_params", "n_trees must be >= 1");

    ForestModel model;
    model.params = params;
    model.seed = seed;
    model.n_features = static_cast<int>(x.cols());

    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_samples_split = params.min_samples_split;
    tree_params.max_features =
        params.max_features
            ? params.max_features
            : std::optional<int>(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols())))));

    const Eigen::Index r = x.rows();
    for (int t = 0; t < params.n_trees; ++t) {
        std::uint64_t tree_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        hoofwatch::Rng rng(tree_seed);
        Eigen::MatrixXd bx;
        std::vector<int> by;
        if (params.bootstrap) {
            bx.resize(r, x.cols());
            by.resize(static_cast<std::size_t>(r));
            for (Eigen::Index i = 0; i < r; ++i) {
                auto pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(r)));
                bx.row(i) = x.row(pick);
                by[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(pick)];
            }
        } else {
            bx = x;
            by = y;
        }
        model.trees.push_back(train_tree(bx, by, tree_params, derive_seed(tree_seed, 1)));
    }
    return model;
}

double forest_proba(const ForestModel& model, const Eigen::RowVectorXd& row) {
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree_proba(*tree, row);
    return sum / static_cast<double>(model.trees.size());
}

int forest_predict(const ForestModel& model, const Eigen::RowVectorXd& row) {
    return classify(forest_proba(model, row));
}

KnnModel knn_train(const Eigen::MatrixXd& x, const std::vector<int>& y, int k) {
    if (x.rows() == 0) throw Error("empty_matrix", "cannot train kNN on an empty matrix");
    if (k < 1 || k > x.rows()) throw Error("bad_params", "k must be in [1, rows]");
    if (static_cast<Eigen::Index>(y.size()) != x.rows())
        throw Error("matrix_shape", "label count does not match row count");
    return {x, y, k};
}

double knn_proba(const KnnModel& model, const Eigen::RowVectorXd& row) {
    const Eigen::Index r = model.train_x.rows();
    Eigen::VectorXd dist = (model.train_x.rowwise() - row).rowwise().squaredNorm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), 0);
    auto cmp = [&](Eigen::Index a, Eigen::Index b) {
        return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + model.k, order.end(), cmp);
    long n1 = 0;
    for (int i = 0; i < model.k; ++i) n1 += model.train_y[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    return static_cast<double>(n1) / static_cast<double>(model.k);
}

int knn_predict(const KnnModel& model, const Eigen::RowVectorXd& row) {
    return classify(knn_proba(model, row));
}

namespace {

struct LloydRun {
    Eigen::MatrixXd centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> trace;
    int iterations = 0;
};

// Squared distance of every point to its nearest centroid plus the argmin,
// lowest index on ties.
void assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                    std::vector<int>& assignment, Eigen::VectorXd& nearest_sq) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    Eigen::VectorXd point_sq = points.rowwise().squaredNorm();
    Eigen::VectorXd centroid_sq = centroids.rowwise().squaredNorm();
    Eigen::MatrixXd cross = points * centroids.transpose();  // n x k
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = point_sq(i) - 2.0 * cross(i, 0) + centroid_sq(0);
        for (Eigen::Index c = 1; c < k; ++c) {
            double d = point_sq(i) - 2.0 * cross(i, c) + centroid_sq(c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        assignment[static_cast<std::size_t>(i)] = best;
        nearest_sq(i) = std::max(best_d, 0.0);  // GEMM rounding can dip below zero
    }
}

Eigen::MatrixXd init_kmeanspp(const Eigen::MatrixXd& points, int k, hoofwatch::Rng& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));
    Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
        } else {
            double target = rng.uniform() * total;
            double cumulative = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                cumulative += d2(i);
                if (cumulative >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

LloydRun lloyd(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansParams& params) {
    const Eigen::Index n = points.rows();
    hoofwatch::Rng rng(seed);

    LloydRun run;
    run.centroids = init_kmeanspp(points, k, rng);
    run.assignments.assign(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd nearest_sq(n);

    for (int iter = 0; iter < params.max_iter; ++iter) {
        assign_nearest(points, run.centroids, run.assignments, nearest_sq);

        // Re-seed emptied clusters at the point farthest from its nearest
        // centroid; repeat until every cluster is occupied.
        for (int pass = 0; pass < k; ++pass) {
            std::vector<long> counts(static_cast<std::size_t>(k), 0);
            for (int a : run.assignments) ++counts[static_cast<std::size_t>(a)];
            int empty = -1;
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] == 0) {
                    empty = c;
                    break;
                }
            if (empty < 0) break;
            Eigen::Index farthest = 0;
            for (Eigen::Index i = 1; i < n; ++i)
                if (nearest_sq(i) > nearest_sq(farthest)) farthest = i;
            if (nearest_sq(farthest) <= 0.0) break;  // duplicate points, nothing to separate
            run.centroids.row(empty) = points.row(farthest);
            assign_nearest(points, run.centroids, run.assignments, nearest_sq);
        }

        double inertia = nearest_sq.sum();
        if (!run.trace.empty() && inertia > run.trace.back() + 1e-9 * (1.0 + run.trace.back()))
            throw Error("kmeans_monotonicity", "inertia increased across Lloyd iterations");
        run.trace.push_back(inertia);
        run.inertia = inertia;
        run.iterations = iter + 1;

        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<long> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(run.assignments[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(run.assignments[static_cast<std::size_t>(i)])];
        }
        double displacement = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;
            next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            displacement = std::max(displacement, (next.row(c) - run.centroids.row(c)).norm());
            run.centroids.row(c) = next.row(c);
        }
        if (displacement < params.tol) break;
    }

    assign_nearest(points, run.centroids, run.assignments, nearest_sq);
    run.inertia = nearest_sq.sum();
    return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    const KMeansParams& params) {
    if (k < 1) throw Error("bad_k", "k must be >= 1");
    if (points.rows() < k) throw Error("bad_k", "k exceeds number of points");

    LloydRun best;
    bool have_best = false;
    for (int init = 0; init < std::max(1, params.n_init); ++init) {
        LloydRun run = lloyd(points, k, derive_seed(seed, static_cast<std::uint64_t>(init)), params);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    KMeansResult result;
    result.centroids = std::move(best.centroids);
    result.assignments = std::move(best.assignments);
    result.inertia = best.inertia;
    result.inertia_trace = std::move(best.trace);
    result.iterations = best.iterations;
    return result;
}

double ensemble_proba(const EnsembleModel& model, const Eigen::RowVectorXd& row) {
    if (model.forest.n_features != model.knn.train_x.cols())
        throw Error("matrix_shape", "ensemble members trained on different feature spaces");
    return model.forest_weight * forest_proba(model.forest, row) +
           model.knn_weight * knn_proba(model.knn, row);
}

int ensemble_predict(const EnsembleModel& model, const Eigen::RowVectorXd& row) {
    return classify(ensemble_proba(model, row));
}

}  // namespace hoofwatch::learners
