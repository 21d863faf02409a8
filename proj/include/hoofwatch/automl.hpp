#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hoofwatch/featurize.hpp"
#include "hoofwatch/learners.hpp"
#include "hoofwatch/matrix.hpp"

namespace hoofwatch::automl {

enum class Scaler { none, minmax };
enum class Expander { none, poly2 };
enum class ClassifierKind { rf, knn, ensemble };

const char* to_string(Scaler s);
const char* to_string(Expander e);
const char* to_string(ClassifierKind c);

struct GrammarBounds {
    std::vector<Scaler> scalers = {Scaler::none, Scaler::minmax};
    std::vector<Expander> expanders = {Expander::none, Expander::poly2};
    std::vector<ClassifierKind> classifiers = {ClassifierKind::rf, ClassifierKind::knn,
                                               ClassifierKind::ensemble};
    int n_trees_min = 10;
    int n_trees_max = 300;
    bool allow_no_depth = true;  // "none" = unlimited depth
    int depth_min = 2;
    int depth_max = 16;
    int k_min = 1;
    int k_max = 25;
    double weight_min = 0.0;
    double weight_max = 1.0;
};

// A point in the pipeline grammar: scaler -> expander -> classifier. Genes
// irrelevant to the chosen classifier stay in the genome but normalize to
// defaults in the canonical form, so caching and tie-breaks ignore them.
struct PipelineSpec {
    Scaler scaler = Scaler::none;
    Expander expander = Expander::none;
    ClassifierKind classifier = ClassifierKind::rf;
    int rf_n_trees = 100;
    std::optional<int> rf_max_depth;
    int rf_min_samples_split = 2;
    int knn_k = 5;
    double rf_weight = 0.5;  // ensemble member weight; knn gets 1 - rf_weight

    PipelineSpec normalized() const;
    std::string canonical() const;
    int stage_count() const;
    void validate(const GrammarBounds& bounds) const;
};

// The default end-to-end configuration: min-max, second-order polynomial
// expansion, equal-weight random forest + kNN soft vote.
PipelineSpec default_pipeline();

nlohmann::json spec_to_json(const PipelineSpec& spec);
PipelineSpec spec_from_json(const nlohmann::json& j);

struct GaConfig {
    int population = 24;
    int generations = 10;  // evolution steps after the random generation 0
    double mutation_rate = 0.2;
    double crossover_rate = 0.5;
    int elitism = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CvScore {
    double mean = 0.0;
    std::vector<double> per_fold;
    double stddev = 0.0;
};

struct TrainedPipeline {
    PipelineSpec spec;
    std::optional<featurize::MinMaxParams> minmax;
    std::variant<learners::ForestModel, learners::KnnModel, learners::EnsembleModel> classifier;
    Eigen::Index input_features = 0;

    double proba(const Eigen::RowVectorXd& raw_row) const;
    int predict(const Eigen::RowVectorXd& raw_row) const;
};

TrainedPipeline fit_pipeline(const PipelineSpec& spec, const FeatureMatrix& train,
                             std::uint64_t seed);
double accuracy(const TrainedPipeline& model, const FeatureMatrix& matrix);

nlohmann::json trained_to_json(const TrainedPipeline& model,
                               const std::vector<std::string>& feature_names);
TrainedPipeline trained_from_json(const nlohmann::json& j);

// Grouped k-fold accuracy; transforms are fitted on each fold's training side
// only. Fold structure derives from `seed`, classifier training from
// per-fold streams.
CvScore evaluate_pipeline(const PipelineSpec& spec, const FeatureMatrix& matrix, int k,
                          std::uint64_t seed);

using LogSink = std::function<void(const nlohmann::json&)>;

// Shared fitness machinery for GA search and grid refinement: one fixed fold
// structure, per-genome seeds derived from (master_seed, canonical hash), a
// cache keyed by canonical form, and a JSONL log of every fresh evaluation.
class PipelineEvaluator {
public:
    PipelineEvaluator(const FeatureMatrix& data, int k, std::uint64_t master_seed, int jobs = 1,
                      LogSink log = {});

    CvScore evaluate(const PipelineSpec& spec, int generation);
    std::vector<CvScore> evaluate_all(const std::vector<PipelineSpec>& specs, int generation);
    std::size_t evaluations() const { return evaluations_; }
    int folds() const { return k_; }

private:
    std::vector<std::pair<FeatureMatrix, FeatureMatrix>> folds_;
    int k_;
    std::uint64_t master_seed_;
    int jobs_;
    LogSink log_;
    std::map<std::string, CvScore> cache_;
    std::size_t evaluations_ = 0;
};

struct GaResult {
    PipelineSpec best;
    CvScore best_score;
    std::vector<double> best_per_generation;
};

// Tournament selection (size 2), one-point crossover over the 7-gene genome,
// per-gene mutation, elitism. Fitness ties break to fewer stages, then the
// lexicographically smaller canonical genome.
GaResult ga_search(PipelineEvaluator& evaluator, const GrammarBounds& bounds,
                   const GaConfig& config);

struct ParamGrid {
    std::vector<int> n_trees;
    std::vector<std::optional<int>> max_depth;
    std::vector<int> knn_k;
    std::vector<double> rf_weight;
};

struct GridResult {
    PipelineSpec best;
    CvScore score;
    std::size_t cells = 0;  // exactly the product of the relevant value lists
};

// Exhaustive scan over the Cartesian product of the lists relevant to the
// spec's classifier, in fixed nested order (n_trees, max_depth, knn_k,
// rf_weight innermost). First cell wins ties.
GridResult grid_refine(PipelineEvaluator& evaluator, const PipelineSpec& spec,
                       const ParamGrid& grid);

}  // namespace hoofwatch::automl
