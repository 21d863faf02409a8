#include "hoofwatch/automl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hoofwatch/csv.hpp"
#include "hoofwatch/error.hpp"
#include "hoofwatch/herd.hpp"
#include "hoofwatch/model_io.hpp"
#include "hoofwatch/parallel.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::automl {

using nlohmann::json;

const char* to_string(Scaler s) { return s == Scaler::none ? "none" : "minmax"; }
const char* to_string(Expander e) { return e == Expander::none ? "none" : "poly2"; }
const char* to_string(ClassifierKind c) {
    switch (c) {
        case ClassifierKind::rf: return "rf";
        case ClassifierKind::knn: return "knn";
        default: return "ensemble";
    }
}

PipelineSpec PipelineSpec::normalized() const {
    PipelineSpec out = *this;
    PipelineSpec defaults;
    if (classifier == ClassifierKind::knn) {
        out.rf_n_trees = defaults.rf_n_trees;
        out.rf_max_depth = defaults.rf_max_depth;
        out.rf_min_samples_split = defaults.rf_min_samples_split;
    }
    if (classifier == ClassifierKind::rf) out.knn_k = defaults.knn_k;
    if (classifier != ClassifierKind::ensemble) out.rf_weight = defaults.rf_weight;
    return out;
}

std::string PipelineSpec::canonical() const {
    PipelineSpec n = normalized();
    std::string s;
    s += "scaler=";
    s += to_string(n.scaler);
    s += ";expander=";
    s += to_string(n.expander);
    s += ";clf=";
    s += to_string(n.classifier);
    s += ";n_trees=" + std::to_string(n.rf_n_trees);
    s += ";max_depth=" + (n.rf_max_depth ? std::to_string(*n.rf_max_depth) : std::string("none"));
    s += ";mss=" + std::to_string(n.rf_min_samples_split);
    s += ";k=" + std::to_string(n.knn_k);
    s += ";w_rf=" + csv::format_double(n.rf_weight);
    return s;
}

int PipelineSpec::stage_count() const {
    int stages = classifier == ClassifierKind::ensemble ? 2 : 1;
    if (scaler != Scaler::none) ++stages;
    if (expander != Expander::none) ++stages;
    return stages;
}

// Only genes the chosen classifier actually uses are checked: inactive genes
// normalize to fixed defaults and carry no meaning.
void PipelineSpec::validate(const GrammarBounds& b) const {
    auto in = [](const auto& list, auto v) {
        return std::find(list.begin(), list.end(), v) != list.end();
    };
    if (!in(b.scalers, scaler) || !in(b.expanders, expander) || !in(b.classifiers, classifier))
        throw Error("grammar_bounds", "pipeline stage outside grammar");
    if (classifier != ClassifierKind::knn) {
        if (rf_n_trees < b.n_trees_min || rf_n_trees > b.n_trees_max)
            throw Error("grammar_bounds", "n_trees outside grammar bounds");
        if (rf_max_depth && (*rf_max_depth < b.depth_min || *rf_max_depth > b.depth_max))
            throw Error("grammar_bounds", "max_depth outside grammar bounds");
        if (!rf_max_depth && !b.allow_no_depth)
            throw Error("grammar_bounds", "unlimited depth not admitted by grammar");
        if (rf_min_samples_split < 2)
            throw Error("grammar_bounds", "min_samples_split must be >= 2");
    }
    if (classifier != ClassifierKind::rf && (knn_k < b.k_min || knn_k > b.k_max))
        throw Error("grammar_bounds", "k outside grammar bounds");
    if (classifier == ClassifierKind::ensemble &&
        (!(rf_weight >= 0.0 && rf_weight <= 1.0) || rf_weight < b.weight_min ||
         rf_weight > b.weight_max))
        throw Error("grammar_bounds", "rf_weight outside grammar bounds");
}

PipelineSpec default_pipeline() {
    PipelineSpec spec;
    spec.scaler = Scaler::minmax;
    spec.expander = Expander::poly2;
    spec.classifier = ClassifierKind::ensemble;
    return spec;
}

json spec_to_json(const PipelineSpec& spec) {
    json j = {{"scaler", to_string(spec.scaler)},
              {"expander", to_string(spec.expander)},
              {"classifier", to_string(spec.classifier)},
              {"rf_n_trees", spec.rf_n_trees},
              {"rf_min_samples_split", spec.rf_min_samples_split},
              {"knn_k", spec.knn_k},
              {"rf_weight", spec.rf_weight}};
    j["rf_max_depth"] = spec.rf_max_depth ? json(*spec.rf_max_depth) : json();
    return j;
}

PipelineSpec spec_from_json(const json& j) {
    PipelineSpec spec;
    auto scaler = j.at("scaler").get<std::string>();
    spec.scaler = scaler == "none" ? Scaler::none : Scaler::minmax;
    auto expander = j.at("expander").get<std::string>();
    spec.expander = expander == "none" ? Expander::none : Expander::poly2;
    auto clf = j.at("classifier").get<std::string>();
    spec.classifier = clf == "rf" ? ClassifierKind::rf
                     : clf == "knn" ? ClassifierKind::knn
                                    : ClassifierKind::ensemble;
    spec.rf_n_trees = j.at("rf_n_trees").get<int>();
    if (!j.at("rf_max_depth").is_null()) spec.rf_max_depth = j.at("rf_max_depth").get<int>();
    spec.rf_min_samples_split = j.at("rf_min_samples_split").get<int>();
    spec.knn_k = j.at("knn_k").get<int>();
    spec.rf_weight = j.at("rf_weight").get<double>();
    return spec;
}

void GaConfig::validate() const {
    if (population < 2) throw Error("bad_ga_config", "population must be >= 2");
    if (generations < 0) throw Error("bad_ga_config", "generations must be >= 0");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
        throw Error("bad_ga_config", "mutation rate outside [0, 1]");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw Error("bad_ga_config", "crossover rate outside [0, 1]");
    if (elitism < 1 || elitism > population)
        throw Error("bad_ga_config", "elitism must be in [1, population]");
}

namespace {

Eigen::MatrixXd transform(const TrainedPipeline& model, const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd x = raw;
    if (model.minmax) x = featurize::apply_minmax(*model.minmax, x);
    if (model.spec.expander == Expander::poly2) x = featurize::poly2_expand(x);
    return x;
}

}  // namespace

double TrainedPipeline::proba(const Eigen::RowVectorXd& raw_row) const {
    Eigen::MatrixXd m = raw_row;
    Eigen::RowVectorXd x = transform(*this, m).row(0);
    if (const auto* forest = std::get_if<learners::ForestModel>(&classifier))
        return learners::forest_proba(*forest, x);
    if (const auto* knn = std::get_if<learners::KnnModel>(&classifier))
        return learners::knn_proba(*knn, x);
    return learners::ensemble_proba(std::get<learners::EnsembleModel>(classifier), x);
}

int TrainedPipeline::predict(const Eigen::RowVectorXd& raw_row) const {
    return learners::classify(proba(raw_row));
}

TrainedPipeline fit_pipeline(const PipelineSpec& spec, const FeatureMatrix& train,
                             std::uint64_t seed) {
    TrainedPipeline model;
    model.spec = spec;
    model.input_features = train.cols();

    Eigen::MatrixXd x = train.values;
    if (spec.scaler == Scaler::minmax) {
        model.minmax = featurize::fit_minmax(x);
        x = featurize::apply_minmax(*model.minmax, x);
    }
    if (spec.expander == Expander::poly2) x = featurize::poly2_expand(x);

    learners::ForestParams forest_params;
    forest_params.n_trees = spec.rf_n_trees;
    forest_params.max_depth = spec.rf_max_depth;
    forest_params.min_samples_split = spec.rf_min_samples_split;

    switch (spec.classifier) {
        case ClassifierKind::rf:
            model.classifier = learners::forest_train(x, train.labels, forest_params,
                                                      derive_seed(seed, 0));
            break;
        case ClassifierKind::knn:
            model.classifier = learners::knn_train(x, train.labels, spec.knn_k);
            break;
        case ClassifierKind::ensemble: {
            learners::EnsembleModel ensemble;
            ensemble.forest = learners::forest_train(x, train.labels, forest_params,
                                                     derive_seed(seed, 0));
            ensemble.knn = learners::knn_train(x, train.labels, spec.knn_k);
            ensemble.forest_weight = spec.rf_weight;
            ensemble.knn_weight = 1.0 - spec.rf_weight;
            model.classifier = std::move(ensemble);
            break;
        }
    }
    return model;
}

double accuracy(const TrainedPipeline& model, const FeatureMatrix& matrix) {
    if (matrix.rows() == 0) throw Error("empty_matrix", "cannot score an empty matrix");
    Eigen::MatrixXd x = transform(model, matrix.values);
    long correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::RowVectorXd row = x.row(i);
        double p;
        if (const auto* forest = std::get_if<learners::ForestModel>(&model.classifier))
            p = learners::forest_proba(*forest, row);
        else if (const auto* knn = std::get_if<learners::KnnModel>(&model.classifier))
            p = learners::knn_proba(*knn, row);
        else
            p = learners::ensemble_proba(std::get<learners::EnsembleModel>(model.classifier), row);
        correct += learners::classify(p) == matrix.labels[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows());
}

json trained_to_json(const TrainedPipeline& model, const std::vector<std::string>& feature_names) {
    json j = {{"schema_version", model_io::kSchemaVersion},
              {"spec", spec_to_json(model.spec)},
              {"input_features", model.input_features},
              {"feature_names", feature_names}};
    if (model.minmax) {
        json mins = json::array(), maxs = json::array();
        for (Eigen::Index i = 0; i < model.minmax->min.size(); ++i) {
            mins.push_back(model.minmax->min(i));
            maxs.push_back(model.minmax->max(i));
        }
        j["minmax"] = {{"min", mins}, {"max", maxs}};
    } else {
        j["minmax"] = json();
    }
    if (const auto* forest = std::get_if<learners::ForestModel>(&model.classifier))
        j["classifier"] = model_io::forest_to_json(*forest);
    else if (const auto* knn = std::get_if<learners::KnnModel>(&model.classifier))
        j["classifier"] = model_io::knn_to_json(*knn);
    else
        j["classifier"] =
            model_io::ensemble_to_json(std::get<learners::EnsembleModel>(model.classifier));
    return j;
}

TrainedPipeline trained_from_json(const json& j) {
    TrainedPipeline model;
    model.spec = spec_from_json(j.at("spec"));
    model.input_features = j.at("input_features").get<Eigen::Index>();
    if (!j.at("minmax").is_null()) {
        const auto& mm = j.at("minmax");
        featurize::MinMaxParams params;
        auto mins = mm.at("min").get<std::vector<double>>();
        auto maxs = mm.at("max").get<std::vector<double>>();
        params.min = Eigen::Map<Eigen::VectorXd>(mins.data(), static_cast<Eigen::Index>(mins.size()));
        params.max = Eigen::Map<Eigen::VectorXd>(maxs.data(), static_cast<Eigen::Index>(maxs.size()));
        model.minmax = std::move(params);
    }
    const auto& clf = j.at("classifier");
    auto type = clf.at("type").get<std::string>();
    if (type == "forest")
        model.classifier = model_io::forest_from_json(clf);
    else if (type == "knn")
        model.classifier = model_io::knn_from_json(clf);
    else
        model.classifier = model_io::ensemble_from_json(clf);
    return model;
}

namespace {

CvScore score_on_folds(const PipelineSpec& spec,
                       const std::vector<std::pair<FeatureMatrix, FeatureMatrix>>& folds,
                       std::uint64_t base_seed) {
    CvScore score;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        auto model = fit_pipeline(spec, folds[f].first, derive_seed(base_seed, f));
        score.per_fold.push_back(accuracy(model, folds[f].second));
    }
    double sum = 0.0;
    for (double v : score.per_fold) sum += v;
    score.mean = sum / static_cast<double>(score.per_fold.size());
    double var = 0.0;
    for (double v : score.per_fold) var += (v - score.mean) * (v - score.mean);
    score.stddev = std::sqrt(var / static_cast<double>(score.per_fold.size()));
    return score;
}

}  // namespace

CvScore evaluate_pipeline(const PipelineSpec& spec, const FeatureMatrix& matrix, int k,
                          std::uint64_t seed) {
    auto folds = herd::grouped_kfold(matrix, k, derive_seed(seed, 0));
    return score_on_folds(spec, folds, derive_seed(seed, 1));
}

PipelineEvaluator::PipelineEvaluator(const FeatureMatrix& data, int k, std::uint64_t master_seed,
                                     int jobs, LogSink log)
    : folds_(herd::grouped_kfold(data, k, derive_seed(master_seed, 0))),
      k_(k),
      master_seed_(master_seed),
      jobs_(jobs),
      log_(std::move(log)) {}

CvScore PipelineEvaluator::evaluate(const PipelineSpec& spec, int generation) {
    return evaluate_all({spec}, generation).front();
}

std::vector<CvScore> PipelineEvaluator::evaluate_all(const std::vector<PipelineSpec>& specs,
                                                     int generation) {
    // Distinct uncached genomes get evaluated in parallel slots; cache and log
    // updates happen in input order so results are schedule-independent.
    std::vector<std::string> keys;
    keys.reserve(specs.size());
    for (const auto& s : specs) keys.push_back(s.canonical());

    std::vector<std::size_t> fresh;
    std::map<std::string, std::size_t> first_index;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (cache_.count(keys[i]) || first_index.count(keys[i])) continue;
        first_index[keys[i]] = i;
        fresh.push_back(i);
    }

    std::vector<CvScore> computed(fresh.size());
    parallel_for(fresh.size(), jobs_, [&](std::size_t slot) {
        const auto& spec = specs[fresh[slot]];
        std::uint64_t genome_seed = derive_seed(master_seed_, fnv1a64(keys[fresh[slot]]));
        computed[slot] = score_on_folds(spec, folds_, genome_seed);
    });

    for (std::size_t slot = 0; slot < fresh.size(); ++slot) {
        const auto& key = keys[fresh[slot]];
        cache_[key] = computed[slot];
        ++evaluations_;
        if (log_) {
            json entry = {{"genome", spec_to_json(specs[fresh[slot]].normalized())},
                          {"mean_accuracy", computed[slot].mean},
                          {"fold_accuracies", computed[slot].per_fold},
                          {"generation", generation}};
            log_(entry);
        }
    }

    std::vector<CvScore> out;
    out.reserve(specs.size());
    for (const auto& key : keys) out.push_back(cache_.at(key));
    return out;
}

namespace {

// Composite fitness order: higher mean accuracy, then fewer stages, then the
// lexicographically smaller canonical genome.
bool better(const CvScore& a_score, const PipelineSpec& a, const CvScore& b_score,
            const PipelineSpec& b) {
    if (a_score.mean != b_score.mean) return a_score.mean > b_score.mean;
    if (a.stage_count() != b.stage_count()) return a.stage_count() < b.stage_count();
    return a.canonical() < b.canonical();
}

struct GeneSampler {
    const GrammarBounds& bounds;
    Rng& rng;

    void resample(PipelineSpec& spec, int gene) const {
        switch (gene) {
            case 0: spec.scaler = bounds.scalers[rng.uniform_index(bounds.scalers.size())]; break;
            case 1:
                spec.expander = bounds.expanders[rng.uniform_index(bounds.expanders.size())];
                break;
            case 2:
                spec.classifier = bounds.classifiers[rng.uniform_index(bounds.classifiers.size())];
                break;
            case 3: spec.rf_n_trees = rng.uniform_int(bounds.n_trees_min, bounds.n_trees_max); break;
            case 4: {
                int lo = bounds.allow_no_depth ? bounds.depth_min - 1 : bounds.depth_min;
                int v = rng.uniform_int(lo, bounds.depth_max);
                spec.rf_max_depth = v < bounds.depth_min ? std::nullopt : std::optional<int>(v);
                break;
            }
            case 5: spec.knn_k = rng.uniform_int(bounds.k_min, bounds.k_max); break;
            default: spec.rf_weight = rng.uniform(bounds.weight_min, bounds.weight_max); break;
        }
    }

    PipelineSpec sample() const {
        PipelineSpec spec;
        for (int g = 0; g < 7; ++g) resample(spec, g);
        return spec;
    }
};

void copy_gene(PipelineSpec& child, const PipelineSpec& parent, int gene) {
    switch (gene) {
        case 0: child.scaler = parent.scaler; break;
        case 1: child.expander = parent.expander; break;
        case 2: child.classifier = parent.classifier; break;
        case 3: child.rf_n_trees = parent.rf_n_trees; break;
        case 4: child.rf_max_depth = parent.rf_max_depth; break;
        case 5: child.knn_k = parent.knn_k; break;
        default: child.rf_weight = parent.rf_weight; break;
    }
}

}  // namespace

GaResult ga_search(PipelineEvaluator& evaluator, const GrammarBounds& bounds,
                   const GaConfig& config) {
    config.validate();
    Rng rng(config.seed);
    GeneSampler sampler{bounds, rng};

    std::vector<PipelineSpec> population;
    for (int i = 0; i < config.population; ++i) {
        auto spec = sampler.sample();
        spec.validate(bounds);
        population.push_back(spec);
    }

    GaResult result;
    bool have_best = false;

    for (int gen = 0; gen <= config.generations; ++gen) {
        auto scores = evaluator.evaluate_all(population, gen);

        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return better(scores[a], population[a], scores[b], population[b]);
        });

        const auto& gen_best_spec = population[order[0]];
        const auto& gen_best_score = scores[order[0]];
        // Elitism plus genome-keyed fitness makes this monotone; enforced on
        // every run.
        if (!result.best_per_generation.empty() &&
            gen_best_score.mean < result.best_per_generation.back())
            throw Error("ga_monotonicity", "best fitness decreased across generations");
        result.best_per_generation.push_back(gen_best_score.mean);
        if (!have_best || better(gen_best_score, gen_best_spec, result.best_score, result.best)) {
            result.best = gen_best_spec;
            result.best_score = gen_best_score;
            have_best = true;
        }

        if (gen == config.generations) break;

        auto tournament = [&]() -> const PipelineSpec& {
            std::size_t a = rng.uniform_index(population.size());
            std::size_t b = rng.uniform_index(population.size());
            return better(scores[a], population[a], scores[b], population[b]) ? population[a]
                                                                              : population[b];
        };

        std::vector<PipelineSpec> next;
        for (int e = 0; e < config.elitism; ++e)
            next.push_back(population[order[static_cast<std::size_t>(e)]]);
        while (static_cast<int>(next.size()) < config.population) {
            PipelineSpec child = tournament();
            if (rng.uniform() < config.crossover_rate) {
                const PipelineSpec& other = tournament();
                int point = rng.uniform_int(1, 6);
                for (int g = point; g < 7; ++g) copy_gene(child, other, g);
            }
            for (int g = 0; g < 7; ++g)
                if (rng.uniform() < config.mutation_rate) sampler.resample(child, g);
            child.validate(bounds);
            next.push_back(child);
        }
        population = std::move(next);
    }
    return result;
}

GridResult grid_refine(PipelineEvaluator& evaluator, const PipelineSpec& spec,
                       const ParamGrid& grid) {
    bool uses_rf = spec.classifier != ClassifierKind::knn;
    bool uses_knn = spec.classifier != ClassifierKind::rf;
    bool uses_weight = spec.classifier == ClassifierKind::ensemble;

    std::vector<int> n_trees = uses_rf ? grid.n_trees : std::vector<int>{spec.rf_n_trees};
    std::vector<std::optional<int>> max_depth =
        uses_rf ? grid.max_depth : std::vector<std::optional<int>>{spec.rf_max_depth};
    std::vector<int> knn_k = uses_knn ? grid.knn_k : std::vector<int>{spec.knn_k};
    std::vector<double> rf_weight = uses_weight ? grid.rf_weight : std::vector<double>{spec.rf_weight};

    if (n_trees.empty() || max_depth.empty() || knn_k.empty() || rf_weight.empty())
        throw Error("empty_grid", "grid has an empty value list for a relevant hyperparameter");

    std::vector<PipelineSpec> cells;
    for (int trees : n_trees)
        for (const auto& depth : max_depth)
            for (int k : knn_k)
                for (double w : rf_weight) {
                    PipelineSpec cell = spec;
                    cell.rf_n_trees = trees;
                    cell.rf_max_depth = depth;
                    cell.knn_k = k;
                    cell.rf_weight = w;
                    cells.push_back(cell);
                }

    auto scores = evaluator.evaluate_all(cells, -1);

    GridResult result;
    result.cells = cells.size();
    std::size_t winner = 0;
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (scores[i].mean > scores[winner].mean) winner = i;
    result.best = cells[winner];
    result.score = scores[winner];
    return result;
}

}  // namespace hoofwatch::automl
