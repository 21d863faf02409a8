#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "hoofwatch/automl.hpp"
#include "hoofwatch/herd.hpp"
#include "hoofwatch/rng.hpp"

using namespace hoofwatch;
using namespace hoofwatch::automl;

namespace {

// n_cows cows, rows_per_cow rows each. With `separable`, feature 0 encodes
// the label exactly; the rest is noise either way.
FeatureMatrix toy_dataset(int n_cows, int rows_per_cow, bool separable, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m;
    m.feature_names = {"f0", "f1", "f2"};
    int rows = n_cows * rows_per_cow;
    m.values.resize(rows, 3);
    int r = 0;
    for (int cow = 0; cow < n_cows; ++cow) {
        int label = cow % 2;
        for (int i = 0; i < rows_per_cow; ++i, ++r) {
            m.labels.push_back(label);
            m.group_ids.push_back("cow" + std::to_string(cow));
            m.values(r, 0) = separable ? (label ? 5.0 + rng.uniform() : -5.0 - rng.uniform())
                                       : rng.uniform(-1, 1);
            m.values(r, 1) = rng.uniform(-1, 1);
            m.values(r, 2) = rng.uniform(-1, 1);
        }
    }
    return m;
}

GrammarBounds small_bounds() {
    GrammarBounds b;
    b.n_trees_min = 10;
    b.n_trees_max = 40;
    b.k_min = 1;
    b.k_max = 5;
    return b;
}

GaConfig small_ga(std::uint64_t seed) {
    GaConfig cfg;
    cfg.population = 8;
    cfg.generations = 3;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("canonical form normalizes inactive genes and orders stages") {
    PipelineSpec spec;
    spec.scaler = Scaler::minmax;
    spec.expander = Expander::poly2;
    spec.classifier = ClassifierKind::knn;
    spec.knn_k = 7;
    spec.rf_n_trees = 222;       // inactive for knn
    spec.rf_weight = 0.123;      // inactive outside ensemble
    PipelineSpec other = spec;
    other.rf_n_trees = 55;
    other.rf_weight = 0.9;
    CHECK(spec.canonical() == other.canonical());
    CHECK(spec.canonical().find("clf=knn") != std::string::npos);
    CHECK(spec.stage_count() == 3);

    PipelineSpec ens = default_pipeline();
    CHECK(ens.stage_count() == 4);  // minmax + poly2 + two ensemble members
    CHECK(spec_from_json(spec_to_json(ens)).canonical() == ens.canonical());
}

TEST_CASE("grammar bounds validation rejects out-of-range active genes") {
    GrammarBounds bounds;
    PipelineSpec spec;  // rf classifier
    spec.rf_n_trees = 5;
    CHECK_THROWS_AS(spec.validate(bounds), Error);
    spec.rf_n_trees = 100;
    spec.rf_max_depth = 1;
    CHECK_THROWS_AS(spec.validate(bounds), Error);
    spec.rf_max_depth = 16;
    spec.knn_k = 26;  // inactive for rf, so ignored
    CHECK_NOTHROW(spec.validate(bounds));
    spec.classifier = ClassifierKind::ensemble;
    CHECK_THROWS_AS(spec.validate(bounds), Error);  // now the bad k counts
    spec.knn_k = 25;
    spec.rf_weight = 1.5;
    CHECK_THROWS_AS(spec.validate(bounds), Error);
    spec.rf_weight = 0.5;
    CHECK_NOTHROW(spec.validate(bounds));

    GrammarBounds no_knn;
    no_knn.classifiers = {ClassifierKind::rf};
    spec.classifier = ClassifierKind::knn;
    CHECK_THROWS_AS(spec.validate(no_knn), Error);
}

TEST_CASE("ga config validation") {
    GaConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.population = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.population = 8;
    cfg.mutation_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.mutation_rate = 0.2;
    cfg.elitism = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("evaluate_pipeline scores a constant-feature dataset near chance") {
    // Constant features carry no information; accuracy is the majority share
    // of each validation fold, which hovers around 0.5 on 50/50 labels.
    FeatureMatrix m = toy_dataset(20, 2, false, 3);
    m.values.setConstant(1.0);
    PipelineSpec rf;
    rf.classifier = ClassifierKind::rf;
    rf.rf_n_trees = 20;
    auto score = evaluate_pipeline(rf, m, 5, 17);
    CHECK(score.per_fold.size() == 5);
    CHECK(score.mean > 0.2);
    CHECK(score.mean < 0.8);
}

TEST_CASE("evaluate_pipeline reaches 1.0 on separable data and replays fold by fold") {
    FeatureMatrix m = toy_dataset(12, 2, true, 4);
    PipelineSpec rf;
    rf.classifier = ClassifierKind::rf;
    rf.rf_n_trees = 15;
    auto score = evaluate_pipeline(rf, m, 4, 9);
    CHECK(score.mean == doctest::Approx(1.0));

    // Direct fold replay: same folds, same per-fold seeds, same accuracies.
    auto folds = herd::grouped_kfold(m, 4, derive_seed(9, 0));
    std::uint64_t base = derive_seed(9, 1);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        auto model = fit_pipeline(rf, folds[f].first, derive_seed(base, f));
        CHECK(accuracy(model, folds[f].second) == score.per_fold[f]);
    }
}

TEST_CASE("evaluate_pipeline propagates fold-construction errors") {
    FeatureMatrix m = toy_dataset(3, 2, false, 2);  // only 3 cows
    PipelineSpec spec;
    CHECK_THROWS_WITH_AS(evaluate_pipeline(spec, m, 5, 1), doctest::Contains("k exceeds"), Error);
}

TEST_CASE("training failures surface through parallel evaluation") {
    FeatureMatrix m = toy_dataset(6, 1, false, 2);
    PipelineSpec bad;
    bad.classifier = ClassifierKind::knn;
    bad.knn_k = 10;  // larger than any fold's training side
    PipelineEvaluator evaluator(m, 3, 5, /*jobs=*/4);
    CHECK_THROWS_AS(evaluator.evaluate_all({bad, bad, bad, bad}, 0), Error);
}

TEST_CASE("evaluate_pipeline is deterministic in (spec, data, seed)") {
    FeatureMatrix m = toy_dataset(10, 3, false, 5);
    PipelineSpec spec = default_pipeline();
    spec.rf_n_trees = 25;
    spec.knn_k = 3;
    auto a = evaluate_pipeline(spec, m, 5, 42);
    auto b = evaluate_pipeline(spec, m, 5, 42);
    CHECK(a.per_fold == b.per_fold);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
}

TEST_CASE("pipeline transforms are fitted on fold-train rows only") {
    FeatureMatrix m = toy_dataset(10, 2, false, 6);
    auto folds = herd::grouped_kfold(m, 5, 77);
    PipelineSpec spec;
    spec.scaler = Scaler::minmax;
    spec.classifier = ClassifierKind::knn;
    spec.knn_k = 3;

    auto fitted = fit_pipeline(spec, folds[0].first, 1);
    REQUIRE(fitted.minmax.has_value());

    // Rescaling the validation rows must not move the fitted parameters.
    FeatureMatrix mutated = m;
    std::set<std::string> validation_cows(folds[0].second.group_ids.begin(),
                                          folds[0].second.group_ids.end());
    for (Eigen::Index i = 0; i < mutated.rows(); ++i)
        if (validation_cows.count(mutated.group_ids[static_cast<std::size_t>(i)]))
            mutated.values.row(i) *= 100.0;
    auto mutated_folds = herd::grouped_kfold(mutated, 5, 77);
    auto refitted = fit_pipeline(spec, mutated_folds[0].first, 1);
    CHECK(fitted.minmax->min == refitted.minmax->min);
    CHECK(fitted.minmax->max == refitted.minmax->max);
}

TEST_CASE("fit_pipeline orders scaler before expansion and trains every classifier kind") {
    FeatureMatrix m = toy_dataset(8, 2, true, 7);
    for (auto kind : {ClassifierKind::rf, ClassifierKind::knn, ClassifierKind::ensemble}) {
        PipelineSpec spec = default_pipeline();
        spec.classifier = kind;
        spec.rf_n_trees = 10;
        spec.knn_k = 3;
        auto model = fit_pipeline(spec, m, 5);
        CHECK(accuracy(model, m) == doctest::Approx(1.0));
        auto round_trip = trained_from_json(trained_to_json(model, m.feature_names));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            Eigen::RowVectorXd row = m.values.row(i);
            CHECK(round_trip.proba(row) == model.proba(row));
        }
    }
}

TEST_CASE("ga_search returns the generation-0 best when generations = 0") {
    FeatureMatrix m = toy_dataset(10, 2, true, 8);
    std::vector<nlohmann::json> log;
    PipelineEvaluator evaluator(m, 3, 21, 1, [&](const nlohmann::json& j) { log.push_back(j); });
    GaConfig cfg = small_ga(13);
    cfg.generations = 0;
    auto result = ga_search(evaluator, small_bounds(), cfg);
    REQUIRE(result.best_per_generation.size() == 1);

    double best_logged = 0;
    for (const auto& entry : log) {
        CHECK(entry.at("generation").get<int>() == 0);
        best_logged = std::max(best_logged, entry.at("mean_accuracy").get<double>());
    }
    CHECK(result.best_score.mean == best_logged);
}

TEST_CASE("a singleton grammar forces the single admissible genome") {
    FeatureMatrix m = toy_dataset(10, 2, true, 9);
    GrammarBounds singleton;
    singleton.scalers = {Scaler::minmax};
    singleton.expanders = {Expander::none};
    singleton.classifiers = {ClassifierKind::knn};
    singleton.n_trees_min = singleton.n_trees_max = 50;
    singleton.allow_no_depth = false;
    singleton.depth_min = singleton.depth_max = 4;
    singleton.k_min = singleton.k_max = 3;
    singleton.weight_min = singleton.weight_max = 0.5;

    PipelineEvaluator evaluator(m, 3, 22);
    auto result = ga_search(evaluator, singleton, small_ga(14));
    PipelineSpec expect;
    expect.scaler = Scaler::minmax;
    expect.expander = Expander::none;
    expect.classifier = ClassifierKind::knn;
    expect.knn_k = 3;
    CHECK(result.best.canonical() == expect.canonical());
    CHECK(evaluator.evaluations() == 1);  // cache collapses the whole run
}

TEST_CASE("ga best-fitness trace is non-decreasing and genomes stay in bounds") {
    FeatureMatrix m = toy_dataset(14, 2, false, 10);
    auto bounds = small_bounds();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::vector<nlohmann::json> log;
        PipelineEvaluator evaluator(m, 3, 100 + seed, 1,
                                    [&](const nlohmann::json& j) { log.push_back(j); });
        auto result = ga_search(evaluator, bounds, small_ga(seed));
        for (std::size_t g = 1; g < result.best_per_generation.size(); ++g)
            CHECK(result.best_per_generation[g] >= result.best_per_generation[g - 1]);
        for (const auto& entry : log)
            CHECK_NOTHROW(spec_from_json(entry.at("genome")).validate(bounds));
    }
}

TEST_CASE("ga_search is reproducible for identical inputs") {
    FeatureMatrix m = toy_dataset(12, 2, false, 11);
    PipelineEvaluator ev_a(m, 3, 500);
    PipelineEvaluator ev_b(m, 3, 500);
    auto a = ga_search(ev_a, small_bounds(), small_ga(7));
    auto b = ga_search(ev_b, small_bounds(), small_ga(7));
    CHECK(a.best.canonical() == b.best.canonical());
    CHECK(a.best_per_generation == b.best_per_generation);
}

TEST_CASE("parallel candidate evaluation equals serial execution") {
    FeatureMatrix m = toy_dataset(12, 2, false, 12);
    PipelineEvaluator serial(m, 3, 600, 1);
    PipelineEvaluator parallel(m, 3, 600, 4);
    auto a = ga_search(serial, small_bounds(), small_ga(3));
    auto b = ga_search(parallel, small_bounds(), small_ga(3));
    CHECK(a.best.canonical() == b.best.canonical());
    CHECK(a.best_per_generation == b.best_per_generation);
}

TEST_CASE("grid_refine enumerates the exact product and replays its winner") {
    FeatureMatrix m = toy_dataset(10, 2, false, 13);
    PipelineSpec spec;
    spec.classifier = ClassifierKind::rf;

    ParamGrid grid;
    grid.n_trees = {10, 20};
    grid.max_depth = {std::nullopt, 4, 8};

    PipelineEvaluator evaluator(m, 3, 700);
    auto result = grid_refine(evaluator, spec, grid);
    CHECK(result.cells == 6);  // 2 x 3, knn_k and weight lists irrelevant for rf
    CHECK(evaluator.evaluations() == 6);

    // Independent replay of all six cells against a fresh evaluator.
    PipelineEvaluator replay(m, 3, 700);
    double best = -1;
    std::string best_key;
    for (int trees : grid.n_trees)
        for (const auto& depth : grid.max_depth) {
            PipelineSpec cell = spec;
            cell.rf_n_trees = trees;
            cell.rf_max_depth = depth;
            double mean = replay.evaluate(cell, -1).mean;
            if (mean > best) {
                best = mean;
                best_key = cell.canonical();
            }
        }
    CHECK(result.best.canonical() == best_key);
    CHECK(result.score.mean == best);
}

TEST_CASE("grid_refine: singleton grid returns that point; incumbent never wins by less") {
    FeatureMatrix m = toy_dataset(10, 2, false, 14);
    PipelineSpec spec;
    spec.classifier = ClassifierKind::knn;
    spec.knn_k = 3;

    ParamGrid one;
    one.knn_k = {4};
    PipelineEvaluator evaluator(m, 3, 800);
    auto result = grid_refine(evaluator, spec, one);
    CHECK(result.cells == 1);
    CHECK(result.best.knn_k == 4);

    ParamGrid with_incumbent;
    with_incumbent.knn_k = {1, 3, 5};
    auto incumbent_score = evaluator.evaluate(spec, -1);
    auto refined = grid_refine(evaluator, spec, with_incumbent);
    CHECK(refined.score.mean >= incumbent_score.mean);

    ParamGrid empty;
    CHECK_THROWS_WITH_AS(grid_refine(evaluator, spec, empty), doctest::Contains("empty"), Error);
}
