// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Heavier end-to-end criteria run the same code paths as the CLI commands.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <vector>

#include "hoofwatch/evaluate.hpp"
#include "hoofwatch/rng.hpp"
#include "oracles.hpp"

using namespace hoofwatch;

namespace {

struct Harness {
    int failures = 0;

    void criterion(const char* name, const std::function<bool()>& body) {
        auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = body();
        } catch (const std::exception& e) {
            std::printf("       %s threw: %s\n", name, e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %-24s (%.1f s)\n", ok ? "PASS" : "FAIL", name, secs);
        std::fflush(stdout);
        failures += !ok;
    }
};

FeatureMatrix random_grouped_matrix(Rng& rng) {
    FeatureMatrix m;
    m.feature_names = {"f"};
    int n_groups = rng.uniform_int(5, 40);
    int rows = rng.uniform_int(n_groups, 4 * n_groups);
    m.values.resize(rows, 1);
    for (int i = 0; i < rows; ++i) {
        m.values(i, 0) = rng.uniform(0, 1);
        m.labels.push_back(static_cast<int>(rng.uniform_index(2)));
        m.group_ids.push_back("cow" + std::to_string(rng.uniform_index(static_cast<std::size_t>(n_groups))));
    }
    return m;
}

bool leakage_audit() {
    Rng rng(1001);
    for (int run = 0; run < 100; ++run) {
        auto m = random_grouped_matrix(rng);
        std::set<std::string> groups(m.group_ids.begin(), m.group_ids.end());
        if (groups.size() < 2) continue;

        auto [train, test] = herd::grouped_split(m, rng.uniform(0.1, 0.5), run);
        std::set<std::string> tr(train.group_ids.begin(), train.group_ids.end());
        for (const auto& g : test.group_ids)
            if (tr.count(g)) return false;
        if (train.rows() + test.rows() != m.rows()) return false;

        int k = std::min<int>(5, static_cast<int>(groups.size()));
        if (k >= 2) {
            for (const auto& [ktrain, kval] : herd::grouped_kfold(m, k, run)) {
                std::set<std::string> kt(ktrain.group_ids.begin(), ktrain.group_ids.end());
                for (const auto& g : kval.group_ids)
                    if (kt.count(g)) return false;
            }
        }
    }
    return true;
}

bool featurization_oracles() {
    Rng rng(1002);
    const Date base = make_date(2023, 5, 1);

    for (int trial = 0; trial < 1000; ++trial) {
        int lag = rng.uniform_int(1, 6);
        int window = rng.uniform_int(1, 7);
        int reference = lag + window - 1 + rng.uniform_int(0, 3);
        std::vector<herd::BehaviorDay> rows;
        std::vector<std::vector<double>> series(
            6, std::vector<double>(static_cast<std::size_t>(reference) + 1));
        for (int day = 0; day <= reference; ++day) {
            herd::BehaviorDay b{"c", base + day, {}};
            for (int c = 0; c < 6; ++c) {
                double v = rng.uniform(-4, 4);
                series[static_cast<std::size_t>(c)][static_cast<std::size_t>(day)] = v;
                b.channels[static_cast<std::size_t>(c)] = v;
            }
            rows.push_back(b);
        }
        featurize::HerdIndex index(rows);
        featurize::LagWindowConfig cfg{lag, window,
                                       {featurize::Aggregate::mean, featurize::Aggregate::sum,
                                        featurize::Aggregate::std_dev}};
        auto row = featurize::lagwindow_features(index, "c", base + reference, cfg);
        for (int c = 0; c < 6; ++c) {
            auto expect =
                oracles::lagwindow(series[static_cast<std::size_t>(c)], reference, lag, window);
            if (std::abs(row(c * 3 + 0) - expect.mean) >= 1e-9) return false;
            if (std::abs(row(c * 3 + 1) - expect.sum) >= 1e-9) return false;
            if (std::abs(row(c * 3 + 2) - expect.std_dev) >= 1e-9) return false;
        }
    }

    for (int trial = 0; trial < 1000; ++trial) {
        int r = rng.uniform_int(2, 12);
        int c = rng.uniform_int(1, 6);
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-5, 5);
        auto got = featurize::pearson_matrix(m);
        if ((got - oracles::pearson(m)).cwiseAbs().maxCoeff() >= 1e-9) return false;
        if ((got - got.transpose()).cwiseAbs().maxCoeff() >= 1e-12) return false;
    }

    for (int c = 1; c <= 64; ++c) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(c, 2.0);
        if (featurize::poly2_expand(row).size() != c + c * (c + 1) / 2) return false;
    }
    return true;
}

bool learner_oracles() {
    Rng rng(1003);

    for (int trial = 0; trial < 200; ++trial) {
        int rows = rng.uniform_int(4, 50);
        int cols = rng.uniform_int(1, 5);
        Eigen::MatrixXd x(rows, cols);
        std::vector<int> y;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) x(i, j) = rng.uniform(-2, 2);
            y.push_back(static_cast<int>(rng.uniform_index(2)));
        }
        auto expect = oracles::cart_best_split(x, y);
        auto tree = learners::train_tree(x, y, {});
        long n1 = 0;
        for (int v : y) n1 += v;
        if (n1 == 0 || n1 == rows || expect.gain <= 0.0) {
            if (!tree->is_leaf()) return false;
        } else {
            if (tree->is_leaf()) return false;
            if (tree->feature != expect.feature || tree->threshold != expect.threshold) return false;
        }
    }

    for (int trial = 0; trial < 100; ++trial) {
        int n = rng.uniform_int(4, 12);
        Eigen::MatrixXd points(n, 2);
        for (int i = 0; i < n; ++i) {
            points(i, 0) = rng.uniform(-1, 1) + (rng.uniform_index(2) ? 5.0 : 0.0);
            points(i, 1) = rng.uniform(-1, 1);
        }
        auto result = learners::kmeans(points, 2, 4000 + static_cast<std::uint64_t>(trial));
        for (std::size_t i = 1; i < result.inertia_trace.size(); ++i)
            if (result.inertia_trace[i] >
                result.inertia_trace[i - 1] + 1e-9 * (1 + result.inertia_trace[i - 1]))
                return false;
        if (std::abs(result.inertia - oracles::kmeans2_optimum(points)) >= 1e-9) return false;
    }

    Eigen::MatrixXd train(60, 4);
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
        for (int j = 0; j < 4; ++j) train(i, j) = rng.uniform(-2, 2);
        labels.push_back(static_cast<int>(rng.uniform_index(2)));
    }
    for (int trial = 0; trial < 500; ++trial) {
        int k = rng.uniform_int(1, 60);
        auto model = learners::knn_train(train, labels, k);
        Eigen::RowVectorXd q(4);
        for (int j = 0; j < 4; ++j) q(j) = rng.uniform(-2, 2);
        if (std::abs(learners::knn_proba(model, q) - oracles::knn_proba(train, labels, q, k)) >=
            1e-12)
            return false;
    }
    return true;
}

bool undersample_contract() {
    Rng rng(1004);
    for (int trial = 0; trial < 200; ++trial) {
        int n = rng.uniform_int(2, 60);
        int k = trial % 10 == 0 ? n : rng.uniform_int(1, n);  // identity case included
        Eigen::MatrixXd values(n, 3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 3; ++j) values(i, j) = rng.uniform(-3, 3);
        auto idx = featurize::kmeans_undersample(values, k, 5000 + static_cast<std::uint64_t>(trial));
        if (static_cast<int>(idx.size()) != k) return false;
        std::set<Eigen::Index> distinct(idx.begin(), idx.end());
        if (distinct.size() != idx.size()) return false;
        for (auto i : idx)
            if (i < 0 || i >= n) return false;
        if (k == n && static_cast<int>(distinct.size()) != n) return false;
    }
    return true;
}

FeatureMatrix toy_search_matrix(std::uint64_t seed) {
    Rng rng(seed);
    FeatureMatrix m;
    m.feature_names = {"f0", "f1", "f2"};
    m.values.resize(28, 3);
    for (int cow = 0; cow < 14; ++cow) {
        for (int i = 0; i < 2; ++i) {
            int r = cow * 2 + i;
            int label = cow % 2;
            m.labels.push_back(label);
            m.group_ids.push_back("cow" + std::to_string(cow));
            m.values(r, 0) = rng.uniform(-1, 1) + (label ? 0.8 : -0.8);
            m.values(r, 1) = rng.uniform(-1, 1);
            m.values(r, 2) = rng.uniform(-1, 1);
        }
    }
    return m;
}

bool search_invariants() {
    automl::GrammarBounds bounds;
    bounds.n_trees_max = 60;
    bounds.k_max = 7;

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = toy_search_matrix(seed);
        automl::PipelineEvaluator evaluator(m, 3, 9000 + seed, 2);
        automl::GaConfig cfg;
        cfg.population = 8;
        cfg.generations = 4;
        cfg.seed = seed;
        auto result = automl::ga_search(evaluator, bounds, cfg);
        for (std::size_t g = 1; g < result.best_per_generation.size(); ++g)
            if (result.best_per_generation[g] < result.best_per_generation[g - 1]) return false;
    }

    // Grid refinement: exact cell count and an independent winner replay.
    auto m = toy_search_matrix(77);
    automl::PipelineSpec spec = automl::default_pipeline();
    spec.rf_n_trees = 20;
    spec.knn_k = 3;
    automl::ParamGrid grid;
    grid.n_trees = {15, 30};
    grid.max_depth = {std::nullopt, 6};
    grid.knn_k = {3, 5};
    grid.rf_weight = {0.4, 0.6};
    automl::PipelineEvaluator evaluator(m, 3, 1234, 2);
    auto refined = automl::grid_refine(evaluator, spec, grid);
    if (refined.cells != 16 || evaluator.evaluations() != 16) return false;

    automl::PipelineEvaluator replay(m, 3, 1234, 1);
    double best = -1;
    std::string best_key;
    for (int trees : grid.n_trees)
        for (auto depth : grid.max_depth)
            for (int k : grid.knn_k)
                for (double w : grid.rf_weight) {
                    automl::PipelineSpec cell = spec;
                    cell.rf_n_trees = trees;
                    cell.rf_max_depth = depth;
                    cell.knn_k = k;
                    cell.rf_weight = w;
                    double mean = replay.evaluate(cell, -1).mean;
                    if (mean > best) {
                        best = mean;
                        best_key = cell.canonical();
                    }
                }
    if (refined.best.canonical() != best_key) return false;

    // Full detection runs are bit-reproducible under a fixed seed.
    synth::SynthConfig herd_cfg;
    herd_cfg.n_cases = 21;
    herd_cfg.seed = 404;
    herd_cfg.channels[1] = {0.20, 0.28, 0.03};
    herd_cfg.shifts[1] = -0.3;
    auto cohort = evaluate::build_cohort(evaluate::from_synth(synth::generate(herd_cfg)));
    evaluate::DetectionConfig det;
    det.seed = 404;
    det.jobs = 2;
    det.ga.population = 8;
    det.ga.generations = 2;
    det.grid.n_trees = {50, 100};
    det.grid.max_depth = {std::nullopt};
    det.grid.knn_k = {3, 5};
    det.grid.rf_weight = {0.5};
    auto a = evaluate::run_detection(cohort, det);
    auto b = evaluate::run_detection(cohort, det);
    return a.to_json().dump() == b.to_json().dump();
}

// The planted-signal herd: the disease signature is a strong drop on the
// 'active' channel ramping in linearly over the last 4 pre-clinical days.
synth::SynthConfig planted_herd(int n_cases, double shift, std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.n_cases = n_cases;
    cfg.seed = seed;
    cfg.lead_days = 4;
    cfg.channels[1] = {0.20, 0.28, 0.03};
    cfg.shifts[1] = shift;
    return cfg;
}

bool planted_signal() {
    // Detection and importance at trial scale: 21 cases + 21 controls.
    auto cohort =
        evaluate::build_cohort(evaluate::from_synth(synth::generate(planted_herd(21, -0.6, 2024))));

    evaluate::DetectionConfig det;
    det.seed = 2024;
    det.jobs = 2;
    auto report = evaluate::run_detection(cohort, det);
    std::printf("       detection test_accuracy = %.4f\n", report.test_accuracy);
    if (report.test_accuracy < 0.90) return false;

    auto matrix = featurize::detection_matrix(cohort.matched, cohort.index);
    auto importance = evaluate::channel_importance(automl::default_pipeline(), matrix, 5, 2024, 2);
    std::printf("       planted-channel importance = %.4f\n", importance[1].importance);
    if (importance[1].channel != herd::Channel::active) return false;
    if (importance[1].importance <= 0.8) return false;

    // The sweep needs 98 + 28 comparable rows per cell, which the 21-cow herd
    // cannot supply after 1:1 balancing; a 90-case herd with the same planted
    // signature fills every cell.
    auto sweep_cohort =
        evaluate::build_cohort(evaluate::from_synth(synth::generate(planted_herd(90, -0.6, 2025))));
    evaluate::SweepConfig sweep;
    sweep.seed = 2025;
    sweep.jobs = 2;
    auto grid = evaluate::run_sweep(sweep_cohort, sweep);

    bool ok = true;
    for (std::size_t wi = 0; wi < grid.windows.size(); ++wi) {
        int inversions = 0;
        double worst = 0.0;
        std::printf("       w=%d:", grid.windows[wi]);
        for (std::size_t li = 0; li < grid.lags.size(); ++li) {
            const auto& cell = grid.cells[li][wi];
            if (!cell.accuracy || cell.train_rows != 98 || cell.test_rows != 28) {
                std::printf(" null");
                ok = false;
                continue;
            }
            std::printf(" %.3f", *cell.accuracy);
            if (li > 0 && grid.cells[li - 1][wi].accuracy) {
                double rise = *cell.accuracy - *grid.cells[li - 1][wi].accuracy;
                if (rise > 0) {
                    ++inversions;
                    worst = std::max(worst, rise);
                }
            }
        }
        std::printf("  (inversions=%d, worst=+%.3f)\n", inversions, worst);
        if (inversions > 1 || worst > 0.05) ok = false;
    }
    return ok;
}

bool null_calibration() {
    const int n_seeds = 20;

    // Detection at study scale with a compact search: the calibration target
    // is the score distribution, not search depth.
    double detection_sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        synth::SynthConfig herd_cfg;
        herd_cfg.n_cases = 21;
        herd_cfg.seed = 6000 + static_cast<std::uint64_t>(s);
        auto cohort = evaluate::build_cohort(evaluate::from_synth(synth::generate(herd_cfg)));
        evaluate::DetectionConfig det;
        det.seed = 6000 + static_cast<std::uint64_t>(s);
        det.jobs = 2;
        det.ga.population = 6;
        det.ga.generations = 1;
        det.grid.n_trees = {50};
        det.grid.max_depth = {std::nullopt};
        det.grid.knn_k = {5};
        det.grid.rf_weight = {0.5};
        detection_sum += evaluate::run_detection(cohort, det).test_accuracy;
    }
    double detection_mean = detection_sum / n_seeds;
    std::printf("       detection 20-seed mean = %.4f\n", detection_mean);
    bool ok = std::abs(detection_mean - 0.5) <= 0.12;

    // Sweep cells, 20-seed aggregate per cell. Sized to the runtime budget:
    // half the planted-signal scale with proportionally smaller cells (test_n
    // leaves a margin so every cell draw stays feasible).
    evaluate::SweepConfig sweep;
    sweep.train_n = 49;
    sweep.test_n = 12;
    std::vector<std::vector<double>> sums(sweep.lags.size(),
                                          std::vector<double>(sweep.windows.size(), 0.0));
    std::vector<std::vector<int>> counts(sweep.lags.size(),
                                         std::vector<int>(sweep.windows.size(), 0));
    for (int s = 0; s < n_seeds; ++s) {
        synth::SynthConfig herd_cfg;
        herd_cfg.n_cases = 45;
        herd_cfg.seed = 7000 + static_cast<std::uint64_t>(s);
        auto cohort = evaluate::build_cohort(evaluate::from_synth(synth::generate(herd_cfg)));
        sweep.seed = 7000 + static_cast<std::uint64_t>(s);
        sweep.jobs = 2;
        auto grid = evaluate::run_sweep(cohort, sweep);
        for (std::size_t li = 0; li < grid.lags.size(); ++li)
            for (std::size_t wi = 0; wi < grid.windows.size(); ++wi)
                if (grid.cells[li][wi].accuracy) {
                    sums[li][wi] += *grid.cells[li][wi].accuracy;
                    ++counts[li][wi];
                }
    }
    bool breached = false;
    for (std::size_t li = 0; li < sums.size(); ++li) {
        std::printf("       lag %d cell means:", sweep.lags[li]);
        for (std::size_t wi = 0; wi < sums[li].size(); ++wi) {
            if (counts[li][wi] != n_seeds) {
                std::printf(" null");
                ok = false;
                continue;
            }
            double mean = sums[li][wi] / n_seeds;
            std::printf(" %.3f", mean);
            if (std::abs(mean - 0.5) > 0.12) {
                ok = false;
                breached = true;
            }
        }
        std::printf("\n");
    }
    if (breached)
        std::printf(
            "       note: breached cells come from the balancing step itself; picking each\n"
            "       cluster's most central row makes negatives systematically more typical\n"
            "       than raw positives, which a classifier can exploit even on null data.\n"
            "       The effect peaks at single-day windows (sum==mean, std==0).\n");
    return ok;
}

bool reported_bound_check() {
    double lb = evaluate::lower_bound_95(0.792, 0.046);
    std::printf("       lower_bound_95(0.792, 0.046) = %.5f\n", lb);
    return lb >= 0.71 && lb <= 0.72;
}

}  // namespace

int main() {
    Harness harness;
    harness.criterion("leakage_audit", leakage_audit);
    harness.criterion("featurization_oracles", featurization_oracles);
    harness.criterion("learner_oracles", learner_oracles);
    harness.criterion("undersample_contract", undersample_contract);
    harness.criterion("search_invariants", search_invariants);
    harness.criterion("planted_signal", planted_signal);
    harness.criterion("null_calibration", null_calibration);
    harness.criterion("reported_bound_check", reported_bound_check);

    if (harness.failures) {
        std::printf("%d criterion(s) failed\n", harness.failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
