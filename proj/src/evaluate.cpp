#include "hoofwatch/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

#include "hoofwatch/error.hpp"
#include "hoofwatch/parallel.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::evaluate {

using automl::PipelineSpec;

HerdData from_synth(synth::SynthHerd data) {
    return {std::move(data.behavior), std::move(data.lesions), std::move(data.profiles)};
}

StudyCohort build_cohort(const HerdData& data, const herd::MatchOptions& options) {
    StudyCohort cohort;
    cohort.index = featurize::HerdIndex(data.behavior);
    cohort.derivation = herd::derive_episodes(data.lesions, data.behavior);
    cohort.matching = herd::match_controls(cohort.derivation.enrolled, data.profiles,
                                           data.behavior, data.lesions, options);
    for (const auto& e : cohort.matching.episodes)
        if (e.control_cow_id) cohort.matched.push_back(e);
    return cohort;
}

automl::ParamGrid default_grid() {
    automl::ParamGrid grid;
    grid.n_trees = {50, 100, 200};
    grid.max_depth = {std::nullopt, 8, 16};
    grid.knn_k = {3, 5, 7, 9};
    grid.rf_weight = {0.3, 0.5, 0.7};
    return grid;
}

double lower_bound_95(double accuracy, double stddev) {
    if (stddev < 0.0) throw Error("bad_std", "standard deviation must be non-negative");
    return accuracy - 1.645 * stddev;
}

nlohmann::json DetectionReport::to_json() const {
    return {{"schema_version", 1},
            {"best_pipeline", automl::spec_to_json(best)},
            {"cv_mean", cv.mean},
            {"cv_std", cv.stddev},
            {"cv_fold_accuracies", cv.per_fold},
            {"test_accuracy", test_accuracy},
            {"lower_bound_95", lower_bound_95},
            {"seed", seed},
            {"train_rows", train_rows},
            {"test_rows", test_rows},
            {"train_cows", train_cows},
            {"test_cows", test_cows},
            {"search_evaluations", search_evaluations}};
}

namespace {

int count_cows(const FeatureMatrix& m) {
    return static_cast<int>(std::set<std::string>(m.group_ids.begin(), m.group_ids.end()).size());
}

// Audit on every emitted experiment: no cow id on both sides of a partition.
void require_disjoint_groups(const FeatureMatrix& train, const FeatureMatrix& test) {
    std::set<std::string> tr(train.group_ids.begin(), train.group_ids.end());
    for (const auto& g : test.group_ids)
        if (tr.count(g)) throw Error("leakage", "cow id " + g + " crosses the train/test split");
}

}  // namespace

DetectionReport run_detection(const StudyCohort& cohort, const DetectionConfig& config,
                              automl::LogSink search_log, automl::TrainedPipeline* fitted) {
    if (cohort.matched.size() < 4)
        throw Error("insufficient_episodes", "need at least 4 matched episodes, have " +
                                                 std::to_string(cohort.matched.size()));

    featurize::DetectionOptions det_options{config.include_day0};
    FeatureMatrix matrix = featurize::detection_matrix(cohort.matched, cohort.index, det_options);

    auto [train, test] = herd::grouped_split(matrix, config.test_fraction, derive_seed(config.seed, 1));
    require_disjoint_groups(train, test);

    automl::PipelineEvaluator evaluator(train, config.k, derive_seed(config.seed, 2), config.jobs,
                                        std::move(search_log));
    automl::GaConfig ga = config.ga;
    ga.seed = derive_seed(config.seed, 3);
    auto searched = automl::ga_search(evaluator, config.bounds, ga);
    auto refined = automl::grid_refine(evaluator, searched.best, config.grid);

    auto model = automl::fit_pipeline(refined.best, train, derive_seed(config.seed, 4));

    DetectionReport report;
    report.best = refined.best;
    report.cv = refined.score;
    report.test_accuracy = automl::accuracy(model, test);
    report.lower_bound_95 = lower_bound_95(report.test_accuracy, report.cv.stddev);
    report.seed = config.seed;
    report.train_rows = static_cast<int>(train.rows());
    report.test_rows = static_cast<int>(test.rows());
    report.train_cows = count_cows(train);
    report.test_cows = count_cows(test);
    report.search_evaluations = evaluator.evaluations();
    if (fitted) *fitted = std::move(model);
    return report;
}

namespace {

// Detection names look like "d-3:active", lag/window names like "active:sum".
// A feature belongs to a channel if either ':'-separated part names it.
std::optional<herd::Channel> feature_channel(const std::string& name) {
    auto colon = name.find(':');
    std::string left = colon == std::string::npos ? name : name.substr(0, colon);
    std::string right = colon == std::string::npos ? std::string() : name.substr(colon + 1);
    for (int c = 0; c < herd::kChannelCount; ++c) {
        const char* ch = herd::kChannelNames[static_cast<std::size_t>(c)];
        if (left == ch || right == ch) return static_cast<herd::Channel>(c);
    }
    return std::nullopt;
}

std::vector<double> fold_accuracies(const PipelineSpec& spec,
                                    const std::vector<std::pair<FeatureMatrix, FeatureMatrix>>& folds,
                                    std::uint64_t base_seed, int jobs) {
    std::vector<double> acc(folds.size());
    parallel_for(folds.size(), jobs, [&](std::size_t f) {
        auto model = automl::fit_pipeline(spec, folds[f].first, derive_seed(base_seed, f));
        acc[f] = automl::accuracy(model, folds[f].second);
    });
    return acc;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<ImportanceEntry> channel_importance(const PipelineSpec& spec,
                                                const FeatureMatrix& detection_matrix, int k,
                                                std::uint64_t seed, int jobs) {
    std::uint64_t fold_seed = derive_seed(seed, 0);
    auto folds = herd::grouped_kfold(detection_matrix, k, fold_seed);
    auto baseline = fold_accuracies(spec, folds, derive_seed(seed, 1), jobs);

    std::vector<ImportanceEntry> entries;
    for (int c = 0; c < herd::kChannelCount; ++c) {
        auto channel = static_cast<herd::Channel>(c);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < detection_matrix.cols(); ++j)
            if (feature_channel(detection_matrix.feature_names[static_cast<std::size_t>(j)]) != channel)
                keep.push_back(j);
        FeatureMatrix reduced = detection_matrix.select_columns(keep);
        // Same seed, same group ids: the fold partition is identical, so the
        // comparison is paired fold for fold.
        auto reduced_folds = herd::grouped_kfold(reduced, k, fold_seed);
        auto reduced_acc =
            fold_accuracies(spec, reduced_folds, derive_seed(seed, 2 + static_cast<std::uint64_t>(c)), jobs);

        std::vector<double> deltas(baseline.size());
        for (std::size_t f = 0; f < baseline.size(); ++f) deltas[f] = baseline[f] - reduced_acc[f];

        ImportanceEntry entry;
        entry.channel = channel;
        entry.mean_delta = mean_of(deltas);
        double var = 0.0;
        for (double d : deltas) var += (d - entry.mean_delta) * (d - entry.mean_delta);
        entry.fold_std = std::sqrt(var / static_cast<double>(deltas.size()));
        entries.push_back(entry);
    }

    double total = 0.0;
    for (const auto& e : entries) total += std::max(e.mean_delta, 0.0);
    for (auto& e : entries)
        e.importance = total > 0.0 ? std::max(e.mean_delta, 0.0) / total
                                   : 1.0 / static_cast<double>(herd::kChannelCount);
    return entries;
}

namespace {

struct CellUniverse {
    FeatureMatrix positives;
    FeatureMatrix negatives;
};

CellUniverse build_cell_universe(const StudyCohort& cohort, const SweepConfig& config,
                                 const featurize::LagWindowConfig& lw) {
    CellUniverse universe;
    auto names = featurize::lagwindow_feature_names(lw);
    universe.positives.feature_names = names;
    universe.negatives.feature_names = names;

    std::vector<Eigen::RowVectorXd> pos_rows, neg_rows;

    auto window_covered = [&](const std::string& cow, Date reference) {
        return cohort.index.has_range(cow, reference - (lw.lag + lw.window - 1), reference - lw.lag);
    };

    for (const auto& e : cohort.matched) {
        if (window_covered(e.case_cow_id, e.day0)) {
            pos_rows.push_back(featurize::lagwindow_features(cohort.index, e.case_cow_id, e.day0, lw));
            universe.positives.labels.push_back(1);
            universe.positives.group_ids.push_back(e.case_cow_id);
        }

        const std::string& control = *e.control_cow_id;
        for (Date r : cohort.index.days(control)) {
            if (!window_covered(control, r)) continue;
            neg_rows.push_back(featurize::lagwindow_features(cohort.index, control, r, lw));
            universe.negatives.labels.push_back(0);
            universe.negatives.group_ids.push_back(control);
        }

        if (!config.controls_only) {
            // Case-cow history: windows ending well before clinical signs.
            for (Date r : cohort.index.days(e.case_cow_id)) {
                if (e.day0 - (r - lw.lag) < config.history_gap_days) continue;
                if (!window_covered(e.case_cow_id, r)) continue;
                neg_rows.push_back(featurize::lagwindow_features(cohort.index, e.case_cow_id, r, lw));
                universe.negatives.labels.push_back(0);
                universe.negatives.group_ids.push_back(e.case_cow_id);
            }
        }
    }

    auto fill = [](FeatureMatrix& m, const std::vector<Eigen::RowVectorXd>& rows) {
        m.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(m.feature_names.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            m.values.row(static_cast<Eigen::Index>(i)) = rows[i];
    };
    fill(universe.positives, pos_rows);
    fill(universe.negatives, neg_rows);
    return universe;
}

FeatureMatrix downsample_rows(const FeatureMatrix& m, int n, std::uint64_t seed) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    return m.select_rows(idx);
}

SweepCell run_cell(const StudyCohort& cohort, const SweepConfig& config, int lag, int window) {
    std::uint64_t cell_seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(lag)),
                                          static_cast<std::uint64_t>(window));
    SweepCell cell;

    featurize::LagWindowConfig lw{lag, window, config.aggregates};
    auto universe = build_cell_universe(cohort, config, lw);

    int n_pos = static_cast<int>(universe.positives.rows());
    if (n_pos < 1 || universe.negatives.rows() < n_pos) {
        cell.reason = "insufficient_samples";
        return cell;
    }

    FeatureMatrix balanced =
        featurize::undersample_negatives(universe.negatives, n_pos, derive_seed(cell_seed, 1));
    FeatureMatrix combined = universe.positives;
    combined.append_rows(balanced);
    combined.validate();

    FeatureMatrix train, test;
    try {
        std::tie(train, test) = herd::grouped_split(combined, config.test_fraction,
                                                    derive_seed(cell_seed, 2));
    } catch (const Error&) {
        cell.reason = "insufficient_samples";
        return cell;
    }
    require_disjoint_groups(train, test);

    if (train.rows() < config.train_n || test.rows() < config.test_n) {
        cell.reason = "insufficient_samples";
        return cell;
    }
    train = downsample_rows(train, config.train_n, derive_seed(cell_seed, 3));
    test = downsample_rows(test, config.test_n, derive_seed(cell_seed, 4));

    auto model = automl::fit_pipeline(config.pipeline, train, derive_seed(cell_seed, 5));
    cell.accuracy = automl::accuracy(model, test);
    cell.train_rows = static_cast<int>(train.rows());
    cell.test_rows = static_cast<int>(test.rows());
    return cell;
}

}  // namespace

SweepGrid run_sweep(const StudyCohort& cohort, const SweepConfig& config) {
    if (config.lags.empty() || config.windows.empty())
        throw Error("bad_sweep", "lag and window axes must be non-empty");

    SweepGrid grid;
    grid.lags = config.lags;
    grid.windows = config.windows;
    grid.train_n = config.train_n;
    grid.test_n = config.test_n;
    grid.cells.assign(config.lags.size(), std::vector<SweepCell>(config.windows.size()));

    std::size_t total = config.lags.size() * config.windows.size();
    parallel_for(total, config.jobs, [&](std::size_t flat) {
        std::size_t li = flat / config.windows.size();
        std::size_t wi = flat % config.windows.size();
        grid.cells[li][wi] = run_cell(cohort, config, config.lags[li], config.windows[wi]);
    });
    return grid;
}

void write_sweep_csv(std::ostream& os, const SweepGrid& grid) {
    os << "lag";
    for (int w : grid.windows) os << ',' << w;
    os << '\n';
    for (std::size_t li = 0; li < grid.lags.size(); ++li) {
        os << grid.lags[li];
        for (std::size_t wi = 0; wi < grid.windows.size(); ++wi) {
            os << ',';
            const auto& cell = grid.cells[li][wi];
            if (cell.accuracy) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%.4f", *cell.accuracy);
                os << buf;
            }
        }
        os << '\n';
    }
}

void write_importance_csv(std::ostream& os, const std::vector<ImportanceEntry>& entries) {
    os << "channel,importance,fold_std\n";
    for (const auto& e : entries)
        os << herd::kChannelNames[static_cast<int>(e.channel)] << ','
           << csv::format_double(e.importance) << ',' << csv::format_double(e.fold_std) << '\n';
}

}  // namespace hoofwatch::evaluate
