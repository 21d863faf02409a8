#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hoofwatch/automl.hpp"
#include "hoofwatch/featurize.hpp"
#include "hoofwatch/herd.hpp"
#include "hoofwatch/synthherd.hpp"

namespace hoofwatch::evaluate {

struct HerdData {
    std::vector<herd::BehaviorDay> behavior;
    std::vector<herd::LesionObservation> lesions;
    std::vector<herd::CowProfile> profiles;
};

HerdData from_synth(synth::SynthHerd data);

// Episodes derived, controls matched, behavior indexed: the shared starting
// point of every experiment.
struct StudyCohort {
    featurize::HerdIndex index;
    herd::EpisodeDerivation derivation;
    herd::MatchResult matching;
    std::vector<herd::Episode> matched;  // enrolled episodes with a control
};

StudyCohort build_cohort(const HerdData& data, const herd::MatchOptions& options = {});

// Hand-chosen refinement ranges around the grammar defaults.
automl::ParamGrid default_grid();

struct DetectionConfig {
    double test_fraction = 0.2;
    int k = 5;
    automl::GrammarBounds bounds;
    automl::GaConfig ga;
    automl::ParamGrid grid = default_grid();
    std::uint64_t seed = 0;
    bool include_day0 = false;
    int jobs = 1;
};

struct DetectionReport {
    automl::PipelineSpec best;
    automl::CvScore cv;
    double test_accuracy = 0.0;
    double lower_bound_95 = 0.0;
    std::uint64_t seed = 0;
    int train_rows = 0;
    int test_rows = 0;
    int train_cows = 0;
    int test_cows = 0;
    std::size_t search_evaluations = 0;

    nlohmann::json to_json() const;
};

// The day-0 study: grouped 80/20 split, GA pipeline search plus grid
// refinement on the training cows, final fit, held-out accuracy and the
// one-sided 95% lower bound.
DetectionReport run_detection(const StudyCohort& cohort, const DetectionConfig& config,
                              automl::LogSink search_log = {},
                              automl::TrainedPipeline* fitted = nullptr);

// One-sided normal approximation: accuracy - 1.645 * std.
double lower_bound_95(double accuracy, double stddev);

struct ImportanceEntry {
    herd::Channel channel;
    double importance = 0.0;
    double mean_delta = 0.0;
    double fold_std = 0.0;
};

// Drop-one-channel ablation under a fixed grouped k-fold: delta = baseline
// CV accuracy minus reduced CV accuracy, clipped at 0 and normalized to sum
// to 1 (uniform if every delta is zero).
std::vector<ImportanceEntry> channel_importance(const automl::PipelineSpec& spec,
                                                const FeatureMatrix& detection_matrix, int k,
                                                std::uint64_t seed, int jobs = 1);

struct SweepConfig {
    std::vector<int> lags = {1, 2, 3, 4};
    std::vector<int> windows = {1, 2, 3, 4, 5};
    int train_n = 98;
    int test_n = 28;
    double test_fraction = 0.2;
    automl::PipelineSpec pipeline = automl::default_pipeline();
    std::vector<featurize::Aggregate> aggregates = {
        featurize::Aggregate::mean, featurize::Aggregate::sum, featurize::Aggregate::std_dev};
    // Negative universe: eligible control-cow reference days, plus case-cow
    // days whose window ends at least `history_gap_days` before day 0 unless
    // controls_only is set.
    bool controls_only = false;
    int history_gap_days = 7;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct SweepCell {
    std::optional<double> accuracy;  // nullopt = null cell
    std::string reason;              // why the cell is null
    int train_rows = 0;
    int test_rows = 0;
};

struct SweepGrid {
    std::vector<int> lags;
    std::vector<int> windows;
    std::vector<std::vector<SweepCell>> cells;  // [lag][window]
    int train_n = 0;
    int test_n = 0;
};

// Lag x window sensitivity: per cell, balanced lag/window features, grouped
// split, seeded down-sampling to exactly (train_n, test_n) rows, one trained
// pipeline, held-out accuracy. Infeasible cells stay in the grid as nulls.
SweepGrid run_sweep(const StudyCohort& cohort, const SweepConfig& config);

// First column = lag, header row = window values, accuracy to 4 decimals,
// empty string for null cells.
void write_sweep_csv(std::ostream& os, const SweepGrid& grid);
void write_importance_csv(std::ostream& os, const std::vector<ImportanceEntry>& entries);

}  // namespace hoofwatch::evaluate
