#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hoofwatch/herd.hpp"
#include "hoofwatch/matrix.hpp"

namespace hoofwatch::featurize {

using herd::Channel;

// Per-cow daily lookup over validated behavior rows.
class HerdIndex {
public:
    HerdIndex() = default;
    explicit HerdIndex(const std::vector<herd::BehaviorDay>& behavior);

    const std::array<double, herd::kChannelCount>* find(const std::string& cow_id, Date day) const;
    // True when every day in [first, last] has a record for the cow.
    bool has_range(const std::string& cow_id, Date first, Date last) const;
    // Dates with records for one cow, ascending; empty if unknown cow.
    std::vector<Date> days(const std::string& cow_id) const;

private:
    std::map<std::string, std::map<std::int32_t, std::array<double, herd::kChannelCount>>> by_cow_;
};

struct DetectionOptions {
    bool include_day0 = false;  // sensitivity flag; the default horizon is -7..-1
};

// Feature row for one cow anchored at `day0`: days -7..-1 (day-major), the six
// channels in canonical order within each day. 42 values, or 48 with day 0.
std::vector<std::string> detection_feature_names(const DetectionOptions& options = {});
Eigen::RowVectorXd detection_features(const HerdIndex& index, const std::string& cow_id, Date day0,
                                      const DetectionOptions& options = {});

// One positive row per case at its day 0 and one negative row per matched
// control anchored at the same calendar day.
FeatureMatrix detection_matrix(const std::vector<herd::Episode>& episodes, const HerdIndex& index,
                               const DetectionOptions& options = {});

enum class Aggregate { mean, sum, std_dev };
const char* to_string(Aggregate a);

struct LagWindowConfig {
    int lag = 1;
    int window = 1;
    std::vector<Aggregate> aggregates = {Aggregate::mean, Aggregate::sum, Aggregate::std_dev};

    void validate() const;
};

// Rolling aggregates over the w days [reference - (l + w - 1), reference - l],
// channel-major then aggregate. std is the population standard deviation.
std::vector<std::string> lagwindow_feature_names(const LagWindowConfig& config);
Eigen::RowVectorXd lagwindow_features(const HerdIndex& index, const std::string& cow_id,
                                      Date reference_day, const LagWindowConfig& config);

struct MinMaxParams {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
};

// Fit on training rows only; apply never clips, and a degenerate column
// (max == min) maps to 0 everywhere.
MinMaxParams fit_minmax(const Eigen::MatrixXd& train);
Eigen::MatrixXd apply_minmax(const MinMaxParams& params, const Eigen::MatrixXd& matrix);

// Second-order polynomial extension: originals followed by x_i * x_j for
// i <= j in lexicographic (i, j) order. No bias column.
Eigen::RowVectorXd poly2_expand(const Eigen::RowVectorXd& row);
Eigen::MatrixXd poly2_expand(const Eigen::MatrixXd& matrix);
std::vector<std::string> poly2_names(const std::vector<std::string>& names);

// Pearson correlation between columns; zero-variance columns correlate 0 with
// everything and 1 with themselves.
Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& matrix);

// K-means under-sampling: k = n_positives clusters over the negative rows,
// keeping the real row nearest each final centroid. Returned indices are
// distinct, one per cluster.
std::vector<Eigen::Index> kmeans_undersample(const Eigen::MatrixXd& negatives, int n_positives,
                                             std::uint64_t seed);
FeatureMatrix undersample_negatives(const FeatureMatrix& negatives, int n_positives,
                                    std::uint64_t seed);

}  // namespace hoofwatch::featurize
