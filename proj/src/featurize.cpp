#include "hoofwatch/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hoofwatch/error.hpp"
#include "hoofwatch/learners.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::featurize {

HerdIndex::HerdIndex(const std::vector<herd::BehaviorDay>& behavior) {
    for (const auto& b : behavior) by_cow_[b.cow_id][b.date.serial] = b.channels;
}

const std::array<double, herd::kChannelCount>* HerdIndex::find(const std::string& cow_id,
                                                               Date day) const {
    auto cow = by_cow_.find(cow_id);
    if (cow == by_cow_.end()) return nullptr;
    auto it = cow->second.find(day.serial);
    return it == cow->second.end() ? nullptr : &it->second;
}

bool HerdIndex::has_range(const std::string& cow_id, Date first, Date last) const {
    for (Date d = first; d <= last; d = d + 1)
        if (!find(cow_id, d)) return false;
    return true;
}

std::vector<Date> HerdIndex::days(const std::string& cow_id) const {
    std::vector<Date> out;
    auto cow = by_cow_.find(cow_id);
    if (cow == by_cow_.end()) return out;
    out.reserve(cow->second.size());
    for (const auto& [serial, _] : cow->second) out.push_back(Date{serial});
    return out;
}

std::vector<std::string> detection_feature_names(const DetectionOptions& options) {
    std::vector<std::string> names;
    for (int d = 7; d >= (options.include_day0 ? 0 : 1); --d)
        for (int c = 0; c < herd::kChannelCount; ++c)
            names.push_back((d == 0 ? "d0:" : "d-" + std::to_string(d) + ":") +
                            std::string(herd::kChannelNames[static_cast<std::size_t>(c)]));
    return names;
}

Eigen::RowVectorXd detection_features(const HerdIndex& index, const std::string& cow_id, Date day0,
                                      const DetectionOptions& options) {
    int last_offset = options.include_day0 ? 0 : 1;
    Eigen::RowVectorXd row((7 - last_offset + 1) * herd::kChannelCount);
    Eigen::Index j = 0;
    for (int d = 7; d >= last_offset; --d) {
        const auto* day = index.find(cow_id, day0 - d);
        if (!day)
            throw Error("incomplete_sensor_history",
                        "cow " + cow_id + " missing behavior on " + to_string(day0 - d));
        for (int c = 0; c < herd::kChannelCount; ++c) row(j++) = (*day)[static_cast<std::size_t>(c)];
    }
    return row;
}

FeatureMatrix detection_matrix(const std::vector<herd::Episode>& episodes, const HerdIndex& index,
                               const DetectionOptions& options) {
    FeatureMatrix out;
    out.feature_names = detection_feature_names(options);
    std::vector<Eigen::RowVectorXd> rows;
    for (const auto& e : episodes) {
        if (!e.control_cow_id) continue;
        rows.push_back(detection_features(index, e.case_cow_id, e.day0, options));
        out.labels.push_back(1);
        out.group_ids.push_back(e.case_cow_id);
        rows.push_back(detection_features(index, *e.control_cow_id, e.day0, options));
        out.labels.push_back(0);
        out.group_ids.push_back(*e.control_cow_id);
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(out.feature_names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.values.row(static_cast<Eigen::Index>(i)) = rows[i];
    out.validate();
    return out;
}

const char* to_string(Aggregate a) {
    switch (a) {
        case Aggregate::mean: return "mean";
        case Aggregate::sum: return "sum";
        default: return "std";
    }
}

void LagWindowConfig::validate() const {
    if (lag < 1) throw Error("bad_lag", "lag must be >= 1");
    if (window < 1) throw Error("bad_window", "window must be >= 1");
    if (aggregates.empty()) throw Error("bad_aggregates", "at least one aggregate required");
    std::set<int> seen;
    for (auto a : aggregates)
        if (!seen.insert(static_cast<int>(a)).second)
            throw Error("bad_aggregates", "duplicate aggregate");
}

std::vector<std::string> lagwindow_feature_names(const LagWindowConfig& config) {
    config.validate();
    std::vector<std::string> names;
    for (int c = 0; c < herd::kChannelCount; ++c)
        for (auto a : config.aggregates)
            names.push_back(std::string(herd::kChannelNames[static_cast<std::size_t>(c)]) + ":" +
                            to_string(a));
    return names;
}

Eigen::RowVectorXd lagwindow_features(const HerdIndex& index, const std::string& cow_id,
                                      Date reference_day, const LagWindowConfig& config) {
    config.validate();
    const int w = config.window;
    Eigen::MatrixXd values(w, herd::kChannelCount);
    for (int i = 0; i < w; ++i) {
        Date day = reference_day - (config.lag + w - 1 - i);
        const auto* rec = index.find(cow_id, day);
        if (!rec)
            throw Error("incomplete_window",
                        "cow " + cow_id + " missing behavior on " + to_string(day));
        for (int c = 0; c < herd::kChannelCount; ++c)
            values(i, c) = (*rec)[static_cast<std::size_t>(c)];
    }

    Eigen::RowVectorXd row(herd::kChannelCount * static_cast<Eigen::Index>(config.aggregates.size()));
    Eigen::Index j = 0;
    for (int c = 0; c < herd::kChannelCount; ++c) {
        const auto col = values.col(c);
        double mean = col.mean();
        for (auto a : config.aggregates) {
            switch (a) {
                case Aggregate::mean: row(j++) = mean; break;
                case Aggregate::sum: row(j++) = col.sum(); break;
                case Aggregate::std_dev:
                    row(j++) = std::sqrt((col.array() - mean).square().sum() / w);
                    break;
            }
        }
    }
    return row;
}

MinMaxParams fit_minmax(const Eigen::MatrixXd& train) {
    if (train.rows() == 0) throw Error("empty_matrix", "cannot fit min-max on an empty matrix");
    return {train.colwise().minCoeff(), train.colwise().maxCoeff()};
}

Eigen::MatrixXd apply_minmax(const MinMaxParams& params, const Eigen::MatrixXd& matrix) {
    if (matrix.cols() != params.min.size())
        throw Error("matrix_shape", "min-max params do not match column count");
    Eigen::MatrixXd out(matrix.rows(), matrix.cols());
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        double range = params.max(j) - params.min(j);
        if (range == 0.0)
            out.col(j).setZero();
        else
            out.col(j) = (matrix.col(j).array() - params.min(j)) / range;
    }
    return out;
}

Eigen::RowVectorXd poly2_expand(const Eigen::RowVectorXd& row) {
    const Eigen::Index c = row.size();
    Eigen::RowVectorXd out(c + c * (c + 1) / 2);
    out.head(c) = row;
    Eigen::Index j = c;
    for (Eigen::Index a = 0; a < c; ++a)
        for (Eigen::Index b = a; b < c; ++b) out(j++) = row(a) * row(b);
    return out;
}

Eigen::MatrixXd poly2_expand(const Eigen::MatrixXd& matrix) {
    const Eigen::Index c = matrix.cols();
    Eigen::MatrixXd out(matrix.rows(), c + c * (c + 1) / 2);
    out.leftCols(c) = matrix;
    Eigen::Index j = c;
    for (Eigen::Index a = 0; a < c; ++a)
        for (Eigen::Index b = a; b < c; ++b)
            out.col(j++) = matrix.col(a).cwiseProduct(matrix.col(b));
    return out;
}

std::vector<std::string> poly2_names(const std::vector<std::string>& names) {
    std::vector<std::string> out = names;
    for (std::size_t a = 0; a < names.size(); ++a)
        for (std::size_t b = a; b < names.size(); ++b) out.push_back(names[a] + "*" + names[b]);
    return out;
}

Eigen::MatrixXd pearson_matrix(const Eigen::MatrixXd& matrix) {
    const Eigen::Index r = matrix.rows();
    const Eigen::Index c = matrix.cols();
    if (r < 2) throw Error("insufficient_rows", "pearson correlation needs at least 2 rows");

    Eigen::MatrixXd centered = matrix.rowwise() - matrix.colwise().mean();
    Eigen::VectorXd norm(c);
    for (Eigen::Index j = 0; j < c; ++j) norm(j) = centered.col(j).norm();

    Eigen::MatrixXd corr(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
        corr(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < c; ++j) {
            double value = 0.0;
            if (norm(i) > 0.0 && norm(j) > 0.0)
                value = std::clamp(centered.col(i).dot(centered.col(j)) / (norm(i) * norm(j)),
                                   -1.0, 1.0);
            corr(i, j) = value;
            corr(j, i) = value;
        }
    }
    return corr;
}

std::vector<Eigen::Index> kmeans_undersample(const Eigen::MatrixXd& negatives, int n_positives,
                                             std::uint64_t seed) {
    const Eigen::Index n = negatives.rows();
    if (n_positives < 1) throw Error("bad_k", "n_positives must be >= 1");
    if (n < n_positives)
        throw Error("insufficient_negatives", "n_positives exceeds number of negative rows");

    auto result = learners::kmeans(negatives, n_positives, seed);

    std::vector<Eigen::Index> picked;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int cluster = 0; cluster < n_positives; ++cluster) {
        Eigen::Index best = -1;
        double best_dist = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (result.assignments[static_cast<std::size_t>(i)] != cluster ||
                used[static_cast<std::size_t>(i)])
                continue;
            double dist = (negatives.row(i) - result.centroids.row(cluster)).squaredNorm();
            if (best < 0 || dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        if (best < 0) {
            // Degenerate duplicates can leave a final cluster empty; fall back
            // to the nearest unused row so the output size stays exact.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                double dist = (negatives.row(i) - result.centroids.row(cluster)).squaredNorm();
                if (best < 0 || dist < best_dist) {
                    best = i;
                    best_dist = dist;
                }
            }
        }
        picked.push_back(best);
        used[static_cast<std::size_t>(best)] = true;
    }

    std::set<Eigen::Index> distinct(picked.begin(), picked.end());
    if (picked.size() != static_cast<std::size_t>(n_positives) || distinct.size() != picked.size())
        throw Error("undersample_contract", "under-sampling produced a malformed subset");
    return picked;
}

FeatureMatrix undersample_negatives(const FeatureMatrix& negatives, int n_positives,
                                    std::uint64_t seed) {
    auto idx = kmeans_undersample(negatives.values, n_positives, seed);
    return negatives.select_rows(idx);
}

}  // namespace hoofwatch::featurize
