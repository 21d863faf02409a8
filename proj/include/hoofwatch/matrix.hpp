#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hoofwatch/csv.hpp"
#include "hoofwatch/error.hpp"

namespace hoofwatch {

// The universal learner input: named numeric columns, binary labels and the
// cow id of every row. Group ids are what the leakage-safe splits key on.
struct FeatureMatrix {
    std::vector<std::string> feature_names;
    Eigen::MatrixXd values;  // rows() x feature_names.size()
    std::vector<int> labels;
    std::vector<std::string> group_ids;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    void validate() const {
        if (static_cast<Eigen::Index>(feature_names.size()) != values.cols())
            throw Error("matrix_shape", "feature_names length does not match column count");
        if (static_cast<Eigen::Index>(labels.size()) != values.rows() ||
            static_cast<Eigen::Index>(group_ids.size()) != values.rows())
            throw Error("matrix_shape", "labels/group_ids length does not match row count");
        for (int label : labels)
            if (label != 0 && label != 1) throw Error("matrix_labels", "labels must be binary");
        if (!values.allFinite()) throw Error("matrix_nonfinite", "matrix contains non-finite values");
    }

    FeatureMatrix select_rows(std::span<const Eigen::Index> idx) const {
        FeatureMatrix out;
        out.feature_names = feature_names;
        out.values.resize(static_cast<Eigen::Index>(idx.size()), values.cols());
        out.labels.reserve(idx.size());
        out.group_ids.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.values.row(static_cast<Eigen::Index>(i)) = values.row(idx[i]);
            out.labels.push_back(labels[static_cast<std::size_t>(idx[i])]);
            out.group_ids.push_back(group_ids[static_cast<std::size_t>(idx[i])]);
        }
        return out;
    }

    FeatureMatrix select_columns(std::span<const Eigen::Index> idx) const {
        FeatureMatrix out;
        out.labels = labels;
        out.group_ids = group_ids;
        out.values.resize(values.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) {
            out.values.col(static_cast<Eigen::Index>(j)) = values.col(idx[j]);
            out.feature_names.push_back(feature_names[static_cast<std::size_t>(idx[j])]);
        }
        return out;
    }

    void append_rows(const FeatureMatrix& other) {
        if (other.cols() != cols()) throw Error("matrix_shape", "column mismatch in append");
        Eigen::Index r = rows();
        values.conservativeResize(r + other.rows(), Eigen::NoChange);
        values.bottomRows(other.rows()) = other.values;
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
        group_ids.insert(group_ids.end(), other.group_ids.begin(), other.group_ids.end());
    }
};

// CSV export with header row = feature_names; values in canonical shortest
// round-trip form. Also used for the correlation matrix artifact.
inline void write_matrix_csv(std::ostream& os, const std::vector<std::string>& names,
                             const Eigen::MatrixXd& values) {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) os << ',';
        os << names[j];
    }
    os << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) os << ',';
            os << csv::format_double(values(i, j));
        }
        os << '\n';
    }
}

}  // namespace hoofwatch
