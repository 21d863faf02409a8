#pragma once

// Brute-force reference implementations, independent of the library code
// paths they check. Everything here recomputes from first principles.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracles {

struct LagWindowOracle {
    double mean = 0.0;
    double sum = 0.0;
    double std_dev = 0.0;
};

// Explicit slice of the daily series (day -> value), then plain loops.
inline LagWindowOracle lagwindow(const std::vector<double>& series_by_day, int reference_day,
                                 int lag, int window) {
    LagWindowOracle out;
    std::vector<double> slice;
    for (int day = reference_day - (lag + window - 1); day <= reference_day - lag; ++day)
        slice.push_back(series_by_day[static_cast<std::size_t>(day)]);
    for (double v : slice) out.sum += v;
    out.mean = out.sum / static_cast<double>(slice.size());
    double ss = 0.0;
    for (double v : slice) ss += (v - out.mean) * (v - out.mean);
    out.std_dev = std::sqrt(ss / static_cast<double>(slice.size()));
    return out;
}

// Direct covariance / sigma quotient, one pair at a time.
inline Eigen::MatrixXd pearson(const Eigen::MatrixXd& m) {
    const auto r = m.rows();
    const auto c = m.cols();
    Eigen::MatrixXd out(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            if (i == j) {
                out(i, j) = 1.0;
                continue;
            }
            double mi = 0.0, mj = 0.0;
            for (Eigen::Index t = 0; t < r; ++t) {
                mi += m(t, i);
                mj += m(t, j);
            }
            mi /= static_cast<double>(r);
            mj /= static_cast<double>(r);
            double cov = 0.0, vi = 0.0, vj = 0.0;
            for (Eigen::Index t = 0; t < r; ++t) {
                cov += (m(t, i) - mi) * (m(t, j) - mj);
                vi += (m(t, i) - mi) * (m(t, i) - mi);
                vj += (m(t, j) - mj) * (m(t, j) - mj);
            }
            out(i, j) = (vi > 0.0 && vj > 0.0) ? cov / std::sqrt(vi * vj) : 0.0;
        }
    }
    return out;
}

struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exhaustive scan over every feature and every midpoint threshold; ties keep
// the lowest feature index, then the lowest threshold.
inline BestSplit cart_best_split(const Eigen::MatrixXd& x, const std::vector<int>& y) {
    const auto n = x.rows();
    long n1 = 0;
    for (int label : y) n1 += label;
    long n0 = n - n1;
    auto gini = [](long a, long b) {
        double t = static_cast<double>(a + b);
        double fa = static_cast<double>(a) / t;
        double fb = static_cast<double>(b) / t;
        return 1.0 - fa * fa - fb * fb;
    };
    double parent = gini(n0, n1);

    BestSplit best;
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
        std::vector<double> values;
        for (Eigen::Index i = 0; i < n; ++i) values.push_back(x(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
            long l0 = 0, l1 = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (x(i, f) <= threshold) {
                    l0 += y[static_cast<std::size_t>(i)] == 0;
                    l1 += y[static_cast<std::size_t>(i)] == 1;
                }
            }
            long nl = l0 + l1;
            long nr = n - nl;
            if (nl == 0 || nr == 0) continue;
            double weighted = (static_cast<double>(nl) / static_cast<double>(n)) * gini(l0, l1) +
                              (static_cast<double>(nr) / static_cast<double>(n)) *
                                  gini(n0 - l0, n1 - l1);
            double gain = parent - weighted;
            if (gain > best.gain) best = {static_cast<int>(f), threshold, gain};
        }
    }
    return best;
}

// Optimal 2-partition inertia by enumerating all 2^(n-1) - 1 splits.
inline double kmeans2_optimum(const Eigen::MatrixXd& points) {
    const auto n = points.rows();
    double best = std::numeric_limits<double>::infinity();
    for (unsigned long mask = 1; mask < (1UL << (n - 1)); ++mask) {
        Eigen::RowVectorXd c0 = Eigen::RowVectorXd::Zero(points.cols());
        Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(points.cols());
        long n0 = 0, n1 = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            bool side = i == 0 ? false : (mask >> (i - 1)) & 1UL;
            if (side) {
                c1 += points.row(i);
                ++n1;
            } else {
                c0 += points.row(i);
                ++n0;
            }
        }
        if (n1 == 0) continue;
        c0 /= static_cast<double>(n0);
        c1 /= static_cast<double>(n1);
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            bool side = i == 0 ? false : (mask >> (i - 1)) & 1UL;
            inertia += (points.row(i) - (side ? c1 : c0)).squaredNorm();
        }
        best = std::min(best, inertia);
    }
    return best;
}

// k nearest by full sort on (distance, index); returns the class-1 fraction.
inline double knn_proba(const Eigen::MatrixXd& train, const std::vector<int>& labels,
                        const Eigen::RowVectorXd& query, int k) {
    std::vector<std::pair<double, Eigen::Index>> order;
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        order.emplace_back((train.row(i) - query).norm(), i);
    std::sort(order.begin(), order.end());
    long n1 = 0;
    for (int i = 0; i < k; ++i) n1 += labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)];
    return static_cast<double>(n1) / static_cast<double>(k);
}

}  // namespace oracles
