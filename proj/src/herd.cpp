#include "hoofwatch/herd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "hoofwatch/csv.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::herd {

const char* to_string(ReproStatus s) { return s == ReproStatus::open ? "open" : "pregnant"; }

const char* to_string(LesionStatus s) {
    switch (s) {
        case LesionStatus::none: return "none";
        case LesionStatus::active: return "active";
        default: return "digressing";
    }
}

const char* to_string(LesionSize s) {
    switch (s) {
        case LesionSize::none: return "none";
        case LesionSize::small: return "small";
        case LesionSize::medium: return "medium";
        default: return "large";
    }
}

const char* to_string(LactationPeriod p) {
    switch (p) {
        case LactationPeriod::early: return "early";
        case LactationPeriod::mid: return "mid";
        default: return "late";
    }
}

namespace {

std::string read_header_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("unknown_header", "empty input, header expected", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void require_header(const std::string& got, const char* expected) {
    if (got != expected)
        throw Error("unknown_header", "unexpected header '" + got + "', expected '" + expected + "'", 1);
}

ReproStatus parse_repro(std::string_view s, int line) {
    if (s == "open") return ReproStatus::open;
    if (s == "pregnant") return ReproStatus::pregnant;
    throw Error("malformed_row", "unknown repro_status '" + std::string(s) + "'", line);
}

LesionStatus parse_status(std::string_view s, int line) {
    if (s == "none") return LesionStatus::none;
    if (s == "active") return LesionStatus::active;
    if (s == "digressing") return LesionStatus::digressing;
    throw Error("malformed_row", "unknown lesion status '" + std::string(s) + "'", line);
}

LesionSize parse_size(std::string_view s, int line) {
    if (s == "none") return LesionSize::none;
    if (s == "small") return LesionSize::small;
    if (s == "medium") return LesionSize::medium;
    if (s == "large") return LesionSize::large;
    throw Error("malformed_row", "unknown lesion size '" + std::string(s) + "'", line);
}

}  // namespace

std::vector<BehaviorDay> parse_behavior(std::istream& in, const ValidationLimits& limits) {
    require_header(read_header_line(in), kBehaviorHeader);
    std::vector<BehaviorDay> rows;
    std::set<std::pair<std::string, std::int32_t>> seen;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split_line(line);
        if (fields.size() != 8)
            throw Error("malformed_row", "expected 8 fields, got " + std::to_string(fields.size()),
                        line_no);
        BehaviorDay row;
        row.cow_id = std::string(fields[0]);
        if (row.cow_id.empty()) throw Error("malformed_row", "empty cow_id", line_no);
        row.date = parse_date(fields[1], line_no);
        for (int c = 0; c < kChannelCount; ++c)
            row.channels[static_cast<std::size_t>(c)] = csv::parse_double(fields[2 + c], line_no);
        for (int c = 0; c < kChannelCount - 1; ++c) {
            double v = row.channels[static_cast<std::size_t>(c)];
            if (!(v >= 0.0 && v <= 1.0))
                throw Error("proportion_out_of_range",
                            std::string("proportion out of range, line ") + std::to_string(line_no) +
                                " (" + kChannelNames[static_cast<std::size_t>(c)] + ")",
                            line_no);
        }
        double temp = row.channels[kChannelCount - 1];
        if (!(temp >= limits.ear_temp_min && temp <= limits.ear_temp_max))
            throw Error("ear_temp_out_of_range",
                        "ear_temp " + csv::format_double(temp) + " outside plausibility bounds",
                        line_no);
        if (!seen.insert({row.cow_id, row.date.serial}).second)
            throw Error("duplicate_cow_day",
                        "duplicate cow-day (" + row.cow_id + ", " + to_string(row.date) + ")",
                        line_no);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const BehaviorDay& a, const BehaviorDay& b) {
        return std::tie(a.cow_id, a.date.serial) < std::tie(b.cow_id, b.date.serial);
    });
    return rows;
}

std::vector<LesionObservation> parse_lesions(std::istream& in) {
    require_header(read_header_line(in), kLesionHeader);
    std::vector<LesionObservation> rows;
    std::set<std::pair<std::string, std::int32_t>> seen;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split_line(line);
        if (fields.size() != 4)
            throw Error("malformed_row", "expected 4 fields, got " + std::to_string(fields.size()),
                        line_no);
        LesionObservation row;
        row.cow_id = std::string(fields[0]);
        if (row.cow_id.empty()) throw Error("malformed_row", "empty cow_id", line_no);
        row.date = parse_date(fields[1], line_no);
        row.status = parse_status(fields[2], line_no);
        row.size = parse_size(fields[3], line_no);
        if ((row.status == LesionStatus::none) != (row.size == LesionSize::none))
            throw Error("status_size_mismatch", "status is none iff size is none", line_no);
        if (!seen.insert({row.cow_id, row.date.serial}).second)
            throw Error("duplicate_cow_day",
                        "duplicate lesion observation (" + row.cow_id + ", " + to_string(row.date) + ")",
                        line_no);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const LesionObservation& a, const LesionObservation& b) {
        return std::tie(a.cow_id, a.date.serial) < std::tie(b.cow_id, b.date.serial);
    });
    return rows;
}

std::vector<CowProfile> parse_profiles(std::istream& in) {
    require_header(read_header_line(in), kProfileHeader);
    std::vector<CowProfile> rows;
    std::set<std::string> seen;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split_line(line);
        if (fields.size() != 4)
            throw Error("malformed_row", "expected 4 fields, got " + std::to_string(fields.size()),
                        line_no);
        CowProfile row;
        row.cow_id = std::string(fields[0]);
        if (row.cow_id.empty()) throw Error("malformed_row", "empty cow_id", line_no);
        row.parity = static_cast<int>(csv::parse_int(fields[1], line_no));
        if (row.parity < 1) throw Error("parity_out_of_range", "parity must be >= 1", line_no);
        row.repro_status = parse_repro(fields[2], line_no);
        row.calving_date = parse_date(fields[3], line_no);
        if (!seen.insert(row.cow_id).second)
            throw Error("duplicate_cow_day", "duplicate profile for cow " + row.cow_id, line_no);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const CowProfile& a, const CowProfile& b) { return a.cow_id < b.cow_id; });
    return rows;
}

std::string serialize_behavior(const std::vector<BehaviorDay>& rows) {
    std::ostringstream os;
    os << kBehaviorHeader << '\n';
    for (const auto& r : rows) {
        os << r.cow_id << ',' << to_string(r.date);
        for (double v : r.channels) os << ',' << csv::format_double(v);
        os << '\n';
    }
    return os.str();
}

std::string serialize_lesions(const std::vector<LesionObservation>& rows) {
    std::ostringstream os;
    os << kLesionHeader << '\n';
    for (const auto& r : rows)
        os << r.cow_id << ',' << to_string(r.date) << ',' << to_string(r.status) << ','
           << to_string(r.size) << '\n';
    return os.str();
}

std::string serialize_profiles(const std::vector<CowProfile>& rows) {
    std::ostringstream os;
    os << kProfileHeader << '\n';
    for (const auto& r : rows)
        os << r.cow_id << ',' << r.parity << ',' << to_string(r.repro_status) << ','
           << to_string(r.calving_date) << '\n';
    return os.str();
}

EpisodeDerivation derive_episodes(const std::vector<LesionObservation>& lesions,
                                  const std::vector<BehaviorDay>& behavior) {
    std::map<std::string, std::set<std::int32_t>> sensor_days;
    for (const auto& b : behavior) sensor_days[b.cow_id].insert(b.date.serial);

    std::map<std::string, std::map<std::int32_t, const LesionObservation*>> by_cow;
    for (const auto& l : lesions) by_cow[l.cow_id][l.date.serial] = &l;

    EpisodeDerivation out;
    for (const auto& [cow_id, obs] : by_cow) {
        std::optional<Date> day0;
        for (const auto& [serial, o] : obs) {
            if (o->status == LesionStatus::active) {
                day0 = Date{serial};
                break;
            }
        }
        if (!day0) continue;  // never an active lesion: not a case candidate

        EnrollmentChecks checks;
        checks.lookback_sensor_complete = true;
        checks.lookback_lesion_free = true;
        const auto& days = sensor_days[cow_id];
        for (int d = 1; d <= 7; ++d) {
            Date day = *day0 - d;
            if (!days.count(day.serial)) checks.lookback_sensor_complete = false;
            auto it = obs.find(day.serial);
            if (it != obs.end() && it->second->lesion_present()) checks.lookback_lesion_free = false;
        }
        auto next = obs.find((*day0 + 1).serial);
        checks.lesion_persistent = next != obs.end() && next->second->lesion_present();

        if (checks.all_passed()) {
            Episode e;
            e.case_cow_id = cow_id;
            e.day0 = *day0;
            e.checks = checks;
            out.enrolled.push_back(std::move(e));
        } else if (!checks.lookback_sensor_complete) {
            out.rejected.push_back({cow_id, "incomplete_sensor_history"});
        } else if (!checks.lookback_lesion_free) {
            out.rejected.push_back({cow_id, "lesion_in_lookback"});
        } else {
            out.rejected.push_back({cow_id, "lesion_not_persistent"});
        }
    }
    std::sort(out.enrolled.begin(), out.enrolled.end(), [](const Episode& a, const Episode& b) {
        return std::tie(a.day0.serial, a.case_cow_id) < std::tie(b.day0.serial, b.case_cow_id);
    });
    return out;
}

LactationPeriod lactation_period(int days_in_milk) {
    if (days_in_milk < 0) throw Error("negative_dim", "days in milk must be non-negative");
    if (days_in_milk <= 100) return LactationPeriod::early;
    if (days_in_milk <= 199) return LactationPeriod::mid;
    return LactationPeriod::late;
}

MatchResult match_controls(const std::vector<Episode>& cases,
                           const std::vector<CowProfile>& profiles,
                           const std::vector<BehaviorDay>& behavior,
                           const std::vector<LesionObservation>& lesions,
                           const MatchOptions& options) {
    std::map<std::string, const CowProfile*> profile_by_cow;
    for (const auto& p : profiles) profile_by_cow[p.cow_id] = &p;

    std::set<std::string> lesion_cows;  // cows with any lesion actually present
    for (const auto& l : lesions)
        if (l.lesion_present()) lesion_cows.insert(l.cow_id);

    std::map<std::string, std::set<std::int32_t>> sensor_days;
    for (const auto& b : behavior) sensor_days[b.cow_id].insert(b.date.serial);

    auto covered = [&](const std::string& cow, Date day0) {
        auto it = sensor_days.find(cow);
        if (it == sensor_days.end()) return false;
        int last = options.require_day0_coverage ? 0 : 1;
        for (int d = options.coverage_days_before; d >= last; --d)
            if (!it->second.count((day0 - d).serial)) return false;
        return true;
    };

    MatchResult result;
    result.episodes = cases;
    std::sort(result.episodes.begin(), result.episodes.end(),
              [](const Episode& a, const Episode& b) {
                  return std::tie(a.day0.serial, a.case_cow_id) <
                         std::tie(b.day0.serial, b.case_cow_id);
              });

    std::set<std::string> used;
    for (auto& episode : result.episodes) {
        auto case_profile = profile_by_cow.find(episode.case_cow_id);
        if (case_profile == profile_by_cow.end()) {
            result.unmatched.push_back({episode.case_cow_id, "missing_profile"});
            continue;
        }
        int case_dim = episode.day0 - case_profile->second->calving_date;
        if (case_dim < 0) {
            result.unmatched.push_back({episode.case_cow_id, "calving_after_day0"});
            continue;
        }
        episode.lactation_period = lactation_period(case_dim);

        const CowProfile* best = nullptr;
        int best_dim_gap = 0;
        for (const auto& p : profiles) {
            if (p.cow_id == episode.case_cow_id || used.count(p.cow_id)) continue;
            if (lesion_cows.count(p.cow_id)) continue;
            if (p.parity != case_profile->second->parity) continue;
            if (p.repro_status != case_profile->second->repro_status) continue;
            int dim = episode.day0 - p.calving_date;
            if (dim < 0 || lactation_period(dim) != *episode.lactation_period) continue;
            if (!covered(p.cow_id, episode.day0)) continue;
            int gap = std::abs(dim - case_dim);
            if (!best || gap < best_dim_gap || (gap == best_dim_gap && p.cow_id < best->cow_id)) {
                best = &p;
                best_dim_gap = gap;
            }
        }
        if (best) {
            episode.control_cow_id = best->cow_id;
            used.insert(best->cow_id);
        } else {
            result.unmatched.push_back({episode.case_cow_id, "no_matching_control"});
        }
    }
    return result;
}

namespace {

std::vector<std::string> distinct_groups(const FeatureMatrix& matrix) {
    std::set<std::string> set(matrix.group_ids.begin(), matrix.group_ids.end());
    return {set.begin(), set.end()};
}

FeatureMatrix rows_for_groups(const FeatureMatrix& matrix, const std::set<std::string>& groups) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
        if (groups.count(matrix.group_ids[static_cast<std::size_t>(i)])) idx.push_back(i);
    return matrix.select_rows(idx);
}

}  // namespace

std::pair<FeatureMatrix, FeatureMatrix> grouped_split(const FeatureMatrix& matrix,
                                                      double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("bad_fraction", "test_fraction must be in (0, 1)");
    auto groups = distinct_groups(matrix);
    if (groups.size() < 2) throw Error("insufficient_groups", "insufficient groups");

    Rng rng(seed);
    rng.shuffle(groups);
    auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(groups.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, groups.size() - 1);

    std::set<std::string> test_groups(groups.begin(), groups.begin() + static_cast<long>(n_test));
    std::set<std::string> train_groups(groups.begin() + static_cast<long>(n_test), groups.end());
    return {rows_for_groups(matrix, train_groups), rows_for_groups(matrix, test_groups)};
}

std::vector<std::pair<FeatureMatrix, FeatureMatrix>> grouped_kfold(const FeatureMatrix& matrix,
                                                                   int k, std::uint64_t seed) {
    if (k < 2) throw Error("bad_k", "k must be >= 2");
    auto groups = distinct_groups(matrix);
    if (groups.size() < static_cast<std::size_t>(k))
        throw Error("insufficient_groups", "k exceeds number of groups");

    Rng rng(seed);
    rng.shuffle(groups);

    std::vector<std::pair<FeatureMatrix, FeatureMatrix>> folds;
    std::size_t base = groups.size() / static_cast<std::size_t>(k);
    std::size_t remainder = groups.size() % static_cast<std::size_t>(k);
    std::size_t start = 0;
    for (int f = 0; f < k; ++f) {
        std::size_t size = base + (static_cast<std::size_t>(f) < remainder ? 1 : 0);
        std::set<std::string> validation(groups.begin() + static_cast<long>(start),
                                         groups.begin() + static_cast<long>(start + size));
        std::set<std::string> train;
        for (const auto& g : groups)
            if (!validation.count(g)) train.insert(g);
        folds.emplace_back(rows_for_groups(matrix, train), rows_for_groups(matrix, validation));
        start += size;
    }
    return folds;
}

}  // namespace hoofwatch::herd
