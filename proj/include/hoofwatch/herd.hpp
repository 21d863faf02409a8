#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoofwatch/dates.hpp"
#include "hoofwatch/matrix.hpp"

namespace hoofwatch::herd {

// The six daily sensor channels, in canonical order.
enum class Channel { non_active, active, highly_active, eating, ruminating, ear_temp };
inline constexpr int kChannelCount = 6;
inline constexpr std::array<const char*, kChannelCount> kChannelNames = {
    "non_active", "active", "highly_active", "eating", "ruminating", "ear_temp"};

enum class ReproStatus { open, pregnant };
enum class LesionStatus { none, active, digressing };
enum class LesionSize { none, small, medium, large };
enum class LactationPeriod { early, mid, late };

const char* to_string(ReproStatus s);
const char* to_string(LesionStatus s);
const char* to_string(LesionSize s);
const char* to_string(LactationPeriod p);

// One cow-day of sensor readings. The first five channels are proportions of
// the 24 h day, ear_temp is in degrees Celsius.
struct BehaviorDay {
    std::string cow_id;
    Date date;
    std::array<double, kChannelCount> channels{};

    double channel(Channel c) const { return channels[static_cast<int>(c)]; }
};

struct CowProfile {
    std::string cow_id;
    int parity = 1;
    ReproStatus repro_status = ReproStatus::open;
    Date calving_date;
};

struct LesionObservation {
    std::string cow_id;
    Date date;
    LesionStatus status = LesionStatus::none;
    LesionSize size = LesionSize::none;

    bool lesion_present() const { return status != LesionStatus::none; }
};

struct EnrollmentChecks {
    bool lookback_sensor_complete = false;
    bool lookback_lesion_free = false;
    bool lesion_persistent = false;

    bool all_passed() const {
        return lookback_sensor_complete && lookback_lesion_free && lesion_persistent;
    }
};

// A labeled case anchored at day 0 (first active-lesion observation) plus,
// once matched, its healthy counterpart.
struct Episode {
    std::string case_cow_id;
    Date day0;
    std::optional<std::string> control_cow_id;
    std::optional<LactationPeriod> lactation_period;
    EnrollmentChecks checks;
};

struct Rejection {
    std::string cow_id;
    std::string reason;
};

struct ValidationLimits {
    double ear_temp_min = -10.0;
    double ear_temp_max = 45.0;
};

inline constexpr const char* kBehaviorHeader =
    "cow_id,date,non_active,active,highly_active,eating,ruminating,ear_temp";
inline constexpr const char* kLesionHeader = "cow_id,date,status,size";
inline constexpr const char* kProfileHeader = "cow_id,parity,repro_status,calving_date";

// Parsers validate every row against the type invariants and return rows in
// (cow_id, date) order. First violation throws Error with the offending line.
std::vector<BehaviorDay> parse_behavior(std::istream& in, const ValidationLimits& limits = {});
std::vector<LesionObservation> parse_lesions(std::istream& in);
std::vector<CowProfile> parse_profiles(std::istream& in);

// Canonical serialization: header + sorted rows + shortest round-trip numbers.
// serialize(parse(x)) == x whenever x is already canonical.
std::string serialize_behavior(const std::vector<BehaviorDay>& rows);
std::string serialize_lesions(const std::vector<LesionObservation>& rows);
std::string serialize_profiles(const std::vector<CowProfile>& rows);

struct EpisodeDerivation {
    std::vector<Episode> enrolled;
    std::vector<Rejection> rejected;
};

// Every cow with an active lesion yields exactly one candidate anchored at its
// earliest active date. Enrollment requires 7 sensor-recorded, lesion-free
// days immediately before day 0 and a lesion observation on day 0 + 1.
// Failed candidates land in `rejected` with a machine-readable reason.
EpisodeDerivation derive_episodes(const std::vector<LesionObservation>& lesions,
                                  const std::vector<BehaviorDay>& behavior);

// early: DIM <= 100, mid: 101..199, late: >= 200 (the boundary day 100 counts as early).
LactationPeriod lactation_period(int days_in_milk);

struct MatchOptions {
    // Candidate behavior coverage required around the case's day 0.
    int coverage_days_before = 7;
    bool require_day0_coverage = true;
};

struct MatchResult {
    std::vector<Episode> episodes;  // lactation filled; control set where found
    std::vector<Rejection> unmatched;
};

// One-to-one greedy matching in ascending day-0 order on the exact triple
// (parity, repro_status, lactation_period). Ties go to the candidate with
// nearest DIM, then lexicographically smallest cow_id. Candidates must be
// lesion-free across all provided observations.
MatchResult match_controls(const std::vector<Episode>& cases,
                           const std::vector<CowProfile>& profiles,
                           const std::vector<BehaviorDay>& behavior,
                           const std::vector<LesionObservation>& lesions,
                           const MatchOptions& options = {});

// Leakage-safe partitions: all rows of a cow stay on one side. The test side
// gets round(test_fraction * n_groups) groups, at least 1, never all.
std::pair<FeatureMatrix, FeatureMatrix> grouped_split(const FeatureMatrix& matrix,
                                                      double test_fraction, std::uint64_t seed);

// Groups are shuffled and dealt into k folds whose sizes differ by at most 1;
// each fold serves as validation exactly once.
std::vector<std::pair<FeatureMatrix, FeatureMatrix>> grouped_kfold(const FeatureMatrix& matrix,
                                                                   int k, std::uint64_t seed);

}  // namespace hoofwatch::herd
