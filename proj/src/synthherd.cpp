#include "hoofwatch/synthherd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hoofwatch/error.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::synth {

namespace {

const Date kTrialStart = make_date(2023, 3, 1);  // trial day 1

std::string cow_name(char prefix, int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%03d", prefix, i);
    return buf;
}

double ramp_factor(int days_before_day0, int lead_days, RampShape shape) {
    if (days_before_day0 <= 0) return 1.0;  // day 0 and after
    if (days_before_day0 > lead_days) return 0.0;
    if (shape == RampShape::step) return 1.0;
    return 1.0 - static_cast<double>(days_before_day0) / static_cast<double>(lead_days);
}

struct DimRange {
    int lo, hi;
};

DimRange dim_range(herd::LactationPeriod p) {
    switch (p) {
        case herd::LactationPeriod::early: return {0, 100};
        case herd::LactationPeriod::mid: return {101, 199};
        default: return {200, 320};
    }
}

}  // namespace

void SynthConfig::validate() const {
    if (n_cases < 0 || n_extra_healthy < 0) throw Error("infeasible_config", "negative cow counts");
    if (trial_days < 1) throw Error("infeasible_config", "trial_days must be >= 1");
    if (lead_days < 0) throw Error("infeasible_config", "lead_days must be >= 0");
    for (const auto& ch : channels) {
        if (!(ch.mean_lo <= ch.mean_hi)) throw Error("infeasible_config", "baseline range inverted");
        if (!(ch.noise_sd >= 0.0)) throw Error("infeasible_config", "negative noise sd");
    }
    for (double s : shifts)
        if (!std::isfinite(s)) throw Error("infeasible_config", "non-finite shift");
    if (n_cases > 0) {
        // Day 0 needs 8 prior trial days (enrollment lookback plus the deepest
        // sweep window) and one following day for the persistence rule.
        int lo = 9;
        int hi = trial_days - 1;
        if (lo > hi) throw Error("infeasible_config", "trial too short to place day 0");
    }
}

SynthHerd generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    SynthHerd out;

    struct CowPlan {
        std::string id;
        bool is_case = false;
        int day0_trial_day = 0;  // cases only
        int parity = 1;
        herd::ReproStatus repro = herd::ReproStatus::open;
        Date calving;
        std::array<double, herd::kChannelCount> baseline{};
    };
    std::vector<CowPlan> plan;

    auto draw_baseline = [&](CowPlan& cow) {
        for (int c = 0; c < herd::kChannelCount; ++c) {
            const auto& ch = config.channels[static_cast<std::size_t>(c)];
            cow.baseline[static_cast<std::size_t>(c)] = rng.uniform(ch.mean_lo, ch.mean_hi);
        }
    };

    for (int i = 0; i < config.n_cases; ++i) {
        CowPlan cow;
        cow.id = cow_name('c', i + 1);
        cow.is_case = true;
        cow.day0_trial_day = rng.uniform_int(9, config.trial_days - 1);
        cow.parity = rng.uniform_int(1, 5);
        cow.repro = rng.uniform_index(2) ? herd::ReproStatus::pregnant : herd::ReproStatus::open;
        auto period = static_cast<herd::LactationPeriod>(rng.uniform_index(3));
        auto range = dim_range(period);
        int dim = rng.uniform_int(range.lo, range.hi);
        Date day0 = kTrialStart + (cow.day0_trial_day - 1);
        cow.calving = day0 - dim;
        draw_baseline(cow);
        plan.push_back(cow);

        // Matched healthy counterpart. Sharing the case's calving date keeps
        // the triple identical at any anchor date, so greedy matching always
        // completes even when several cases share a triple.
        CowPlan control;
        control.id = cow_name('m', i + 1);
        control.parity = cow.parity;
        control.repro = cow.repro;
        control.calving = cow.calving;
        draw_baseline(control);
        plan.push_back(control);
    }

    for (int i = 0; i < config.n_extra_healthy; ++i) {
        CowPlan cow;
        cow.id = cow_name('h', i + 1);
        cow.parity = rng.uniform_int(1, 5);
        cow.repro = rng.uniform_index(2) ? herd::ReproStatus::pregnant : herd::ReproStatus::open;
        cow.calving = kTrialStart + config.trial_days / 2 - rng.uniform_int(0, 320);
        draw_baseline(cow);
        plan.push_back(cow);
    }

    for (const auto& cow : plan) {
        for (int day = 1; day <= config.trial_days; ++day) {
            herd::BehaviorDay b;
            b.cow_id = cow.id;
            b.date = kTrialStart + (day - 1);
            for (int c = 0; c < herd::kChannelCount; ++c) {
                const auto& ch = config.channels[static_cast<std::size_t>(c)];
                double v = cow.baseline[static_cast<std::size_t>(c)] + rng.normal(0.0, ch.noise_sd);
                if (cow.is_case) {
                    double factor = ramp_factor(cow.day0_trial_day - day, config.lead_days, config.ramp);
                    v += factor * config.shifts[static_cast<std::size_t>(c)];
                }
                if (c != static_cast<int>(herd::Channel::ear_temp)) v = std::clamp(v, 0.0, 1.0);
                b.channels[static_cast<std::size_t>(c)] = v;
            }
            out.behavior.push_back(std::move(b));
        }

        for (int day = 1; day <= config.trial_days; ++day) {
            herd::LesionObservation l;
            l.cow_id = cow.id;
            l.date = kTrialStart + (day - 1);
            l.status = herd::LesionStatus::none;
            l.size = herd::LesionSize::none;
            if (cow.is_case) {
                int rel = day - cow.day0_trial_day;
                if (rel == 0 || rel == 1) {
                    l.status = herd::LesionStatus::active;
                    l.size = rel == 0 ? herd::LesionSize::small : herd::LesionSize::medium;
                } else if (rel >= 2 && rel <= 4) {
                    l.status = herd::LesionStatus::digressing;
                    l.size = herd::LesionSize::small;
                }
            }
            out.lesions.push_back(std::move(l));
        }

        out.profiles.push_back({cow.id, cow.parity, cow.repro, cow.calving});
    }

    auto by_cow_day = [](const auto& a, const auto& b) {
        return std::tie(a.cow_id, a.date.serial) < std::tie(b.cow_id, b.date.serial);
    };
    std::sort(out.behavior.begin(), out.behavior.end(), by_cow_day);
    std::sort(out.lesions.begin(), out.lesions.end(), by_cow_day);
    std::sort(out.profiles.begin(), out.profiles.end(),
              [](const auto& a, const auto& b) { return a.cow_id < b.cow_id; });
    return out;
}

SynthFiles generate_csv(const SynthConfig& config) {
    SynthHerd data = generate(config);
    return {herd::serialize_behavior(data.behavior), herd::serialize_lesions(data.lesions),
            herd::serialize_profiles(data.profiles)};
}

}  // namespace hoofwatch::synth
