#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hoofwatch/herd.hpp"

namespace hoofwatch::synth {

struct ChannelModel {
    double mean_lo = 0.0;  // per-cow baseline drawn uniformly from [lo, hi]
    double mean_hi = 0.0;
    double noise_sd = 0.0;  // i.i.d. daily gaussian noise
};

enum class RampShape { linear, step };

// Herd-scale generator with a controllable planted disease signature. Case
// channel shifts ramp in over `lead_days` before day 0 and stay at full
// strength from day 0 on; lead_days = 0 plants the shift on day 0 only.
struct SynthConfig {
    int n_cases = 21;
    int n_extra_healthy = 0;
    int trial_days = 60;
    std::array<ChannelModel, herd::kChannelCount> channels = {{
        {0.45, 0.60, 0.04},   // non_active
        {0.15, 0.30, 0.03},   // active
        {0.02, 0.10, 0.015},  // highly_active
        {0.15, 0.30, 0.03},   // eating
        {0.25, 0.40, 0.03},   // ruminating
        {37.5, 39.0, 0.35},   // ear_temp (degrees C)
    }};
    int lead_days = 4;
    std::array<double, herd::kChannelCount> shifts{};  // added at full ramp strength
    RampShape ramp = RampShape::linear;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthHerd {
    std::vector<herd::BehaviorDay> behavior;
    std::vector<herd::LesionObservation> lesions;
    std::vector<herd::CowProfile> profiles;
};

// Deterministic by seed. Outputs pass the herd parsers with zero rejections:
// every case enrolls (7 clean prior sensor days, lesion on day 0 and day 0+1)
// and gets a control with the identical matching triple.
SynthHerd generate(const SynthConfig& config);

struct SynthFiles {
    std::string behavior_csv;
    std::string lesions_csv;
    std::string profiles_csv;
};

SynthFiles generate_csv(const SynthConfig& config);

}  // namespace hoofwatch::synth
