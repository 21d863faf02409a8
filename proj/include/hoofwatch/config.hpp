#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoofwatch/evaluate.hpp"
#include "hoofwatch/synthherd.hpp"

namespace hoofwatch::config {

// Flat `section.key = value` configuration. Every key has a default; unknown
// keys are rejected so typos fail loudly.
class RunConfig {
public:
    RunConfig();  // defaults only

    void load(std::istream& in);
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    // Integer list where "none" maps to nullopt.
    std::vector<std::optional<int>> get_depth_list(const std::string& key) const;

    // FNV-1a over the sorted canonical key=value listing, as 16 hex digits.
    std::string digest() const;
    std::string render() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

synth::SynthConfig make_synth_config(const RunConfig& cfg);
herd::MatchOptions make_match_options(const RunConfig& cfg);
automl::GrammarBounds make_bounds(const RunConfig& cfg);
automl::GaConfig make_ga_config(const RunConfig& cfg);
automl::ParamGrid make_grid(const RunConfig& cfg);
automl::PipelineSpec make_pipeline(const RunConfig& cfg);
evaluate::DetectionConfig make_detection_config(const RunConfig& cfg);
evaluate::SweepConfig make_sweep_config(const RunConfig& cfg);

}  // namespace hoofwatch::config
