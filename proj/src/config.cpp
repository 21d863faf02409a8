#include "hoofwatch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "hoofwatch/csv.hpp"
#include "hoofwatch/error.hpp"
#include "hoofwatch/rng.hpp"

namespace hoofwatch::config {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) {
            auto item = trim(std::string_view(value).substr(start));
            if (!item.empty()) out.push_back(item);
            break;
        }
        auto item = trim(std::string_view(value).substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

std::map<std::string, std::string> default_entries() {
    std::map<std::string, std::string> d;
    d["paths.behavior"] = "behavior.csv";
    d["paths.lesions"] = "lesions.csv";
    d["paths.profiles"] = "profiles.csv";
    d["seed"] = "0";
    d["jobs"] = "1";

    d["synth.n_cases"] = "21";
    d["synth.n_extra_healthy"] = "0";
    d["synth.trial_days"] = "60";
    d["synth.lead_days"] = "4";
    d["synth.ramp"] = "linear";
    const char* baseline[herd::kChannelCount][3] = {
        {"0.45", "0.6", "0.04"}, {"0.15", "0.3", "0.03"},  {"0.02", "0.1", "0.015"},
        {"0.15", "0.3", "0.03"}, {"0.25", "0.4", "0.03"}, {"37.5", "39", "0.35"},
    };
    for (int c = 0; c < herd::kChannelCount; ++c) {
        std::string ch = herd::kChannelNames[static_cast<std::size_t>(c)];
        d["synth.shift." + ch] = "0";
        d["synth.baseline." + ch + ".mean_lo"] = baseline[c][0];
        d["synth.baseline." + ch + ".mean_hi"] = baseline[c][1];
        d["synth.baseline." + ch + ".noise_sd"] = baseline[c][2];
    }

    d["match.coverage_days_before"] = "7";
    d["match.require_day0"] = "true";

    d["detect.test_fraction"] = "0.2";
    d["detect.k"] = "5";
    d["detect.include_day0"] = "false";

    d["bounds.scalers"] = "none,minmax";
    d["bounds.expanders"] = "none,poly2";
    d["bounds.classifiers"] = "rf,knn,ensemble";
    d["bounds.n_trees_min"] = "10";
    d["bounds.n_trees_max"] = "300";
    d["bounds.allow_no_depth"] = "true";
    d["bounds.depth_min"] = "2";
    d["bounds.depth_max"] = "16";
    d["bounds.k_min"] = "1";
    d["bounds.k_max"] = "25";
    d["bounds.weight_min"] = "0";
    d["bounds.weight_max"] = "1";

    d["ga.population"] = "24";
    d["ga.generations"] = "10";
    d["ga.mutation_rate"] = "0.2";
    d["ga.crossover_rate"] = "0.5";
    d["ga.elitism"] = "2";

    d["grid.n_trees"] = "50,100,200";
    d["grid.max_depth"] = "none,8,16";
    d["grid.knn_k"] = "3,5,7,9";
    d["grid.rf_weight"] = "0.3,0.5,0.7";

    d["pipeline.scaler"] = "minmax";
    d["pipeline.expander"] = "poly2";
    d["pipeline.classifier"] = "ensemble";
    d["pipeline.rf_n_trees"] = "100";
    d["pipeline.rf_max_depth"] = "none";
    d["pipeline.rf_min_samples_split"] = "2";
    d["pipeline.knn_k"] = "5";
    d["pipeline.rf_weight"] = "0.5";

    d["importance.k"] = "5";

    d["sweep.lags"] = "1,2,3,4";
    d["sweep.windows"] = "1,2,3,4,5";
    d["sweep.train_n"] = "98";
    d["sweep.test_n"] = "28";
    d["sweep.test_fraction"] = "0.2";
    d["sweep.aggregates"] = "mean,sum,std";
    d["sweep.controls_only"] = "false";
    d["sweep.history_gap_days"] = "7";
    return d;
}

}  // namespace

RunConfig::RunConfig() : values_(default_entries()) {}

void RunConfig::load(std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("bad_config", "expected 'key = value'", line_no);
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (!values_.count(key)) throw Error("unknown_config_key", "unknown config key '" + key + "'", line_no);
        values_[key] = value;
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw Error("unknown_config_key", "unknown config key '" + key + "'");
    values_[key] = value;
}

std::string RunConfig::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error("unknown_config_key", "unknown config key '" + key + "'");
    return it->second;
}

bool RunConfig::get_bool(const std::string& key) const {
    auto v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("bad_config", "key '" + key + "' expects true/false, got '" + v + "'");
}

namespace {

// Type errors in config values are usage errors, reported under one code.
template <typename Fn>
auto typed(const std::string& key, Fn&& parse) {
    try {
        return parse();
    } catch (const Error&) {
        throw Error("bad_config", "config key '" + key + "' has a malformed value");
    }
}

}  // namespace

int RunConfig::get_int(const std::string& key) const {
    return typed(key, [&] { return static_cast<int>(csv::parse_int(get_string(key), 0)); });
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    auto v = get_string(key);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw Error("bad_config", "key '" + key + "' expects an unsigned integer");
    return value;
}

double RunConfig::get_double(const std::string& key) const {
    return typed(key, [&] { return csv::parse_double(get_string(key), 0); });
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    return typed(key, [&] {
        std::vector<int> out;
        for (const auto& item : split_list(get_string(key)))
            out.push_back(static_cast<int>(csv::parse_int(item, 0)));
        return out;
    });
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    return typed(key, [&] {
        std::vector<double> out;
        for (const auto& item : split_list(get_string(key)))
            out.push_back(csv::parse_double(item, 0));
        return out;
    });
}

std::vector<std::optional<int>> RunConfig::get_depth_list(const std::string& key) const {
    return typed(key, [&] {
        std::vector<std::optional<int>> out;
        for (const auto& item : split_list(get_string(key))) {
            if (item == "none")
                out.push_back(std::nullopt);
            else
                out.push_back(static_cast<int>(csv::parse_int(item, 0)));
        }
        return out;
    });
}

std::string RunConfig::render() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

std::string RunConfig::digest() const {
    std::uint64_t h = fnv1a64(render());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

synth::SynthConfig make_synth_config(const RunConfig& cfg) {
    synth::SynthConfig s;
    s.n_cases = cfg.get_int("synth.n_cases");
    s.n_extra_healthy = cfg.get_int("synth.n_extra_healthy");
    s.trial_days = cfg.get_int("synth.trial_days");
    s.lead_days = cfg.get_int("synth.lead_days");
    auto ramp = cfg.get_string("synth.ramp");
    if (ramp == "linear")
        s.ramp = synth::RampShape::linear;
    else if (ramp == "step")
        s.ramp = synth::RampShape::step;
    else
        throw Error("bad_config", "synth.ramp expects linear or step");
    for (int c = 0; c < herd::kChannelCount; ++c) {
        std::string ch = herd::kChannelNames[static_cast<std::size_t>(c)];
        s.shifts[static_cast<std::size_t>(c)] = cfg.get_double("synth.shift." + ch);
        auto& model = s.channels[static_cast<std::size_t>(c)];
        model.mean_lo = cfg.get_double("synth.baseline." + ch + ".mean_lo");
        model.mean_hi = cfg.get_double("synth.baseline." + ch + ".mean_hi");
        model.noise_sd = cfg.get_double("synth.baseline." + ch + ".noise_sd");
    }
    s.seed = cfg.get_u64("seed");
    return s;
}

herd::MatchOptions make_match_options(const RunConfig& cfg) {
    herd::MatchOptions m;
    m.coverage_days_before = cfg.get_int("match.coverage_days_before");
    m.require_day0_coverage = cfg.get_bool("match.require_day0");
    return m;
}

automl::GrammarBounds make_bounds(const RunConfig& cfg) {
    automl::GrammarBounds b;
    b.scalers.clear();
    for (const auto& s : split_list(cfg.get_string("bounds.scalers"))) {
        if (s == "none")
            b.scalers.push_back(automl::Scaler::none);
        else if (s == "minmax")
            b.scalers.push_back(automl::Scaler::minmax);
        else
            throw Error("bad_config", "bounds.scalers expects none, minmax");
    }
    b.expanders.clear();
    for (const auto& s : split_list(cfg.get_string("bounds.expanders"))) {
        if (s == "none")
            b.expanders.push_back(automl::Expander::none);
        else if (s == "poly2")
            b.expanders.push_back(automl::Expander::poly2);
        else
            throw Error("bad_config", "bounds.expanders expects none, poly2");
    }
    b.classifiers.clear();
    for (const auto& s : split_list(cfg.get_string("bounds.classifiers"))) {
        if (s == "rf")
            b.classifiers.push_back(automl::ClassifierKind::rf);
        else if (s == "knn")
            b.classifiers.push_back(automl::ClassifierKind::knn);
        else if (s == "ensemble")
            b.classifiers.push_back(automl::ClassifierKind::ensemble);
        else
            throw Error("bad_config", "bounds.classifiers expects rf, knn, ensemble");
    }
    if (b.scalers.empty() || b.expanders.empty() || b.classifiers.empty())
        throw Error("bad_config", "grammar stage lists must be non-empty");
    b.n_trees_min = cfg.get_int("bounds.n_trees_min");
    b.n_trees_max = cfg.get_int("bounds.n_trees_max");
    b.allow_no_depth = cfg.get_bool("bounds.allow_no_depth");
    b.depth_min = cfg.get_int("bounds.depth_min");
    b.depth_max = cfg.get_int("bounds.depth_max");
    b.k_min = cfg.get_int("bounds.k_min");
    b.k_max = cfg.get_int("bounds.k_max");
    b.weight_min = cfg.get_double("bounds.weight_min");
    b.weight_max = cfg.get_double("bounds.weight_max");
    return b;
}

automl::GaConfig make_ga_config(const RunConfig& cfg) {
    automl::GaConfig g;
    g.population = cfg.get_int("ga.population");
    g.generations = cfg.get_int("ga.generations");
    g.mutation_rate = cfg.get_double("ga.mutation_rate");
    g.crossover_rate = cfg.get_double("ga.crossover_rate");
    g.elitism = cfg.get_int("ga.elitism");
    g.seed = cfg.get_u64("seed");
    return g;
}

automl::ParamGrid make_grid(const RunConfig& cfg) {
    automl::ParamGrid g;
    g.n_trees = cfg.get_int_list("grid.n_trees");
    g.max_depth = cfg.get_depth_list("grid.max_depth");
    g.knn_k = cfg.get_int_list("grid.knn_k");
    g.rf_weight = cfg.get_double_list("grid.rf_weight");
    return g;
}

automl::PipelineSpec make_pipeline(const RunConfig& cfg) {
    automl::PipelineSpec p;
    auto scaler = cfg.get_string("pipeline.scaler");
    if (scaler == "none")
        p.scaler = automl::Scaler::none;
    else if (scaler == "minmax")
        p.scaler = automl::Scaler::minmax;
    else
        throw Error("bad_config", "pipeline.scaler expects none or minmax");
    auto expander = cfg.get_string("pipeline.expander");
    if (expander == "none")
        p.expander = automl::Expander::none;
    else if (expander == "poly2")
        p.expander = automl::Expander::poly2;
    else
        throw Error("bad_config", "pipeline.expander expects none or poly2");
    auto clf = cfg.get_string("pipeline.classifier");
    if (clf == "rf")
        p.classifier = automl::ClassifierKind::rf;
    else if (clf == "knn")
        p.classifier = automl::ClassifierKind::knn;
    else if (clf == "ensemble")
        p.classifier = automl::ClassifierKind::ensemble;
    else
        throw Error("bad_config", "pipeline.classifier expects rf, knn or ensemble");
    p.rf_n_trees = cfg.get_int("pipeline.rf_n_trees");
    auto depth = cfg.get_string("pipeline.rf_max_depth");
    if (depth != "none") p.rf_max_depth = cfg.get_int("pipeline.rf_max_depth");
    p.rf_min_samples_split = cfg.get_int("pipeline.rf_min_samples_split");
    p.knn_k = cfg.get_int("pipeline.knn_k");
    p.rf_weight = cfg.get_double("pipeline.rf_weight");
    return p;
}

evaluate::DetectionConfig make_detection_config(const RunConfig& cfg) {
    evaluate::DetectionConfig d;
    d.test_fraction = cfg.get_double("detect.test_fraction");
    d.k = cfg.get_int("detect.k");
    d.include_day0 = cfg.get_bool("detect.include_day0");
    d.bounds = make_bounds(cfg);
    d.ga = make_ga_config(cfg);
    d.grid = make_grid(cfg);
    d.seed = cfg.get_u64("seed");
    d.jobs = cfg.get_int("jobs");
    return d;
}

evaluate::SweepConfig make_sweep_config(const RunConfig& cfg) {
    evaluate::SweepConfig s;
    s.lags = cfg.get_int_list("sweep.lags");
    s.windows = cfg.get_int_list("sweep.windows");
    s.train_n = cfg.get_int("sweep.train_n");
    s.test_n = cfg.get_int("sweep.test_n");
    s.test_fraction = cfg.get_double("sweep.test_fraction");
    s.pipeline = make_pipeline(cfg);
    s.aggregates.clear();
    for (const auto& item : split_list(cfg.get_string("sweep.aggregates"))) {
        if (item == "mean")
            s.aggregates.push_back(featurize::Aggregate::mean);
        else if (item == "sum")
            s.aggregates.push_back(featurize::Aggregate::sum);
        else if (item == "std")
            s.aggregates.push_back(featurize::Aggregate::std_dev);
        else
            throw Error("bad_config", "sweep.aggregates expects mean, sum, std");
    }
    s.controls_only = cfg.get_bool("sweep.controls_only");
    s.history_gap_days = cfg.get_int("sweep.history_gap_days");
    s.seed = cfg.get_u64("seed");
    s.jobs = cfg.get_int("jobs");
    return s;
}

}  // namespace hoofwatch::config
