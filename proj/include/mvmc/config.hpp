#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvmc/simulator.hpp"

namespace mvmc::cli {

// Flat key-value configuration with [section] headers; keys are addressed as
// "section.key". '#' and ';' start comments. Unknown keys are rejected when
// the scenario is built, so typos fail loudly.
class IniConfig {
public:
    static IniConfig from_file(const std::string& path);
    static IniConfig from_string(const std::string& text);

    // "section.key=value", as given to --set.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    // Sorted "key=value" lines; the config hash is FNV-1a over this.
    std::string canonical() const;
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> values_;
};

// Builds the simulation scenario from a config, rejecting unknown keys in
// the sections it owns. Key list is documented in the README.
sim::ScenarioConfig scenario_from_config(const IniConfig& config);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace mvmc::cli
