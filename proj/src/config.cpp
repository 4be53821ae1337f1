#include "mvmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace mvmc::cli {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' || line[i] == ';') return line.substr(0, i);
    }
    return line;
}

}  // namespace

IniConfig IniConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

IniConfig IniConfig::from_string(const std::string& text) {
    IniConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section header at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("empty section name at line " + std::to_string(line_no));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
        if (section.empty())
            throw ConfigError("key outside any [section] at line " + std::to_string(line_no));
        config.values_[section + "." + key] = value;
    }
    return config;
}

void IniConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw ConfigError("override key must be section.key: " + assignment);
    values_[key] = trim(assignment.substr(eq + 1));
}

bool IniConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string IniConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double IniConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double value = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("");
        return value;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + it->second);
    }
}

long IniConfig::get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long value = std::stol(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("");
        return value;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + it->second);
    }
}

bool IniConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("bad boolean for " + key + ": " + it->second);
}

std::vector<double> IniConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string token;
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("bad number list for " + key + ": " + it->second);
        }
    }
    if (out.empty()) throw ConfigError("empty number list for " + key);
    return out;
}

std::string IniConfig::canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::uint64_t IniConfig::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

sim::ScenarioConfig scenario_from_config(const IniConfig& config) {
    static const std::set<std::string> known = {
        "model.views", "model.dibr_range", "model.channels", "model.rates_mbps",
        "model.video_rate_bps", "model.frame_interval_ms",
        "loss.kind", "loss.min", "loss.max", "loss.base_per_rate", "loss.reference_m",
        "loss.exponent",
        "population.target", "population.arrival_prob", "population.departure_prob",
        "population.view_change_prob", "population.preference", "population.threshold_min",
        "population.threshold_max", "population.max_protection_views",
        "population.channels_per_client", "population.rates_per_client",
        "population.cell_radius_m",
        "run.frames", "run.refresh_interval_frames", "run.miss_limit",
        "run.baseline_repeat_cap", "run.seed",
    };
    for (const auto& [key, value] : config.values()) {
        const auto dot = key.find('.');
        const std::string section = key.substr(0, dot);
        if (section == "analyze" || section == "validate") continue;  // other commands
        if (!known.count(key)) throw ConfigError("unknown config key: " + key);
    }

    sim::ScenarioConfig s;
    s.views = static_cast<int>(config.get_long("model.views", s.views));
    s.dibr_range = static_cast<int>(config.get_long("model.dibr_range", s.dibr_range));
    s.channels = static_cast<int>(config.get_long("model.channels", s.channels));
    s.rates_mbps = config.get_doubles("model.rates_mbps", s.rates_mbps);
    s.video_rate_bps = config.get_double("model.video_rate_bps", s.video_rate_bps);
    s.frame_interval_s = config.get_double("model.frame_interval_ms", s.frame_interval_s * 1e3) / 1e3;

    const std::string loss_kind = config.get_string("loss.kind", "client-table");
    if (loss_kind == "client-table") {
        s.loss_kind = sim::LossKind::client_table;
    } else if (loss_kind == "distance-rate") {
        s.loss_kind = sim::LossKind::distance;
    } else {
        throw ConfigError("loss.kind must be client-table or distance-rate");
    }
    s.loss_min = config.get_double("loss.min", s.loss_min);
    s.loss_max = config.get_double("loss.max", s.loss_max);
    s.loss_base_per_rate = config.get_doubles("loss.base_per_rate", s.loss_base_per_rate);
    s.loss_reference_m = config.get_double("loss.reference_m", s.loss_reference_m);
    s.loss_exponent = config.get_double("loss.exponent", s.loss_exponent);

    s.population_target = static_cast<int>(config.get_long("population.target", s.population_target));
    s.arrival_prob = config.get_double("population.arrival_prob", s.arrival_prob);
    s.departure_prob = config.get_double("population.departure_prob", s.departure_prob);
    s.view_change_prob = config.get_double("population.view_change_prob", s.view_change_prob);
    const std::string pref = config.get_string("population.preference", "uniform");
    if (pref == "uniform") {
        s.preference = sim::Preference::uniform;
    } else if (pref == "zipf") {
        s.preference = sim::Preference::zipf;
    } else if (pref == "normal") {
        s.preference = sim::Preference::normal;
    } else {
        throw ConfigError("population.preference must be uniform, zipf, or normal");
    }
    s.threshold_min = config.get_double("population.threshold_min", s.threshold_min);
    s.threshold_max = config.get_double("population.threshold_max", s.threshold_max);
    s.max_protection_views =
        static_cast<int>(config.get_long("population.max_protection_views", s.max_protection_views));
    s.channels_per_client =
        static_cast<int>(config.get_long("population.channels_per_client", s.channels_per_client));
    s.rates_per_client =
        static_cast<int>(config.get_long("population.rates_per_client", s.rates_per_client));
    s.cell_radius_m = config.get_double("population.cell_radius_m", s.cell_radius_m);

    s.frames = config.get_long("run.frames", s.frames);
    s.refresh_interval_frames =
        config.get_double("run.refresh_interval_frames", s.refresh_interval_frames);
    s.miss_limit = static_cast<int>(config.get_long("run.miss_limit", s.miss_limit));
    s.baseline_repeat_cap =
        static_cast<int>(config.get_long("run.baseline_repeat_cap", s.baseline_repeat_cap));
    s.seed = static_cast<std::uint64_t>(config.get_long("run.seed", static_cast<long>(s.seed)));

    sim::check_scenario(s);
    return s;
}

}  // namespace mvmc::cli
