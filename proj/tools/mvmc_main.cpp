#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvmc/analysis.hpp"
#include "mvmc/config.hpp"
#include "mvmc/csv.hpp"
#include "mvmc/report.hpp"
#include "mvmc/simulator.hpp"
#include "mvmc/validation.hpp"

namespace fs = std::filesystem;
using namespace mvmc;

namespace {

cli::IniConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    cli::IniConfig config = cli::IniConfig::from_file(path);
    for (const std::string& assignment : overrides) config.apply_override(assignment);
    return config;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list, std::uint64_t fallback) {
    if (list.empty()) return {fallback};
    std::vector<std::uint64_t> seeds;
    std::string token;
    std::istringstream in(list);
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        seeds.push_back(std::stoull(token));
    }
    if (seeds.empty()) throw ConfigError("no seeds given");
    return seeds;
}

int run_analyze(const cli::IniConfig& config, const fs::path& out_dir) {
    const sim::ScenarioConfig scenario = cli::scenario_from_config(config);
    const RateSet rates(scenario.rates_mbps);
    const double loss = config.get_double("analyze.loss", 0.3);
    const auto p_grid = config.get_doubles("analyze.p_grid", {0.1, 0.2, 0.3, 0.4, 0.5});
    const auto r_grid = config.get_doubles("analyze.r_grid", {1, 2, 3});
    const auto rtilde_grid = config.get_doubles("analyze.rtilde_grid", {1});

    // Failure probability per desired view for a plan carrying every view
    // once, spread round-robin over the channels at the top rate.
    Client client;
    client.id = 1;
    for (int c = 0; c < scenario.channels; ++c) client.channels.push_back(c);
    for (int r = 0; r < rates.size(); ++r) client.rates.push_back(r);
    client.desired_views = {1};
    LossModel model = LossModel::table();
    for (ChannelId c : client.channels) {
        for (RateId r : client.rates) model.set_loss(client.id, c, r, loss);
    }
    TransmissionPlan plan;
    const RateId top_rate = rates.size() - 1;
    for (ViewId v = 1; v <= scenario.views; ++v) {
        plan.add(v, (v - 1) % scenario.channels, top_rate, 1);
    }

    {
        auto out = open_output(out_dir, "analysis_failure.csv");
        cli::CsvWriter csv(out);
        csv.comment("config_hash=" + std::to_string(config.hash()) + " seed=" +
                    std::to_string(scenario.seed));
        csv.row({"view", "loss_probability", "failure_probability"});
        for (ViewId v = 1; v <= scenario.views; ++v) {
            const double view_loss = view_loss_probability(client, v, plan, model);
            const double failure = view_failure_probability(client, v, plan, model,
                                                            scenario.views,
                                                            scenario.dibr_range);
            csv.row({std::to_string(v), cli::csv_number(view_loss),
                     cli::csv_number(failure)});
        }
    }
    {
        auto out = open_output(out_dir, "analysis_alpha.csv");
        cli::CsvWriter csv(out);
        csv.comment("config_hash=" + std::to_string(config.hash()) + " seed=" +
                    std::to_string(scenario.seed));
        csv.row({"p", "R", "spacing", "alpha", "alpha_no_dibr"});
        for (double p : p_grid) {
            for (double r_value : r_grid) {
                const int range = static_cast<int>(r_value);
                for (double rt_value : rtilde_grid) {
                    const int spacing = static_cast<int>(rt_value);
                    if (spacing < 1 || spacing > range) continue;
                    const double alpha = asymptotic_alpha_spaced(p, range, spacing);
                    csv.row({cli::csv_number(p), std::to_string(range),
                             std::to_string(spacing), cli::csv_number(alpha),
                             cli::csv_number(1.0 - p)});
                }
            }
        }
    }
    std::cout << "analyze: wrote analysis_failure.csv and analysis_alpha.csv to " << out_dir
              << "\n";
    return 0;
}

int run_validate(const cli::IniConfig& config, const fs::path& out_dir) {
    validation::ValidationOptions options;
    options.random_plans =
        static_cast<int>(config.get_long("validate.random_plans", options.random_plans));
    options.max_transmissions = static_cast<int>(
        config.get_long("validate.max_transmissions", options.max_transmissions));
    options.sequence_views = config.get_long("validate.sequence_views",
                                             static_cast<long>(options.sequence_views));
    options.alpha_trials =
        config.get_long("validate.alpha_trials", static_cast<long>(options.alpha_trials));
    options.expected_alpha_instances = static_cast<int>(config.get_long(
        "validate.instances", options.expected_alpha_instances));
    options.seed = static_cast<std::uint64_t>(
        config.get_long("validate.seed", static_cast<long>(options.seed)));

    const auto rows = validation::run_all(options);
    auto out = open_output(out_dir, "validation.csv");
    cli::write_validation_csv(out, rows, config.hash(), options.seed);

    std::size_t gated = 0, failed = 0;
    for (const auto& row : rows) {
        if (!row.gated) continue;
        ++gated;
        if (!row.pass) {
            ++failed;
            std::cerr << "FAIL " << row.id << ": |" << row.closed_form << " - "
                      << row.oracle_value << "| = " << row.abs_delta << " > " << row.tolerance
                      << "\n";
        }
    }
    std::cout << "validate: " << rows.size() << " rows, " << gated << " gated, " << failed
              << " failed (validation.csv in " << out_dir << ")\n";
    return failed == 0 ? 0 : 1;
}

int run_simulate(const cli::IniConfig& config, const fs::path& out_dir,
                 const std::string& seed_list) {
    sim::ScenarioConfig scenario = cli::scenario_from_config(config);
    const auto seeds = parse_seeds(seed_list, scenario.seed);
    std::vector<sim::Summary> summaries;
    for (std::uint64_t seed : seeds) {
        scenario.seed = seed;
        const sim::ScenarioResult result = sim::run_scenario(scenario);
        auto frames = open_output(out_dir, "frames_" + std::to_string(seed) + ".csv");
        cli::write_frames_csv(frames, result, config.hash(), seed);
        auto clients = open_output(out_dir, "clients_" + std::to_string(seed) + ".csv");
        cli::write_clients_csv(clients, result, config.hash(), seed);
        summaries.push_back(result.summary);
    }
    auto out = open_output(out_dir, "summary.csv");
    cli::write_summary_csv(out, summaries, config.hash());
    std::cout << "simulate: " << seeds.size() << " seed(s) written to " << out_dir << "\n";
    return 0;
}

int run_sweep(const cli::IniConfig& base, const fs::path& out_dir, const std::string& param,
              const std::string& value_list, const std::string& seed_list) {
    if (param.empty() || value_list.empty())
        throw ConfigError("sweep needs --param and --values");
    std::vector<std::string> values;
    {
        std::istringstream in(value_list);
        std::string token;
        while (std::getline(in, token, ',')) {
            if (!token.empty()) values.push_back(token);
        }
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");

    std::vector<cli::SweepPoint> points;
    for (const std::string& value : values) {
        cli::IniConfig config = base;
        config.apply_override(param + "=" + value);
        sim::ScenarioConfig scenario = cli::scenario_from_config(config);
        const auto seeds = parse_seeds(seed_list, scenario.seed);
        cli::SweepPoint point;
        point.parameter = param;
        point.value = value;
        for (std::uint64_t seed : seeds) {
            scenario.seed = seed;
            point.summaries.push_back(sim::run_scenario(scenario).summary);
        }
        points.push_back(std::move(point));
    }
    auto out = open_output(out_dir, "sweep_summary.csv");
    cli::write_sweep_csv(out, points, base.hash());
    std::cout << "sweep: " << points.size() << " value(s) written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analysis, validation, and simulation for DIBR-protected multi-view multicast"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string seed_list;
    std::string sweep_param;
    std::string sweep_values;
    std::vector<std::string> overrides;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config file")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--set", overrides, "override: section.key=value")->take_all();
    };

    CLI::App* analyze = app.add_subcommand("analyze", "tabulate the closed forms");
    add_common(analyze);
    CLI::App* validate = app.add_subcommand("validate", "closed forms vs oracles");
    add_common(validate);
    CLI::App* simulate = app.add_subcommand("simulate", "run the scenario per seed");
    add_common(simulate);
    simulate->add_option("--seeds", seed_list, "comma-separated seeds");
    CLI::App* sweep = app.add_subcommand("sweep", "one-parameter scenario sweep");
    add_common(sweep);
    sweep->add_option("--seeds", seed_list, "comma-separated seeds");
    sweep->add_option("--param", sweep_param, "config key to sweep")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const cli::IniConfig config = load_config(config_path, overrides);
        if (analyze->parsed()) return run_analyze(config, out_dir);
        if (validate->parsed()) return run_validate(config, out_dir);
        if (simulate->parsed()) return run_simulate(config, out_dir, seed_list);
        if (sweep->parsed()) return run_sweep(config, out_dir, sweep_param, sweep_values, seed_list);
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
