#pragma once

#include <ostream>
#include <vector>

#include "mvmc/simulator.hpp"
#include "mvmc/validation.hpp"

// CSV serialization for every command output. All numbers go through one
// fixed format so identical (config, seed) pairs produce identical bytes.
namespace mvmc::cli {

void write_frames_csv(std::ostream& out, const sim::ScenarioResult& result,
                      std::uint64_t config_hash, std::uint64_t seed);

void write_clients_csv(std::ostream& out, const sim::ScenarioResult& result,
                       std::uint64_t config_hash, std::uint64_t seed);

// One row per seed followed by mean and ci95 rows over the seeds.
void write_summary_csv(std::ostream& out, const std::vector<sim::Summary>& summaries,
                       std::uint64_t config_hash);

void write_validation_csv(std::ostream& out,
                          const std::vector<validation::ValidationRow>& rows,
                          std::uint64_t config_hash, std::uint64_t seed);

struct SweepPoint {
    std::string parameter;
    std::string value;
    std::vector<sim::Summary> summaries;  // one per seed
};

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points,
                     std::uint64_t config_hash);

}  // namespace mvmc::cli
