#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvmc/model.hpp"
#include "mvmc/protocol.hpp"
#include "mvmc/rng.hpp"

// Frame-granular discrete-event simulation of a dynamic client population,
// run simultaneously through MVGMP and through a baseline scheme that
// multicasts every desired view with enough repeats to meet each
// subscriber's threshold (no DIBR protection). Both schemes see the same
// event stream so channel-time comparisons are paired.
namespace mvmc::sim {

enum class Preference { uniform, zipf, normal };
enum class LossKind { client_table, distance };

struct ScenarioConfig {
    int views = 16;      // M
    int dibr_range = 3;  // R
    int channels = 13;
    std::vector<double> rates_mbps = {6.5, 13, 19.5, 26, 39, 52, 58.5, 65};
    double video_rate_bps = 800e3;
    double frame_interval_s = 0.0333;  // 30 fps frames; the channel-time unit stays 1 ms

    int population_target = 50;
    double arrival_prob = 0.2;      // lambda, per frame
    double departure_prob = 0.3;    // mu
    double view_change_prob = 0.4;  // eta
    Preference preference = Preference::uniform;
    double threshold_min = 0.0;  // thresholds drawn uniformly from (min, max]
    double threshold_max = 0.1;
    int max_protection_views = 4;
    int channels_per_client = 0;  // 0 = every channel
    int rates_per_client = 0;     // 0 = every rate

    LossKind loss_kind = LossKind::client_table;
    double loss_min = 0.1;  // per-client draw from [min, max]
    double loss_max = 0.4;
    // One draw per (client, channel) instead of one per client. Channel-
    // heterogeneous losses make clients stack copies of a view on their best
    // channel, which can cost more airtime than the baseline's repeats.
    bool loss_per_channel = false;
    std::vector<double> loss_base_per_rate;  // distance model: base loss at d_ref
    double loss_reference_m = 25.0;
    double loss_exponent = 1.2;
    double cell_radius_m = 50.0;

    long frames = 500;
    double refresh_interval_frames = 20;
    int miss_limit = 3;
    int baseline_repeat_cap = 8;
    std::uint64_t seed = 1;
};

void check_scenario(const ScenarioConfig& config);  // throws ConfigError

struct MetricsRecord {
    long frame = 0;
    int active_clients = 0;
    double mvgmp_channel_time_ms = 0.0;
    int mvgmp_instances = 0;
    double mvgmp_mean_failure = 0.0;
    double mvgmp_max_failure = 0.0;
    double mvgmp_mean_alpha = 0.0;
    int mvgmp_infeasible = 0;  // clients whose selection could not meet the threshold
    double baseline_channel_time_ms = 0.0;
    int baseline_instances = 0;
    double baseline_mean_loss = 0.0;
    double baseline_mean_alpha = 0.0;
    int baseline_queued = 0;  // views deferred to a later frame for capacity
};

struct ClientOutcome {
    std::uint32_t id = 0;
    ViewId last_desired = 0;
    double threshold = 0.0;
    long frames_active = 0;
    long failures_observed = 0;       // frames where the desired view was unobtainable
    double predicted_failure_sum = 0; // per-frame closed-form failure, summed
    double predicted_variance_sum = 0;
    bool ever_infeasible = false;
};

struct Summary {
    std::uint64_t seed = 0;
    long frames = 0;
    double mean_active_clients = 0.0;
    double mvgmp_mean_channel_time_ms = 0.0;
    double baseline_mean_channel_time_ms = 0.0;
    double channel_time_ratio = 0.0;  // mvgmp / baseline
    double mvgmp_mean_alpha = 0.0;
    double baseline_mean_alpha = 0.0;
    long infeasible_events = 0;
    long baseline_queued_total = 0;
    long baseline_cap_hits = 0;
    // Frames with no baseline backlog where MVGMP consumed more channel time.
    long mvgmp_ct_exceeding_frames = 0;
};

struct ScenarioResult {
    std::vector<MetricsRecord> frames;
    std::vector<ClientOutcome> clients;
    Summary summary;
};

// Total per-frame airtime of the plan in milliseconds.
double channel_time_ms(const TransmissionPlan& plan, double video_rate_bps,
                       double frame_interval_s, const RateSet& rates);

ViewId sample_preference(Preference preference, int num_views, Rng& rng);

struct BaselineResult {
    TransmissionPlan plan;
    std::map<ViewId, PlanKey> assignment;  // desired view -> where it is sent
    std::vector<ViewId> queued;
    int cap_hits = 0;
};

// One frame of the baseline scheme: each distinct desired view gets one
// (channel, rate) on the least-loaded channel, repeated just enough for every
// subscriber's loss to fall under its threshold; views that do not fit wait
// for a later frame (rotation gives them priority next time).
BaselineResult baseline_plan(const std::vector<Client>& clients, int num_views,
                             const LossModel& model, const protocol::PlanContext& context,
                             int repeat_cap, int rotation);

ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace mvmc::sim
