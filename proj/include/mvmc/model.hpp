#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvmc {

// Thrown for malformed configuration (missing loss-table keys, bad
// probability vectors, unparseable scenario files).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using ViewId = int;     // 1-based view index in [1, M]
using ChannelId = int;  // 0-based orthogonal channel index
using RateId = int;     // index into the configured PHY rate set

// Configured PHY rates in Mbps, indexed by RateId.
class RateSet {
public:
    RateSet() = default;
    explicit RateSet(std::vector<double> mbps);

    int size() const { return static_cast<int>(mbps_.size()); }
    double mbps(RateId r) const;
    double bits_per_second(RateId r) const { return mbps(r) * 1e6; }

    const std::vector<double>& values() const { return mbps_; }

private:
    std::vector<double> mbps_;
};

struct PlanKey {
    ViewId view = 0;
    ChannelId channel = 0;
    RateId rate = 0;
    auto operator<=>(const PlanKey&) const = default;
};

// How many times each view is multicast per frame interval, keyed by
// (view, channel, rate). Absent keys and explicit zeros are the same thing:
// zero counts are never stored.
class TransmissionPlan {
public:
    void add(ViewId view, ChannelId channel, RateId rate, int times = 1);
    void set_count(const PlanKey& key, int times);
    int count(ViewId view, ChannelId channel, RateId rate) const;

    const std::map<PlanKey, int>& entries() const { return counts_; }
    int total_transmissions() const;
    bool empty() const { return counts_.empty(); }

private:
    std::map<PlanKey, int> counts_;
};

// A multicast receiver: its radio capabilities, the views it wants, and the
// failure-probability threshold it will accept.
struct Client {
    std::uint32_t id = 0;
    double x = 0.0;  // meters from the AP; only the distance loss model reads these
    double y = 0.0;
    std::vector<ChannelId> channels;    // C_i, sorted unique
    std::vector<RateId> rates;          // D_i, sorted unique
    std::vector<ViewId> desired_views;  // K_i
    double threshold = 0.1;             // in (0, 1]
    int max_protection_views = 4;

    bool can_receive(ChannelId channel, RateId rate) const;
};

// Throws std::invalid_argument when a client violates its structural
// invariants (empty capability sets, threshold out of (0, 1], ...).
void check_client(const Client& client);

// Per-(client, channel, rate) view loss probability source. Either an
// explicit table or a distance model
//     p = 1 - (1 - base(rate)) ^ ((d / d_ref) ^ exponent)
// where d is the client's distance from the AP. The distance model is a
// scenario convenience; the explicit table is the primary mode.
class LossModel {
public:
    static LossModel table();
    static LossModel distance(std::vector<double> base_loss_per_rate,
                              double reference_distance_m, double exponent);

    void set_loss(std::uint32_t client_id, ChannelId channel, RateId rate, double p);

    // p_{i,c,r} in [0, 1]; deterministic. Throws ConfigError when the explicit
    // table has no entry for the key.
    double loss(const Client& client, ChannelId channel, RateId rate) const;

    bool is_table() const { return kind_ == Kind::table; }

private:
    enum class Kind { table, distance };
    struct TableKey {
        std::uint32_t client;
        ChannelId channel;
        RateId rate;
        auto operator<=>(const TableKey&) const = default;
    };

    Kind kind_ = Kind::table;
    std::map<TableKey, double> table_;
    std::vector<double> base_loss_per_rate_;
    double reference_distance_m_ = 1.0;
    double exponent_ = 2.0;
};

double loss_probability(const LossModel& model, const Client& client,
                        ChannelId channel, RateId rate);

// Distribution over per-frame transmission counts for each (channel, rate):
// probs[n] is the probability the AP multicasts a view n times there.
class ApTransmissionPolicy {
public:
    void set(ChannelId channel, RateId rate, std::vector<double> probs_by_count);
    // nullptr means the pair is never used (always n = 0).
    const std::vector<double>* find(ChannelId channel, RateId rate) const;
    void validate() const;  // throws ConfigError on malformed vectors

private:
    std::map<std::pair<ChannelId, RateId>, std::vector<double>> policies_;
};

struct Feasibility {
    bool feasible = true;
    ChannelId worst_channel = -1;
    // Airtime of the busiest channel divided by the frame interval; > 1 when
    // infeasible.
    double worst_utilization = 0.0;
};

// Airtime in seconds consumed on each channel by one frame interval of the
// plan: count * (video_rate * frame_interval) / phy_rate per entry.
std::map<ChannelId, double> per_channel_airtime_s(const TransmissionPlan& plan,
                                                  double frame_interval_s,
                                                  double video_rate_bps,
                                                  const RateSet& rates);

// Verdict on whether every channel's airtime fits in the frame interval.
Feasibility validate_plan(const TransmissionPlan& plan, double frame_interval_s,
                          double video_rate_bps, const RateSet& rates);

// The closed forms below are defined for M >= 2 only; a single-view "stream"
// has no interior views and its boundary indicators would double-count.
void check_view_count(int num_views);

}  // namespace mvmc
