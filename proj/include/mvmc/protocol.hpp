#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mvmc/model.hpp"

// MVGMP: IGMP-style soft-state group management for multi-view multicast.
// The AP owns a ViewTable of transmitted view instances; clients join the
// instances they want (their desired view plus protection views for DIBR)
// and refresh periodically.
namespace mvmc::protocol {

struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One multicast view instance: a view transmitted once per frame interval on
// a (channel, rate).
struct InstanceKey {
    ViewId view = 0;
    ChannelId channel = 0;
    RateId rate = 0;
    auto operator<=>(const InstanceKey&) const = default;
};

enum class MessageType : std::uint8_t { join = 1, leave = 2, table = 3 };

struct MvgmpMessage {
    MessageType type = MessageType::join;
    std::uint32_t client = 0;
    std::vector<InstanceKey> views;
    bool operator==(const MvgmpMessage&) const = default;
};

// Wire framing (big-endian):
//   byte  0     message type (1 join, 2 leave)
//   bytes 1-4   client id
//   bytes 5-6   record count (>= 1)
//   then count * { view u16, channel u8, rate u8 }
// Encode rejects empty view lists; decode rejects unknown types, short
// frames, and trailing bytes.
std::vector<std::uint8_t> encode_message(const MvgmpMessage& message);
MvgmpMessage decode_message(const std::vector<std::uint8_t>& frame);

// Periodic AP broadcast of the table contents:
//   byte  0     message type (3)
//   bytes 1-8   table version u64
//   bytes 9-10  instance count (may be 0)
//   then count * { view u16, channel u8, rate u8, multicast address u32 }
struct TableAnnouncement {
    std::uint64_t version = 0;
    std::vector<std::pair<InstanceKey, std::uint32_t>> instances;
    bool operator==(const TableAnnouncement&) const = default;
};
std::vector<std::uint8_t> encode_table(const TableAnnouncement& announcement);
TableAnnouncement decode_table(const std::vector<std::uint8_t>& frame);

struct ViewInstance {
    InstanceKey key;
    std::uint32_t multicast_address = 0;
    std::map<std::uint32_t, double> subscribers;  // client id -> last refresh time
};

// Capacity context for admission checks.
struct PlanContext {
    double frame_interval_s = 0.0333;
    double video_rate_bps = 800e3;
    RateSet rates;
    int channel_count = 13;
};

class ViewTable {
public:
    std::uint64_t version() const { return version_; }
    const std::map<InstanceKey, ViewInstance>& entries() const { return entries_; }
    const ViewInstance* find(const InstanceKey& key) const;
    bool empty() const { return entries_.empty(); }

    TransmissionPlan implied_plan() const;  // every instance transmits once per frame
    TableAnnouncement announcement() const;

    // Structural mutations bump the version; timestamp refreshes do not.
    ViewInstance& create(const InstanceKey& key, std::uint32_t client, double now);
    bool add_subscriber(const InstanceKey& key, std::uint32_t client, double now);
    bool remove_subscriber(const InstanceKey& key, std::uint32_t client);
    void withdraw(const InstanceKey& key);

private:
    std::map<InstanceKey, ViewInstance> entries_;
    std::uint64_t version_ = 0;
    std::uint32_t next_address_ = 0xEF000001;  // 239.0.0.1 onwards
};

struct JoinOutcome {
    std::vector<InstanceKey> created;
    std::vector<InstanceKey> joined;    // existing instances gained or refreshed
    std::vector<InstanceKey> rejected;  // creation requests that failed the capacity check
};

// Declarative join/refresh: every listed instance either exists (subscribe or
// refresh) or is created when the resulting plan stays feasible. Duplicate
// joins only refresh timestamps.
JoinOutcome handle_join(ViewTable& table, const MvgmpMessage& join, double now,
                        const PlanContext& context);

struct LeaveNotice {
    std::uint32_t client = 0;  // remaining co-subscriber to inform
    InstanceKey instance;
};

struct LeaveOutcome {
    std::vector<InstanceKey> withdrawn;  // instances whose last subscriber left
    std::vector<LeaveNotice> notices;    // remaining subscribers of surviving instances
    int unknown = 0;                     // ignored references (soft-state tolerance)
};

LeaveOutcome handle_leave(ViewTable& table, const MvgmpMessage& leave, double now);

struct ExpiryOutcome {
    int expired_subscriptions = 0;
    std::vector<InstanceKey> withdrawn;
};

// Drops subscribers whose last refresh is older than miss_limit * interval,
// then withdraws instances nobody receives any more (silent leave).
ExpiryOutcome expire_soft_state(ViewTable& table, double now, double refresh_interval,
                                int miss_limit);

// What a client decides to receive, before it sends the Join.
struct ViewSelection {
    std::vector<InstanceKey> direct_existing;  // desired-view instances already in the table
    std::vector<InstanceKey> direct_new;       // desired-view instances to be created
    std::vector<InstanceKey> protection;       // left/right instances already in the table
    double predicted_failure = 1.0;
    bool feasible = false;  // predicted_failure <= client's threshold

    std::vector<InstanceKey> subscription() const;  // join payload
};

// The join-side selection procedure: subscribe the desired view if its
// instances alone keep the failure probability under the client's threshold;
// otherwise greedily add the left/right pair (or single view completing a
// pair) with the largest failure decrement; if the table cannot get there,
// request new desired-view instances on the (channel, rate) that minimizes
// failure among capacity-feasible choices, re-running protection selection
// after each addition so the client does not keep receiving views the new
// instance made redundant.
ViewSelection select_views(const Client& client, ViewId desired, const ViewTable& table,
                           int num_views, int dibr_range, const LossModel& model,
                           const PlanContext& context);

// A remaining subscriber's reaction to somebody leaving a view it receives
// for protection: drop it when no longer needed, swap it for another
// transmitted view when that keeps the threshold, otherwise keep it.
struct Reorganization {
    std::optional<MvgmpMessage> leave;
    std::optional<MvgmpMessage> join;
    double predicted_failure = 1.0;
};

Reorganization reorganize(const Client& client, ViewId desired, ViewId affected_view,
                          const std::vector<InstanceKey>& current_subscription,
                          const ViewTable& table, int num_views, int dibr_range,
                          const LossModel& model);

// Failure probability the client would see if it subscribed exactly `keys`.
double subscription_failure(const Client& client, ViewId desired,
                            const std::vector<InstanceKey>& keys, const LossModel& model,
                            int num_views, int dibr_range);

}  // namespace mvmc::protocol
