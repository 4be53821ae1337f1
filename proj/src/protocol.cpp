#include "mvmc/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "mvmc/analysis.hpp"

namespace mvmc::protocol {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

struct Reader {
    const std::vector<std::uint8_t>& frame;
    std::size_t at = 0;

    std::uint8_t u8() {
        if (at + 1 > frame.size()) throw CodecError("truncated frame");
        return frame[at++];
    }
    std::uint16_t u16() {
        return static_cast<std::uint16_t>(static_cast<std::uint16_t>(u8()) << 8 | u8());
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u16()) << 16 | u16(); }
    std::uint64_t u64() { return static_cast<std::uint64_t>(u32()) << 32 | u32(); }
    void done() const {
        if (at != frame.size()) throw CodecError("trailing bytes after frame");
    }
};

void put_instance(std::vector<std::uint8_t>& out, const InstanceKey& key) {
    put_u16(out, static_cast<std::uint16_t>(key.view));
    out.push_back(static_cast<std::uint8_t>(key.channel));
    out.push_back(static_cast<std::uint8_t>(key.rate));
}

InstanceKey read_instance(Reader& r) {
    InstanceKey key;
    key.view = r.u16();
    key.channel = r.u8();
    key.rate = r.u8();
    return key;
}

void check_encodable(const InstanceKey& key) {
    if (key.view < 0 || key.view > 0xFFFF || key.channel < 0 || key.channel > 0xFF ||
        key.rate < 0 || key.rate > 0xFF)
        throw std::invalid_argument("instance key does not fit the wire format");
}

}  // namespace

std::vector<std::uint8_t> encode_message(const MvgmpMessage& message) {
    if (message.type != MessageType::join && message.type != MessageType::leave)
        throw std::invalid_argument("only join/leave messages use this framing");
    if (message.views.empty()) throw std::invalid_argument("message carries no views");
    if (message.views.size() > 0xFFFF) throw std::invalid_argument("too many view records");
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(message.type));
    put_u32(out, message.client);
    put_u16(out, static_cast<std::uint16_t>(message.views.size()));
    for (const InstanceKey& key : message.views) {
        check_encodable(key);
        put_instance(out, key);
    }
    return out;
}

MvgmpMessage decode_message(const std::vector<std::uint8_t>& frame) {
    Reader r{frame};
    const std::uint8_t type = r.u8();
    if (type != 1 && type != 2) throw CodecError("unknown message type " + std::to_string(type));
    MvgmpMessage message;
    message.type = static_cast<MessageType>(type);
    message.client = r.u32();
    const std::uint16_t count = r.u16();
    if (count == 0) throw CodecError("join/leave frame with no views");
    message.views.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) message.views.push_back(read_instance(r));
    r.done();
    return message;
}

std::vector<std::uint8_t> encode_table(const TableAnnouncement& announcement) {
    if (announcement.instances.size() > 0xFFFF)
        throw std::invalid_argument("too many instances to announce");
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(MessageType::table));
    put_u64(out, announcement.version);
    put_u16(out, static_cast<std::uint16_t>(announcement.instances.size()));
    for (const auto& [key, address] : announcement.instances) {
        check_encodable(key);
        put_instance(out, key);
        put_u32(out, address);
    }
    return out;
}

TableAnnouncement decode_table(const std::vector<std::uint8_t>& frame) {
    Reader r{frame};
    if (r.u8() != static_cast<std::uint8_t>(MessageType::table))
        throw CodecError("not a table announcement");
    TableAnnouncement announcement;
    announcement.version = r.u64();
    const std::uint16_t count = r.u16();
    announcement.instances.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        InstanceKey key = read_instance(r);
        announcement.instances.emplace_back(key, r.u32());
    }
    r.done();
    return announcement;
}

const ViewInstance* ViewTable::find(const InstanceKey& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

TransmissionPlan ViewTable::implied_plan() const {
    TransmissionPlan plan;
    for (const auto& [key, instance] : entries_) plan.add(key.view, key.channel, key.rate, 1);
    return plan;
}

TableAnnouncement ViewTable::announcement() const {
    TableAnnouncement a;
    a.version = version_;
    for (const auto& [key, instance] : entries_)
        a.instances.emplace_back(key, instance.multicast_address);
    return a;
}

ViewInstance& ViewTable::create(const InstanceKey& key, std::uint32_t client, double now) {
    if (entries_.count(key)) throw std::invalid_argument("instance already exists");
    ViewInstance instance;
    instance.key = key;
    instance.multicast_address = next_address_++;
    instance.subscribers[client] = now;
    ++version_;
    return entries_.emplace(key, std::move(instance)).first->second;
}

bool ViewTable::add_subscriber(const InstanceKey& key, std::uint32_t client, double now) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    auto [sub, inserted] = it->second.subscribers.try_emplace(client, now);
    if (!inserted) {
        sub->second = now;  // refresh only, no structural change
        return true;
    }
    ++version_;
    return true;
}

bool ViewTable::remove_subscriber(const InstanceKey& key, std::uint32_t client) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    if (it->second.subscribers.erase(client) == 0) return false;
    ++version_;
    return true;
}

void ViewTable::withdraw(const InstanceKey& key) {
    if (entries_.erase(key)) ++version_;
}

JoinOutcome handle_join(ViewTable& table, const MvgmpMessage& join, double now,
                        const PlanContext& context) {
    if (join.type != MessageType::join) throw std::invalid_argument("not a join message");
    JoinOutcome outcome;
    TransmissionPlan plan = table.implied_plan();
    for (const InstanceKey& key : join.views) {
        if (table.add_subscriber(key, join.client, now)) {
            outcome.joined.push_back(key);
            continue;
        }
        TransmissionPlan candidate = plan;
        candidate.add(key.view, key.channel, key.rate, 1);
        if (key.channel < 0 || key.channel >= context.channel_count ||
            !validate_plan(candidate, context.frame_interval_s, context.video_rate_bps,
                           context.rates)
                 .feasible) {
            outcome.rejected.push_back(key);
            continue;
        }
        table.create(key, join.client, now);
        plan = std::move(candidate);
        outcome.created.push_back(key);
    }
    return outcome;
}

LeaveOutcome handle_leave(ViewTable& table, const MvgmpMessage& leave, double now) {
    (void)now;
    if (leave.type != MessageType::leave) throw std::invalid_argument("not a leave message");
    LeaveOutcome outcome;
    for (const InstanceKey& key : leave.views) {
        const ViewInstance* instance = table.find(key);
        if (instance == nullptr ||
            instance->subscribers.find(leave.client) == instance->subscribers.end()) {
            ++outcome.unknown;
            continue;
        }
        table.remove_subscriber(key, leave.client);
        instance = table.find(key);
        if (instance->subscribers.empty()) {
            table.withdraw(key);
            outcome.withdrawn.push_back(key);
        } else {
            for (const auto& [subscriber, refresh] : instance->subscribers)
                outcome.notices.push_back({subscriber, key});
        }
    }
    return outcome;
}

ExpiryOutcome expire_soft_state(ViewTable& table, double now, double refresh_interval,
                                int miss_limit) {
    if (!(refresh_interval > 0.0)) throw std::domain_error("refresh interval must be positive");
    if (miss_limit < 1) throw std::domain_error("miss limit must be at least 1");
    const double deadline = miss_limit * refresh_interval;
    ExpiryOutcome outcome;
    std::vector<std::pair<InstanceKey, std::uint32_t>> stale;
    for (const auto& [key, instance] : table.entries()) {
        for (const auto& [client, refresh] : instance.subscribers) {
            if (now - refresh > deadline) stale.emplace_back(key, client);
        }
    }
    for (const auto& [key, client] : stale) {
        table.remove_subscriber(key, client);
        ++outcome.expired_subscriptions;
    }
    std::vector<InstanceKey> empty;
    for (const auto& [key, instance] : table.entries()) {
        if (instance.subscribers.empty()) empty.push_back(key);
    }
    for (const InstanceKey& key : empty) {
        table.withdraw(key);
        outcome.withdrawn.push_back(key);
    }
    return outcome;
}

std::vector<InstanceKey> ViewSelection::subscription() const {
    std::vector<InstanceKey> all = direct_existing;
    all.insert(all.end(), direct_new.begin(), direct_new.end());
    all.insert(all.end(), protection.begin(), protection.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

double subscription_failure(const Client& client, ViewId desired,
                            const std::vector<InstanceKey>& keys, const LossModel& model,
                            int num_views, int dibr_range) {
    TransmissionPlan plan;
    for (const InstanceKey& key : keys) plan.add(key.view, key.channel, key.rate, 1);
    return view_failure_probability(client, desired, plan, model, num_views, dibr_range);
}

namespace {

// Candidate protection additions, ranked by failure first and airtime-free
// determinism after: smaller view spread, higher rate, lower channel.
struct ProtectionOption {
    std::vector<InstanceKey> add;  // one or two instances
    double failure = 1.0;
    int spread = 0;    // view distance covered (pair) or distance to desired (single)
    double rate_mbps = 0.0;
    int channel_sum = 0;

    bool operator<(const ProtectionOption& other) const {
        if (failure != other.failure) return failure < other.failure;
        if (add.size() != other.add.size()) return add.size() < other.add.size();
        if (spread != other.spread) return spread < other.spread;
        if (rate_mbps != other.rate_mbps) return rate_mbps > other.rate_mbps;
        if (channel_sum != other.channel_sum) return channel_sum < other.channel_sum;
        return add < other.add;
    }
};

struct SelectionState {
    const Client& client;
    ViewId desired;
    int num_views;
    int dibr_range;
    const LossModel& model;

    double failure(const std::vector<InstanceKey>& keys) const {
        return subscription_failure(client, desired, keys, model, num_views, dibr_range);
    }
};

bool is_left(const InstanceKey& key, ViewId desired) { return key.view < desired; }

// Greedy protection pass over table instances within the quality range.
// Mutates `chosen` (appending protection picks) until the threshold is met,
// no option helps, or the protection budget is exhausted.
double add_protection(const SelectionState& s, const std::vector<InstanceKey>& candidates,
                      std::vector<InstanceKey>& chosen, std::vector<InstanceKey>& protection,
                      double current_failure, const RateSet& rates) {
    const double threshold = s.client.threshold;
    while (current_failure > threshold &&
           static_cast<int>(protection.size()) < s.client.max_protection_views) {
        std::vector<ProtectionOption> options;
        const int budget = s.client.max_protection_views - static_cast<int>(protection.size());
        for (const InstanceKey& a : candidates) {
            if (std::find(chosen.begin(), chosen.end(), a) != chosen.end()) continue;
            // Single addition: only helps once the opposite side is covered,
            // but useless ones simply show zero decrement and lose.
            std::vector<InstanceKey> with = chosen;
            with.push_back(a);
            ProtectionOption single;
            single.add = {a};
            single.failure = s.failure(with);
            single.spread = std::abs(a.view - s.desired);
            single.rate_mbps = rates.mbps(a.rate);
            single.channel_sum = a.channel;
            options.push_back(std::move(single));
            if (budget < 2 || !is_left(a, s.desired)) continue;
            for (const InstanceKey& b : candidates) {
                if (is_left(b, s.desired)) continue;
                if (b.view - a.view > s.dibr_range) continue;
                if (std::find(chosen.begin(), chosen.end(), b) != chosen.end()) continue;
                std::vector<InstanceKey> with_pair = chosen;
                with_pair.push_back(a);
                with_pair.push_back(b);
                ProtectionOption pair;
                pair.add = {a, b};
                pair.failure = s.failure(with_pair);
                pair.spread = b.view - a.view;
                pair.rate_mbps = rates.mbps(a.rate) + rates.mbps(b.rate);
                pair.channel_sum = a.channel + b.channel;
                options.push_back(std::move(pair));
            }
        }
        if (options.empty()) break;
        const ProtectionOption& best = *std::min_element(options.begin(), options.end());
        if (best.failure >= current_failure - 1e-15) break;  // nothing helps any more
        for (const InstanceKey& key : best.add) {
            chosen.push_back(key);
            protection.push_back(key);
        }
        current_failure = best.failure;
    }
    return current_failure;
}

// Drops protection picks that later additions made redundant.
double prune_protection(const SelectionState& s, std::vector<InstanceKey>& chosen,
                        std::vector<InstanceKey>& protection, double current_failure) {
    const double threshold = s.client.threshold;
    if (current_failure > threshold) return current_failure;
    bool changed = true;
    while (changed) {
        changed = false;
        // Farthest-first so the cheapest protection survives.
        std::vector<InstanceKey> order = protection;
        std::sort(order.begin(), order.end(), [&](const InstanceKey& a, const InstanceKey& b) {
            const int da = std::abs(a.view - s.desired), db = std::abs(b.view - s.desired);
            if (da != db) return da > db;
            return a > b;
        });
        for (const InstanceKey& key : order) {
            std::vector<InstanceKey> without = chosen;
            without.erase(std::remove(without.begin(), without.end(), key), without.end());
            const double failure = s.failure(without);
            if (failure <= threshold) {
                chosen = std::move(without);
                protection.erase(std::remove(protection.begin(), protection.end(), key),
                                 protection.end());
                current_failure = failure;
                changed = true;
                break;
            }
        }
    }
    return current_failure;
}

}  // namespace

ViewSelection select_views(const Client& client, ViewId desired, const ViewTable& table,
                           int num_views, int dibr_range, const LossModel& model,
                           const PlanContext& context) {
    check_view_count(num_views);
    check_client(client);
    if (desired < 1 || desired > num_views) throw std::domain_error("desired view out of range");

    const SelectionState s{client, desired, num_views, dibr_range, model};
    ViewSelection selection;

    // Receivable instances: the desired view's, and protection candidates
    // within the quality range on either side.
    std::vector<InstanceKey> candidates;
    for (const auto& [key, instance] : table.entries()) {
        if (!client.can_receive(key.channel, key.rate)) continue;
        if (key.view == desired) {
            selection.direct_existing.push_back(key);
        } else if (std::abs(key.view - desired) < dibr_range && key.view >= 1 &&
                   key.view <= num_views) {
            candidates.push_back(key);
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<InstanceKey> chosen = selection.direct_existing;
    double failure = s.failure(chosen);

    failure = add_protection(s, candidates, chosen, selection.protection, failure,
                             context.rates);

    // Still above threshold: ask the AP to transmit the desired view on the
    // best feasible (channel, rate), possibly more than once, re-choosing
    // protection each time so the new transmissions retire redundant picks.
    if (failure > client.threshold) {
        TransmissionPlan ap_plan = table.implied_plan();
        while (failure > client.threshold) {
            double best_failure = failure;
            std::optional<InstanceKey> best_key;
            double best_rate = -1.0;
            for (RateId r : client.rates) {
                for (ChannelId c : client.channels) {
                    if (c < 0 || c >= context.channel_count) continue;
                    const InstanceKey key{desired, c, r};
                    if (table.find(key) != nullptr ||
                        std::find(selection.direct_new.begin(), selection.direct_new.end(),
                                  key) != selection.direct_new.end())
                        continue;
                    TransmissionPlan candidate_plan = ap_plan;
                    candidate_plan.add(desired, c, r, 1);
                    if (!validate_plan(candidate_plan, context.frame_interval_s,
                                       context.video_rate_bps, context.rates)
                             .feasible)
                        continue;
                    std::vector<InstanceKey> with = chosen;
                    with.push_back(key);
                    const double f = s.failure(with);
                    const double rate = context.rates.mbps(r);
                    const bool better =
                        f < best_failure - 1e-15 ||
                        (best_key && std::abs(f - best_failure) <= 1e-15 &&
                         (rate > best_rate ||
                          (rate == best_rate && key.channel < best_key->channel)));
                    if (better) {
                        best_failure = f;
                        best_key = key;
                        best_rate = rate;
                    }
                }
            }
            if (!best_key) break;  // no feasible slot improves anything
            selection.direct_new.push_back(*best_key);
            ap_plan.add(best_key->view, best_key->channel, best_key->rate, 1);

            // Re-run protection from scratch against the strengthened base.
            chosen = selection.direct_existing;
            chosen.insert(chosen.end(), selection.direct_new.begin(), selection.direct_new.end());
            selection.protection.clear();
            failure = s.failure(chosen);
            failure = add_protection(s, candidates, chosen, selection.protection, failure,
                                     context.rates);
        }
    }

    failure = prune_protection(s, chosen, selection.protection, failure);

    selection.predicted_failure = failure;
    selection.feasible = failure <= client.threshold + 1e-15;
    return selection;
}

Reorganization reorganize(const Client& client, ViewId desired, ViewId affected_view,
                          const std::vector<InstanceKey>& current_subscription,
                          const ViewTable& table, int num_views, int dibr_range,
                          const LossModel& model) {
    Reorganization result;
    if (affected_view == desired) {
        result.predicted_failure = subscription_failure(client, desired, current_subscription,
                                                        model, num_views, dibr_range);
        return result;
    }
    std::vector<InstanceKey> affected;
    std::vector<InstanceKey> rest;
    for (const InstanceKey& key : current_subscription) {
        (key.view == affected_view ? affected : rest).push_back(key);
    }
    const double base_failure = subscription_failure(client, desired, current_subscription,
                                                     model, num_views, dibr_range);
    result.predicted_failure = base_failure;
    if (affected.empty()) return result;

    // Dropping the view outright keeps the subscription minimal.
    const double without = subscription_failure(client, desired, rest, model, num_views,
                                                dibr_range);
    if (without <= client.threshold) {
        result.leave = MvgmpMessage{MessageType::leave, client.id, affected};
        result.predicted_failure = without;
        return result;
    }

    // Otherwise look for a replacement that is already transmitted.
    std::optional<InstanceKey> best;
    double best_failure = 1.0;
    for (const auto& [key, instance] : table.entries()) {
        if (key.view == affected_view) continue;
        if (std::abs(key.view - desired) >= dibr_range && key.view != desired) continue;
        if (!client.can_receive(key.channel, key.rate)) continue;
        if (std::find(rest.begin(), rest.end(), key) != rest.end()) continue;
        std::vector<InstanceKey> swapped = rest;
        swapped.push_back(key);
        const double f = subscription_failure(client, desired, swapped, model, num_views,
                                              dibr_range);
        if (f > client.threshold) continue;
        if (!best || f < best_failure - 1e-15 ||
            (std::abs(f - best_failure) <= 1e-15 && key < *best)) {
            best = key;
            best_failure = f;
        }
    }
    if (best) {
        result.leave = MvgmpMessage{MessageType::leave, client.id, affected};
        result.join = MvgmpMessage{MessageType::join, client.id, {*best}};
        result.predicted_failure = best_failure;
    }
    return result;
}

}  // namespace mvmc::protocol
