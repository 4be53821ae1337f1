#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mvmc/analysis.hpp"
#include "mvmc/protocol.hpp"
#include "mvmc/rng.hpp"

using namespace mvmc;
using namespace mvmc::protocol;

namespace {

PlanContext default_context() {
    PlanContext context;
    context.frame_interval_s = 0.0333;
    context.video_rate_bps = 800e3;
    context.rates = RateSet({6.5, 13.0, 26.0});
    context.channel_count = 4;
    return context;
}

Client make_client(std::uint32_t id, ViewId desired, double threshold, int channels,
                   int rates) {
    Client client;
    client.id = id;
    for (int c = 0; c < channels; ++c) client.channels.push_back(c);
    for (int r = 0; r < rates; ++r) client.rates.push_back(r);
    client.desired_views = {desired};
    client.threshold = threshold;
    return client;
}

LossModel uniform_loss(const Client& client, double p) {
    LossModel model = LossModel::table();
    for (ChannelId c : client.channels) {
        for (RateId r : client.rates) model.set_loss(client.id, c, r, p);
    }
    return model;
}

MvgmpMessage random_message(Rng& rng) {
    MvgmpMessage message;
    message.type = rng.bernoulli(0.5) ? MessageType::join : MessageType::leave;
    message.client = static_cast<std::uint32_t>(rng.next_u64());
    const int count = static_cast<int>(rng.uniform_int(1, 12));
    for (int i = 0; i < count; ++i) {
        message.views.push_back({static_cast<ViewId>(rng.uniform_int(1, 64)),
                                 static_cast<ChannelId>(rng.uniform_int(0, 12)),
                                 static_cast<RateId>(rng.uniform_int(0, 7))});
    }
    return message;
}

}  // namespace

TEST_CASE("message codec round trip and error frames") {
    MvgmpMessage message{MessageType::join, 0xDEADBEEF, {{3, 1, 2}, {4, 0, 0}}};
    const auto frame = encode_message(message);
    CHECK(frame.size() == 1 + 4 + 2 + 2 * 4);
    CHECK(decode_message(frame) == message);

    SUBCASE("empty view list cannot be encoded") {
        message.views.clear();
        CHECK_THROWS_AS(encode_message(message), std::invalid_argument);
    }
    SUBCASE("unknown type byte") {
        auto bad = frame;
        bad[0] = 9;
        CHECK_THROWS_AS(decode_message(bad), CodecError);
    }
    SUBCASE("table announcements use their own decoder") {
        auto bad = frame;
        bad[0] = 3;
        CHECK_THROWS_AS(decode_message(bad), CodecError);
    }
    SUBCASE("truncated frame") {
        auto bad = frame;
        bad.pop_back();
        CHECK_THROWS_AS(decode_message(bad), CodecError);
    }
    SUBCASE("trailing bytes") {
        auto bad = frame;
        bad.push_back(0);
        CHECK_THROWS_AS(decode_message(bad), CodecError);
    }
    SUBCASE("zero-count frame") {
        MvgmpMessage empty{MessageType::leave, 1, {{1, 0, 0}}};
        auto bytes = encode_message(empty);
        bytes[5] = 0;
        bytes[6] = 0;
        bytes.resize(7);
        CHECK_THROWS_AS(decode_message(bytes), CodecError);
    }
}

TEST_CASE("message codec round-trips randomized messages") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        const MvgmpMessage message = random_message(rng);
        CHECK(decode_message(encode_message(message)) == message);
    }
}

TEST_CASE("table announcement codec") {
    TableAnnouncement announcement;
    announcement.version = 0x0123456789ABCDEFULL;
    announcement.instances = {{{5, 2, 1}, 0xEF000001}, {{6, 0, 0}, 0xEF000002}};
    CHECK(decode_table(encode_table(announcement)) == announcement);

    TableAnnouncement empty;
    CHECK(decode_table(encode_table(empty)) == empty);
    CHECK_THROWS_AS(decode_table(encode_message(MvgmpMessage{
                        MessageType::join, 1, {{1, 0, 0}}})),
                    CodecError);
}

TEST_CASE("join handling: creation, refresh, capacity") {
    const PlanContext context = default_context();
    ViewTable table;
    const double now = 10.0;

    MvgmpMessage join{MessageType::join, 7, {{3, 0, 0}}};
    auto outcome = handle_join(table, join, now, context);
    CHECK(outcome.created == std::vector<InstanceKey>{{3, 0, 0}});
    CHECK(table.find({3, 0, 0}) != nullptr);
    CHECK(table.find({3, 0, 0})->subscribers.count(7) == 1);
    const auto version_after_create = table.version();

    // duplicate join refreshes the timestamp without structural change
    outcome = handle_join(table, join, now + 5, context);
    CHECK(outcome.created.empty());
    CHECK(outcome.joined == std::vector<InstanceKey>{{3, 0, 0}});
    CHECK(table.version() == version_after_create);
    CHECK(table.find({3, 0, 0})->subscribers.at(7) == now + 5);

    // another subscriber is a structural change
    MvgmpMessage join2{MessageType::join, 8, {{3, 0, 0}}};
    handle_join(table, join2, now, context);
    CHECK(table.version() == version_after_create + 1);
    CHECK(table.find({3, 0, 0})->subscribers.size() == 2);

    SUBCASE("saturated channel rejects new instances") {
        // channel 0 fits eight full-rate instances of 4.1 ms in a 33.3 ms frame
        for (ViewId v = 10; v < 17; ++v) {
            MvgmpMessage fill{MessageType::join, 9, {{v, 0, 0}}};
            CHECK(handle_join(table, fill, now, context).created.size() == 1);
        }
        MvgmpMessage ninth{MessageType::join, 9, {{20, 0, 0}}};
        const auto rejected = handle_join(table, ninth, now, context);
        CHECK(rejected.created.empty());
        CHECK(rejected.rejected == std::vector<InstanceKey>{{20, 0, 0}});
        CHECK(table.find({20, 0, 0}) == nullptr);

        // a channel index outside the cell is also refused
        MvgmpMessage bad{MessageType::join, 9, {{20, 99, 0}}};
        CHECK(handle_join(table, bad, now, context).rejected.size() == 1);
    }
}

TEST_CASE("leave handling: withdrawal and notices") {
    const PlanContext context = default_context();
    ViewTable table;
    handle_join(table, {MessageType::join, 1, {{3, 0, 0}, {4, 0, 0}}}, 0.0, context);
    handle_join(table, {MessageType::join, 2, {{3, 0, 0}}}, 0.0, context);
    handle_join(table, {MessageType::join, 3, {{3, 0, 0}}}, 0.0, context);

    SUBCASE("sole subscriber leaving withdraws the instance") {
        const auto outcome = handle_leave(table, {MessageType::leave, 1, {{4, 0, 0}}}, 1.0);
        CHECK(outcome.withdrawn == std::vector<InstanceKey>{{4, 0, 0}});
        CHECK(outcome.notices.empty());
        CHECK(table.find({4, 0, 0}) == nullptr);
    }
    SUBCASE("shared instance persists and remaining subscribers are notified") {
        const auto outcome = handle_leave(table, {MessageType::leave, 2, {{3, 0, 0}}}, 1.0);
        CHECK(outcome.withdrawn.empty());
        REQUIRE(outcome.notices.size() == 2);
        CHECK(outcome.notices[0].client == 1);
        CHECK(outcome.notices[1].client == 3);
        CHECK(table.find({3, 0, 0})->subscribers.size() == 2);
    }
    SUBCASE("unknown references are tolerated") {
        const auto outcome = handle_leave(table, {MessageType::leave, 99, {{3, 0, 0}}}, 1.0);
        CHECK(outcome.unknown == 1);
        CHECK(table.find({3, 0, 0})->subscribers.size() == 3);
    }
}

TEST_CASE("soft-state expiry") {
    const PlanContext context = default_context();
    ViewTable table;
    handle_join(table, {MessageType::join, 1, {{3, 0, 0}}}, 0.0, context);
    handle_join(table, {MessageType::join, 2, {{3, 0, 0}}}, 50.0, context);
    handle_join(table, {MessageType::join, 1, {{5, 0, 0}}}, 0.0, context);

    SUBCASE("fresh subscribers are kept") {
        const auto outcome = expire_soft_state(table, 30.0, 20.0, 3);
        CHECK(outcome.expired_subscriptions == 0);
        CHECK(outcome.withdrawn.empty());
    }
    SUBCASE("stale subscriber on a shared instance") {
        const auto outcome = expire_soft_state(table, 70.0, 20.0, 3);  // deadline 60
        CHECK(outcome.expired_subscriptions == 2);  // client 1 on both instances
        CHECK(outcome.withdrawn == std::vector<InstanceKey>{{5, 0, 0}});
        CHECK(table.find({3, 0, 0})->subscribers.count(2) == 1);
        CHECK(table.find({3, 0, 0})->subscribers.count(1) == 0);
    }
    SUBCASE("parameter validation") {
        CHECK_THROWS_AS(expire_soft_state(table, 0.0, 0.0, 3), std::domain_error);
        CHECK_THROWS_AS(expire_soft_state(table, 0.0, 20.0, 0), std::domain_error);
    }
}

TEST_CASE("view selection: cold start creates the desired view") {
    const PlanContext context = default_context();
    ViewTable table;
    Client client = make_client(1, 5, 0.35, 4, 3);
    const LossModel model = uniform_loss(client, 0.3);

    const auto selection = select_views(client, 5, table, 16, 3, model, context);
    CHECK(selection.feasible);
    CHECK(selection.direct_existing.empty());
    CHECK(selection.protection.empty());
    REQUIRE(selection.direct_new.size() == 1);
    // uniform loss: ties break towards the highest rate, lowest channel
    CHECK(selection.direct_new[0] == InstanceKey{5, 0, 2});
    CHECK(selection.predicted_failure == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("view selection: existing neighbors can protect without new transmissions") {
    const PlanContext context = default_context();
    ViewTable table;
    handle_join(table, {MessageType::join, 50, {{4, 0, 0}}}, 0.0, context);
    handle_join(table, {MessageType::join, 51, {{6, 1, 0}}}, 0.0, context);

    Client client = make_client(1, 5, 0.1, 4, 3);
    const LossModel model = uniform_loss(client, 0.05);
    // failure with the pair only: 1 - (1 - 0.05)^2 = 0.0975 <= 0.1
    const auto selection = select_views(client, 5, table, 16, 3, model, context);
    CHECK(selection.feasible);
    CHECK(selection.direct_new.empty());
    CHECK(selection.direct_existing.empty());
    REQUIRE(selection.protection.size() == 2);
    CHECK(selection.protection[0] == InstanceKey{4, 0, 0});
    CHECK(selection.protection[1] == InstanceKey{6, 1, 0});
    CHECK(selection.predicted_failure == doctest::Approx(0.0975).epsilon(1e-12));
}

TEST_CASE("view selection: protection pair kept only when it meets the threshold") {
    const PlanContext context = default_context();
    Client client = make_client(1, 5, 0.05, 4, 1);

    SUBCASE("pair suffices") {
        ViewTable table;
        handle_join(table, {MessageType::join, 50, {{5, 0, 0}}}, 0.0, context);
        handle_join(table, {MessageType::join, 51, {{4, 1, 0}}}, 0.0, context);
        handle_join(table, {MessageType::join, 52, {{7, 2, 0}}}, 0.0, context);
        LossModel model = LossModel::table();
        model.set_loss(1, 0, 0, 0.3);   // desired instance
        model.set_loss(1, 1, 0, 0.05);  // left neighbor
        model.set_loss(1, 2, 0, 0.1);   // right neighbor, distance 2
        model.set_loss(1, 3, 0, 0.3);   // free channel
        // failure {5,4,7}: 0.3 * 0.95 * 0.1 + 0.3 * 0.05 = 0.0435 <= 0.05
        const auto selection = select_views(client, 5, table, 16, 3, model, context);
        CHECK(selection.feasible);
        CHECK(selection.direct_existing == std::vector<InstanceKey>{{5, 0, 0}});
        CHECK(selection.direct_new.empty());
        REQUIRE(selection.protection.size() == 2);
        CHECK(selection.predicted_failure == doctest::Approx(0.0435).epsilon(1e-12));
    }
    SUBCASE("pair insufficient: a new transmission replaces it") {
        ViewTable table;
        handle_join(table, {MessageType::join, 50, {{5, 0, 0}}}, 0.0, context);
        handle_join(table, {MessageType::join, 51, {{4, 1, 0}}}, 0.0, context);
        handle_join(table, {MessageType::join, 52, {{7, 2, 0}}}, 0.0, context);
        LossModel model = LossModel::table();
        model.set_loss(1, 0, 0, 0.3);
        model.set_loss(1, 1, 0, 0.3);
        model.set_loss(1, 2, 0, 0.3);
        model.set_loss(1, 3, 0, 0.1);  // free channel is clean
        // best pair leaves 0.3*(0.7*0.3) + 0.3*0.3 = 0.153 > 0.05, so the
        // client asks for a second desired-view instance; 0.3*0.1 = 0.03
        // meets the threshold and the pair is pruned away.
        const auto selection = select_views(client, 5, table, 16, 3, model, context);
        CHECK(selection.feasible);
        CHECK(selection.direct_existing == std::vector<InstanceKey>{{5, 0, 0}});
        CHECK(selection.direct_new == std::vector<InstanceKey>{{5, 3, 0}});
        CHECK(selection.protection.empty());
        CHECK(selection.predicted_failure == doctest::Approx(0.03).epsilon(1e-12));
    }
}

TEST_CASE("view selection: infeasible when capacity is exhausted") {
    PlanContext context = default_context();
    context.channel_count = 1;
    context.rates = RateSet({6.5});
    ViewTable table;
    // fill the single channel completely
    for (ViewId v = 10; v < 18; ++v) {
        handle_join(table, {MessageType::join, 50, {{v, 0, 0}}}, 0.0, context);
    }
    Client client = make_client(1, 5, 0.05, 1, 1);
    const LossModel model = uniform_loss(client, 0.4);
    const auto selection = select_views(client, 5, table, 30, 3, model, context);
    CHECK_FALSE(selection.feasible);
    CHECK(selection.direct_new.empty());
    CHECK(selection.predicted_failure > client.threshold);
}

TEST_CASE("reorganization after a neighbor leaves") {
    const PlanContext context = default_context();
    Client client = make_client(1, 5, 0.1, 4, 1);

    SUBCASE("drop the protection view once the desired view suffices") {
        ViewTable table;
        handle_join(table, {MessageType::join, 1, {{5, 0, 0}, {5, 1, 0}, {4, 2, 0}}}, 0.0,
                    context);
        LossModel model = LossModel::table();
        model.set_loss(1, 0, 0, 0.3);
        model.set_loss(1, 1, 0, 0.3);   // two direct instances: 0.09 <= 0.1
        model.set_loss(1, 2, 0, 0.3);
        model.set_loss(1, 3, 0, 0.3);
        const std::vector<InstanceKey> current = {{5, 0, 0}, {5, 1, 0}, {4, 2, 0}};
        const auto result = reorganize(client, 5, 4, current, table, 16, 3, model);
        REQUIRE(result.leave.has_value());
        CHECK_FALSE(result.join.has_value());
        CHECK(result.leave->views == std::vector<InstanceKey>{{4, 2, 0}});
        CHECK(result.predicted_failure == doctest::Approx(0.09).epsilon(1e-12));
    }
    SUBCASE("swap to an equivalent transmitted view") {
        client.threshold = 0.15;
        ViewTable table;
        handle_join(table, {MessageType::join, 1, {{5, 0, 0}, {4, 1, 0}, {6, 2, 0}}}, 0.0,
                    context);
        handle_join(table, {MessageType::join, 9, {{3, 3, 0}}}, 0.0, context);
        LossModel model = uniform_loss(client, 0.25);
        const std::vector<InstanceKey> current = {{5, 0, 0}, {4, 1, 0}, {6, 2, 0}};
        // dropping view 4 leaves failure above threshold; view 3 pairs with 6
        // at the same loss, so the swap keeps the failure probability equal
        const double before = subscription_failure(client, 5, current, model, 16, 3);
        const auto result = reorganize(client, 5, 4, current, table, 16, 3, model);
        REQUIRE(result.leave.has_value());
        REQUIRE(result.join.has_value());
        CHECK(result.join->views == std::vector<InstanceKey>{{3, 3, 0}});
        CHECK(result.predicted_failure <= client.threshold + 1e-15);
        CHECK(result.predicted_failure == doctest::Approx(before).epsilon(1e-9));
    }
    SUBCASE("nothing changes when no alternative works") {
        ViewTable table;
        handle_join(table, {MessageType::join, 1, {{5, 0, 0}, {4, 1, 0}, {6, 2, 0}}}, 0.0,
                    context);
        LossModel model = uniform_loss(client, 0.25);
        const std::vector<InstanceKey> current = {{5, 0, 0}, {4, 1, 0}, {6, 2, 0}};
        const auto result = reorganize(client, 5, 4, current, table, 16, 3, model);
        CHECK_FALSE(result.leave.has_value());
        CHECK_FALSE(result.join.has_value());
    }
}

TEST_CASE("reorganization swap preserves failure when the loss profile matches") {
    // spelled out in the swap subcase above; here the paired plans are checked
    // directly for the symmetry the swap relies on
    Client client = make_client(1, 5, 0.1, 4, 1);
    const LossModel model = uniform_loss(client, 0.25);
    const std::vector<InstanceKey> with_4 = {{5, 0, 0}, {4, 1, 0}, {6, 2, 0}};
    const std::vector<InstanceKey> with_3 = {{5, 0, 0}, {3, 3, 0}, {6, 2, 0}};
    CHECK(subscription_failure(client, 5, with_4, model, 16, 3) ==
          doctest::Approx(subscription_failure(client, 5, with_3, model, 16, 3))
              .epsilon(1e-12));
}

TEST_CASE("table invariants hold under randomized join/leave/expiry traffic") {
    const PlanContext context = default_context();
    Rng rng(0xFEED);
    ViewTable table;
    struct Tracked {
        Client client;
        std::vector<InstanceKey> subscription;
        bool feasible = false;
    };
    std::vector<Tracked> actives;
    LossModel model = LossModel::table();
    double now = 0.0;
    std::uint32_t next_id = 1;
    std::uint64_t last_version = table.version();

    for (int step = 0; step < 600; ++step) {
        now += 1.0;
        const double dice = rng.uniform();
        if (dice < 0.5 || actives.empty()) {
            Tracked t;
            t.client = make_client(next_id++, static_cast<ViewId>(rng.uniform_int(1, 8)),
                                   0.02 + 0.3 * rng.uniform(), 4, 3);
            for (ChannelId c : t.client.channels) {
                const double p = 0.1 + 0.4 * rng.uniform();
                for (RateId r : t.client.rates) model.set_loss(t.client.id, c, r, p);
            }
            const auto selection = select_views(t.client, t.client.desired_views[0], table, 8,
                                                3, model, context);
            t.feasible = selection.feasible;
            const auto payload = selection.subscription();
            if (!payload.empty()) {
                const auto outcome = handle_join(
                    table, {MessageType::join, t.client.id, payload}, now, context);
                t.subscription = outcome.joined;
                t.subscription.insert(t.subscription.end(), outcome.created.begin(),
                                      outcome.created.end());
            }
            actives.push_back(std::move(t));
        } else if (dice < 0.8) {
            const auto index =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(actives.size()) - 1));
            Tracked t = actives[index];
            actives.erase(actives.begin() + static_cast<long>(index));
            if (!t.subscription.empty()) {
                const auto outcome = handle_leave(
                    table, {MessageType::leave, t.client.id, t.subscription}, now);
                for (const auto& notice : outcome.notices) {
                    for (Tracked& other : actives) {
                        if (other.client.id != notice.client) continue;
                        const ViewId desired = other.client.desired_views[0];
                        if (notice.instance.view == desired) continue;
                        const auto reorg =
                            reorganize(other.client, desired, notice.instance.view,
                                       other.subscription, table, 8, 3, model);
                        if (reorg.leave) {
                            handle_leave(table, *reorg.leave, now);
                            for (const auto& key : reorg.leave->views) {
                                other.subscription.erase(
                                    std::remove(other.subscription.begin(),
                                                other.subscription.end(), key),
                                    other.subscription.end());
                            }
                        }
                        if (reorg.join) {
                            const auto joined = handle_join(table, *reorg.join, now, context);
                            other.subscription.insert(other.subscription.end(),
                                                      joined.joined.begin(),
                                                      joined.joined.end());
                        }
                    }
                }
            }
        } else {
            // refresh everyone, then expire; nobody should be dropped
            for (Tracked& t : actives) {
                if (t.subscription.empty()) continue;
                handle_join(table, {MessageType::join, t.client.id, t.subscription}, now,
                            context);
            }
            expire_soft_state(table, now, 20.0, 3);
        }

        CHECK(table.version() >= last_version);
        last_version = table.version();
        for (const auto& [key, instance] : table.entries()) {
            CHECK_FALSE(instance.subscribers.empty());
        }
        CHECK(validate_plan(table.implied_plan(), context.frame_interval_s,
                            context.video_rate_bps, context.rates)
                  .feasible);
        for (const Tracked& t : actives) {
            if (!t.feasible) continue;
            const double failure =
                subscription_failure(t.client, t.client.desired_views[0], t.subscription,
                                     model, 8, 3);
            CHECK(failure <= t.client.threshold + 1e-12);
        }
    }
}
