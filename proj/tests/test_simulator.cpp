#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mvmc/report.hpp"
#include "mvmc/rng.hpp"
#include "mvmc/simulator.hpp"

using namespace mvmc;
using namespace mvmc::sim;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig config;
    config.views = 8;
    config.channels = 6;
    config.population_target = 10;
    config.frames = 60;
    config.seed = 7;
    return config;
}

}  // namespace

TEST_CASE("channel time arithmetic") {
    const RateSet rates({6.5, 13.0});
    TransmissionPlan plan;
    CHECK(channel_time_ms(plan, 800e3, 0.0333, rates) == 0.0);

    plan.add(1, 0, 0, 1);
    const double one = channel_time_ms(plan, 800e3, 0.0333, rates);
    CHECK(one == doctest::Approx(800e3 * 0.0333 / 6.5e6 * 1e3).epsilon(1e-12));

    plan.add(1, 1, 0, 1);  // same view again on another channel: exactly double
    CHECK(channel_time_ms(plan, 800e3, 0.0333, rates) == doctest::Approx(2 * one).epsilon(1e-12));
}

TEST_CASE("baseline repeats until every subscriber meets its threshold") {
    protocol::PlanContext context;
    context.rates = RateSet({6.5, 13.0});
    context.channel_count = 3;

    LossModel model = LossModel::table();
    Client a;
    a.id = 1;
    a.channels = {0, 1, 2};
    a.rates = {0, 1};
    a.desired_views = {4};
    a.threshold = 0.1;
    for (ChannelId c : a.channels) {
        for (RateId r : a.rates) model.set_loss(a.id, c, r, 0.3);
    }

    SUBCASE("single client: smallest repeat count under the threshold") {
        const auto result = baseline_plan({a}, 8, model, context, 8, 0);
        REQUIRE(result.assignment.count(4) == 1);
        const PlanKey where = result.assignment.at(4);
        CHECK(where.rate == 1);  // uniform loss: highest rate wins
        CHECK(result.plan.count(4, where.channel, where.rate) == 2);  // 0.09 <= 0.1
        CHECK(result.queued.empty());
    }
    SUBCASE("two clients: the strictest subscriber sets the repeat count") {
        Client b = a;
        b.id = 2;
        b.threshold = 0.01;
        for (ChannelId c : b.channels) {
            for (RateId r : b.rates) model.set_loss(b.id, c, r, 0.3);
        }
        a.threshold = 0.5;
        const auto result = baseline_plan({a, b}, 8, model, context, 8, 0);
        const PlanKey where = result.assignment.at(4);
        // 0.3^4 = 0.0081 <= 0.01 is the first count satisfying both
        CHECK(result.plan.count(4, where.channel, where.rate) == 4);
    }
    SUBCASE("no clients, no plan") {
        const auto result = baseline_plan({}, 8, model, context, 8, 0);
        CHECK(result.plan.empty());
    }
}

TEST_CASE("preference sampling distributions") {
    SUBCASE("uniform frequencies") {
        Rng rng(1);
        const int draws = 100000;
        std::vector<int> counts(17, 0);
        for (int i = 0; i < draws; ++i) {
            ++counts[static_cast<std::size_t>(sample_preference(Preference::uniform, 16, rng))];
        }
        const double expected = draws / 16.0;
        const double sigma = std::sqrt(draws * (1.0 / 16) * (15.0 / 16));
        for (int v = 1; v <= 16; ++v) {
            CHECK(std::abs(counts[static_cast<std::size_t>(v)] - expected) <= 4.0 * sigma);
        }
    }
    SUBCASE("zipf rank one probability for two views") {
        Rng rng(2);
        const int draws = 100000;
        int ones = 0;
        for (int i = 0; i < draws; ++i) {
            if (sample_preference(Preference::zipf, 2, rng) == 1) ++ones;
        }
        const double expected = 2.0 / 3.0;
        const double sigma = std::sqrt(expected * (1 - expected) / draws);
        CHECK(std::abs(ones / static_cast<double>(draws) - expected) <= 4.0 * sigma);
    }
    SUBCASE("normal preference peaks at the central view") {
        Rng rng(3);
        const int draws = 100000;
        std::vector<int> counts(17, 0);
        for (int i = 0; i < draws; ++i) {
            ++counts[static_cast<std::size_t>(sample_preference(Preference::normal, 16, rng))];
        }
        const auto mode = std::max_element(counts.begin() + 1, counts.end()) - counts.begin();
        CHECK(mode == 8);
    }
}

TEST_CASE("population dynamics under degenerate probabilities") {
    SUBCASE("no events: population constant") {
        ScenarioConfig config = small_scenario();
        config.arrival_prob = 0.0;
        config.departure_prob = 0.0;
        config.view_change_prob = 0.0;
        const auto result = run_scenario(config);
        for (const auto& record : result.frames) {
            CHECK(record.active_clients == 10);
        }
    }
    SUBCASE("pure arrivals: one client per frame") {
        ScenarioConfig config = small_scenario();
        config.population_target = 0;
        config.arrival_prob = 1.0;
        config.departure_prob = 0.0;
        config.view_change_prob = 0.0;
        config.frames = 20;
        const auto result = run_scenario(config);
        CHECK(result.frames.back().active_clients == 20);
    }
    SUBCASE("balanced arrivals and departures drift nowhere on average") {
        ScenarioConfig config = small_scenario();
        config.population_target = 20;
        config.arrival_prob = 0.25;
        config.departure_prob = 0.25;
        config.view_change_prob = 0.0;
        config.frames = 200;
        double drift = 0.0;
        const int seeds = 12;
        for (int seed = 1; seed <= seeds; ++seed) {
            config.seed = static_cast<std::uint64_t>(seed);
            const auto result = run_scenario(config);
            drift += result.frames.back().active_clients - 20.0;
        }
        drift /= seeds;
        // random walk: per-seed std dev about sqrt(0.5 * frames) ~= 7
        CHECK(std::abs(drift) <= 4.0 * 7.0 / std::sqrt(static_cast<double>(seeds)));
    }
}

TEST_CASE("zero-frame run produces only the initial snapshot") {
    ScenarioConfig config = small_scenario();
    config.frames = 0;
    const auto result = run_scenario(config);
    CHECK(result.frames.size() == 1);
    CHECK(result.frames[0].active_clients == 10);
    CHECK(result.frames[0].mvgmp_channel_time_ms > 0.0);
}

TEST_CASE("per-frame channel time never exceeds the baseline under shared events") {
    ScenarioConfig config = small_scenario();
    config.frames = 150;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        config.seed = seed;
        const auto result = run_scenario(config);
        CHECK(result.summary.mvgmp_ct_exceeding_frames == 0);
        for (const auto& record : result.frames) {
            if (record.baseline_queued == 0) {
                CHECK(record.mvgmp_channel_time_ms <=
                      record.baseline_channel_time_ms + 1e-9);
            }
        }
    }
}

TEST_CASE("every feasible client stays under its threshold each frame") {
    ScenarioConfig config = small_scenario();
    config.frames = 100;
    const auto result = run_scenario(config);
    for (const auto& record : result.frames) {
        if (record.mvgmp_infeasible == 0) {
            CHECK(record.mvgmp_max_failure <= config.threshold_max + 1e-12);
        }
    }
}

TEST_CASE("identical config and seed give identical serialized output") {
    ScenarioConfig config = small_scenario();
    config.frames = 80;
    const auto a = run_scenario(config);
    const auto b = run_scenario(config);
    std::ostringstream frames_a, frames_b, clients_a, clients_b;
    cli::write_frames_csv(frames_a, a, 1234, config.seed);
    cli::write_frames_csv(frames_b, b, 1234, config.seed);
    cli::write_clients_csv(clients_a, a, 1234, config.seed);
    cli::write_clients_csv(clients_b, b, 1234, config.seed);
    CHECK(frames_a.str() == frames_b.str());
    CHECK(clients_a.str() == clients_b.str());
}

TEST_CASE("impossible capacity aborts during initial population") {
    ScenarioConfig config;
    config.views = 16;
    config.channels = 1;
    config.rates_mbps = {6.5};
    config.population_target = 40;
    config.loss_min = 0.4;
    config.loss_max = 0.4;
    config.threshold_min = 0.0005;
    config.threshold_max = 0.001;
    config.frames = 1;
    CHECK_THROWS_AS(run_scenario(config), ConfigError);
}
