#include "mvmc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "mvmc/analysis.hpp"
#include "mvmc/oracle.hpp"

namespace mvmc::sim {

void check_scenario(const ScenarioConfig& c) {
    if (c.views < 2) throw ConfigError("scenario needs at least 2 views");
    if (c.dibr_range < 1) throw ConfigError("quality range must be at least 1");
    if (c.channels < 1 || c.channels > 255) throw ConfigError("channel count out of range");
    if (c.rates_mbps.empty()) throw ConfigError("rate set is empty");
    if (!(c.video_rate_bps > 0) || !(c.frame_interval_s > 0))
        throw ConfigError("video rate and frame interval must be positive");
    for (double p : {c.arrival_prob, c.departure_prob, c.view_change_prob}) {
        if (p < 0.0 || p > 1.0) throw ConfigError("event probability out of [0, 1]");
    }
    if (c.population_target < 0) throw ConfigError("population target must be non-negative");
    if (!(c.threshold_max > 0.0) || c.threshold_min < 0.0 ||
        c.threshold_min >= c.threshold_max)
        throw ConfigError("threshold range must satisfy 0 <= min < max");
    if (c.loss_kind == LossKind::client_table) {
        if (c.loss_min < 0 || c.loss_max > 1 || c.loss_min > c.loss_max)
            throw ConfigError("loss range must lie in [0, 1]");
    } else if (c.loss_base_per_rate.size() != c.rates_mbps.size()) {
        throw ConfigError("distance loss model needs one base loss per rate");
    }
    if (c.frames < 0) throw ConfigError("frame count must be non-negative");
    if (!(c.refresh_interval_frames > 0) || c.miss_limit < 1)
        throw ConfigError("soft-state parameters out of range");
    if (c.baseline_repeat_cap < 1) throw ConfigError("baseline repeat cap must be positive");
}

double channel_time_ms(const TransmissionPlan& plan, double video_rate_bps,
                       double frame_interval_s, const RateSet& rates) {
    double total_s = 0.0;
    for (const auto& [channel, airtime] :
         per_channel_airtime_s(plan, frame_interval_s, video_rate_bps, rates)) {
        total_s += airtime;
    }
    return total_s * 1e3;
}

ViewId sample_preference(Preference preference, int num_views, Rng& rng) {
    check_view_count(num_views);
    switch (preference) {
        case Preference::uniform:
            return static_cast<ViewId>(rng.uniform_int(1, num_views));
        case Preference::zipf: {
            // rank k picked with probability (1/k) / H_M; ranks map to views
            // by the identity permutation
            double h = 0.0;
            for (int k = 1; k <= num_views; ++k) h += 1.0 / k;
            double u = rng.uniform() * h;
            for (int k = 1; k <= num_views; ++k) {
                u -= 1.0 / k;
                if (u < 0.0) return k;
            }
            return num_views;
        }
        case Preference::normal: {
            // discretized density, mean M/2, variance 1, renormalized
            const double mean = num_views / 2.0;
            double z = 0.0;
            for (int v = 1; v <= num_views; ++v) z += std::exp(-0.5 * (v - mean) * (v - mean));
            double u = rng.uniform() * z;
            for (int v = 1; v <= num_views; ++v) {
                u -= std::exp(-0.5 * (v - mean) * (v - mean));
                if (u < 0.0) return v;
            }
            return num_views;
        }
    }
    throw std::logic_error("unknown preference distribution");
}

namespace {

// Smallest n >= 1 with p^n <= threshold; cap+1 when unreachable within cap.
int min_repeats(double p, double threshold, int cap) {
    if (p <= threshold) return 1;
    if (p >= 1.0) return cap + 1;
    int n = 1;
    double acc = p;
    while (acc > threshold && n <= cap) {
        acc *= p;
        ++n;
    }
    return n;
}

}  // namespace

BaselineResult baseline_plan(const std::vector<Client>& clients, int num_views,
                             const LossModel& model, const protocol::PlanContext& context,
                             int repeat_cap, int rotation) {
    BaselineResult result;
    std::map<ViewId, std::vector<const Client*>> subscribers;
    for (const Client& client : clients) {
        for (ViewId k : client.desired_views) {
            if (k < 1 || k > num_views) throw std::domain_error("desired view out of range");
            subscribers[k].push_back(&client);
        }
    }
    if (subscribers.empty()) return result;

    std::vector<double> channel_airtime(static_cast<std::size_t>(context.channel_count), 0.0);
    const double bits_per_frame = context.video_rate_bps * context.frame_interval_s;

    std::vector<ViewId> order;
    for (const auto& [view, subs] : subscribers) order.push_back(view);
    if (rotation > 0 && !order.empty()) {
        std::rotate(order.begin(),
                    order.begin() + static_cast<long>(rotation % static_cast<int>(order.size())),
                    order.end());
    }

    for (ViewId view : order) {
        const auto& subs = subscribers[view];
        // Least-loaded channel, then the highest rate whose repeat count
        // stays under the cap for every subscriber.
        ChannelId channel = 0;
        for (ChannelId c = 1; c < context.channel_count; ++c) {
            if (channel_airtime[static_cast<std::size_t>(c)] <
                channel_airtime[static_cast<std::size_t>(channel)])
                channel = c;
        }
        std::vector<RateId> by_rate(static_cast<std::size_t>(context.rates.size()));
        for (std::size_t i = 0; i < by_rate.size(); ++i) by_rate[i] = static_cast<RateId>(i);
        std::sort(by_rate.begin(), by_rate.end(), [&](RateId a, RateId b) {
            return context.rates.mbps(a) > context.rates.mbps(b);
        });
        std::optional<RateId> pick;
        int repeats = 0;
        for (RateId r : by_rate) {
            int needed = 1;
            bool receivable = true;
            for (const Client* client : subs) {
                if (!client->can_receive(channel, r)) {
                    receivable = false;
                    break;
                }
                needed = std::max(
                    needed, min_repeats(model.loss(*client, channel, r), client->threshold,
                                        repeat_cap));
            }
            if (!receivable) continue;
            if (needed <= repeat_cap) {
                pick = r;
                repeats = needed;
                break;
            }
        }
        if (!pick) {
            // No rate satisfies everyone within the cap: lowest rate, capped.
            pick = by_rate.back();
            repeats = repeat_cap;
            ++result.cap_hits;
        }
        const double airtime = repeats * bits_per_frame / context.rates.bits_per_second(*pick);
        if (channel_airtime[static_cast<std::size_t>(channel)] + airtime >
            context.frame_interval_s + 1e-12) {
            result.queued.push_back(view);
            continue;
        }
        channel_airtime[static_cast<std::size_t>(channel)] += airtime;
        result.plan.add(view, channel, *pick, repeats);
        result.assignment[view] = PlanKey{view, channel, *pick};
    }
    return result;
}

namespace {

struct ActiveClient {
    Client client;
    std::vector<protocol::InstanceKey> subscription;
    long last_refresh_frame = 0;
    bool feasible = true;
    ClientOutcome outcome;
};

struct Engine {
    const ScenarioConfig& config;
    RateSet rates;
    protocol::PlanContext context;
    LossModel model;
    protocol::ViewTable table;
    std::vector<ActiveClient> clients;
    std::vector<ClientOutcome> departed;
    Rng events;
    Rng reception;
    std::uint32_t next_client_id = 1;
    int baseline_rotation = 0;
    Summary summary;

    explicit Engine(const ScenarioConfig& cfg)
        : config(cfg),
          rates(cfg.rates_mbps),
          context{cfg.frame_interval_s, cfg.video_rate_bps, rates, cfg.channels},
          model(cfg.loss_kind == LossKind::client_table
                    ? LossModel::table()
                    : LossModel::distance(cfg.loss_base_per_rate, cfg.loss_reference_m,
                                          cfg.loss_exponent)),
          events(Rng(cfg.seed).split(1)),
          reception(Rng(cfg.seed).split(2)) {
        summary.seed = cfg.seed;
    }

    std::vector<int> sample_subset(int universe, int take) {
        std::vector<int> all(static_cast<std::size_t>(universe));
        for (int i = 0; i < universe; ++i) all[static_cast<std::size_t>(i)] = i;
        if (take <= 0 || take >= universe) return all;
        for (int i = 0; i < take; ++i) {
            const auto j = events.uniform_int(i, universe - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        }
        all.resize(static_cast<std::size_t>(take));
        std::sort(all.begin(), all.end());
        return all;
    }

    Client spawn_client() {
        Client c;
        c.id = next_client_id++;
        const double angle = events.uniform() * 2.0 * std::numbers::pi;
        const double radius = std::sqrt(events.uniform()) * config.cell_radius_m;
        c.x = radius * std::cos(angle);
        c.y = radius * std::sin(angle);
        c.channels = sample_subset(config.channels, config.channels_per_client);
        c.rates = sample_subset(rates.size(), config.rates_per_client);
        c.desired_views = {sample_preference(config.preference, config.views, events)};
        c.threshold = config.threshold_max -
                      (config.threshold_max - config.threshold_min) * events.uniform();
        c.max_protection_views = config.max_protection_views;
        if (config.loss_kind == LossKind::client_table) {
            for (ChannelId ch : c.channels) {
                const double p =
                    config.loss_min + (config.loss_max - config.loss_min) * events.uniform();
                for (RateId r : c.rates) model.set_loss(c.id, ch, r, p);
            }
        }
        return c;
    }

    ActiveClient* find_client(std::uint32_t id) {
        for (ActiveClient& c : clients) {
            if (c.client.id == id) return &c;
        }
        return nullptr;
    }

    void join(ActiveClient& entry, long frame) {
        const ViewId desired = entry.client.desired_views.front();
        const auto selection = protocol::select_views(entry.client, desired, table,
                                                      config.views, config.dibr_range, model,
                                                      context);
        entry.feasible = selection.feasible;
        if (!selection.feasible) {
            ++summary.infeasible_events;
            entry.outcome.ever_infeasible = true;
        }
        const auto payload = selection.subscription();
        entry.subscription.clear();
        if (!payload.empty()) {
            protocol::MvgmpMessage msg{protocol::MessageType::join, entry.client.id, payload};
            const auto outcome = protocol::handle_join(table, msg, static_cast<double>(frame),
                                                       context);
            entry.subscription = outcome.joined;
            entry.subscription.insert(entry.subscription.end(), outcome.created.begin(),
                                      outcome.created.end());
            std::sort(entry.subscription.begin(), entry.subscription.end());
        }
        entry.last_refresh_frame = frame;
    }

    // A leave can free views other subscribers only kept for protection; give
    // each notified client one chance to shed or swap them.
    void process_notices(const std::vector<protocol::LeaveNotice>& notices, long frame) {
        std::vector<std::pair<std::uint32_t, ViewId>> todo;
        for (const auto& notice : notices) todo.emplace_back(notice.client, notice.instance.view);
        std::sort(todo.begin(), todo.end());
        todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
        for (const auto& [client_id, affected_view] : todo) {
            ActiveClient* entry = find_client(client_id);
            if (entry == nullptr) continue;
            const ViewId desired = entry->client.desired_views.front();
            if (affected_view == desired) continue;
            const auto reorg =
                protocol::reorganize(entry->client, desired, affected_view,
                                     entry->subscription, table, config.views,
                                     config.dibr_range, model);
            if (reorg.leave) {
                protocol::handle_leave(table, *reorg.leave, static_cast<double>(frame));
                for (const auto& key : reorg.leave->views) {
                    entry->subscription.erase(std::remove(entry->subscription.begin(),
                                                          entry->subscription.end(), key),
                                              entry->subscription.end());
                }
            }
            if (reorg.join) {
                const auto outcome = protocol::handle_join(table, *reorg.join,
                                                           static_cast<double>(frame), context);
                entry->subscription.insert(entry->subscription.end(), outcome.joined.begin(),
                                           outcome.joined.end());
                std::sort(entry->subscription.begin(), entry->subscription.end());
            }
        }
    }

    void leave(ActiveClient& entry, long frame) {
        if (entry.subscription.empty()) return;
        protocol::MvgmpMessage msg{protocol::MessageType::leave, entry.client.id,
                                   entry.subscription};
        const auto outcome = protocol::handle_leave(table, msg, static_cast<double>(frame));
        entry.subscription.clear();
        process_notices(outcome.notices, frame);
    }

    void depart(std::size_t index, long frame) {
        leave(clients[index], frame);
        clients[index].outcome.last_desired = clients[index].client.desired_views.front();
        clients[index].outcome.threshold = clients[index].client.threshold;
        departed.push_back(clients[index].outcome);
        clients.erase(clients.begin() + static_cast<long>(index));
    }

    void arrive(long frame) {
        ActiveClient entry;
        entry.client = spawn_client();
        entry.outcome.id = entry.client.id;
        join(entry, frame);
        clients.push_back(std::move(entry));
    }

    void change_view(ActiveClient& entry, long frame) {
        leave(entry, frame);
        entry.client.desired_views = {
            sample_preference(config.preference, config.views, events)};
        join(entry, frame);
    }

    void refresh_and_expire(long frame) {
        for (ActiveClient& entry : clients) {
            if (entry.subscription.empty()) continue;
            if (frame - entry.last_refresh_frame >= config.refresh_interval_frames) {
                protocol::MvgmpMessage msg{protocol::MessageType::join, entry.client.id,
                                           entry.subscription};
                protocol::handle_join(table, msg, static_cast<double>(frame), context);
                entry.last_refresh_frame = frame;
            }
        }
        protocol::expire_soft_state(table, static_cast<double>(frame),
                                    config.refresh_interval_frames, config.miss_limit);
    }

    MetricsRecord capture(long frame) {
        MetricsRecord record;
        record.frame = frame;
        record.active_clients = static_cast<int>(clients.size());

        const TransmissionPlan plan = table.implied_plan();
        record.mvgmp_channel_time_ms =
            channel_time_ms(plan, config.video_rate_bps, config.frame_interval_s, rates);
        record.mvgmp_instances = plan.total_transmissions();

        double failure_sum = 0.0;
        for (ActiveClient& entry : clients) {
            const ViewId desired = entry.client.desired_views.front();
            const double failure = protocol::subscription_failure(
                entry.client, desired, entry.subscription, model, config.views,
                config.dibr_range);
            failure_sum += failure;
            record.mvgmp_max_failure = std::max(record.mvgmp_max_failure, failure);
            if (!entry.feasible) ++record.mvgmp_infeasible;
            entry.outcome.frames_active += 1;
            entry.outcome.predicted_failure_sum += failure;
            entry.outcome.predicted_variance_sum += failure * (1.0 - failure);

            TransmissionPlan own;
            for (const auto& key : entry.subscription) own.add(key.view, key.channel, key.rate, 1);
            const auto received =
                oracle::simulate_reception(own, entry.client, model, reception);
            const auto usable =
                oracle::recoverable_views(received, config.views, config.dibr_range);
            if (!std::binary_search(usable.begin(), usable.end(), desired))
                entry.outcome.failures_observed += 1;
        }
        if (!clients.empty()) {
            record.mvgmp_mean_failure = failure_sum / static_cast<double>(clients.size());
            record.mvgmp_mean_alpha = 1.0 - record.mvgmp_mean_failure;
        }

        std::vector<Client> population;
        population.reserve(clients.size());
        for (const ActiveClient& entry : clients) population.push_back(entry.client);
        const auto baseline = baseline_plan(population, config.views, model, context,
                                            config.baseline_repeat_cap, baseline_rotation);
        baseline_rotation = baseline.queued.empty()
                                ? 0
                                : static_cast<int>(baseline.queued.front() - 1);
        record.baseline_channel_time_ms = channel_time_ms(
            baseline.plan, config.video_rate_bps, config.frame_interval_s, rates);
        record.baseline_instances = baseline.plan.total_transmissions();
        record.baseline_queued = static_cast<int>(baseline.queued.size());
        summary.baseline_cap_hits += baseline.cap_hits;
        double loss_sum = 0.0;
        for (const Client& client : population) {
            const ViewId desired = client.desired_views.front();
            auto it = baseline.assignment.find(desired);
            if (it == baseline.assignment.end()) {
                loss_sum += 1.0;  // queued this frame: nothing received
                continue;
            }
            const PlanKey& where = it->second;
            const int n = baseline.plan.count(where.view, where.channel, where.rate);
            double loss = 1.0;
            if (client.can_receive(where.channel, where.rate)) {
                const double p = model.loss(client, where.channel, where.rate);
                loss = std::pow(p, n);
            }
            loss_sum += loss;
        }
        if (!population.empty()) {
            record.baseline_mean_loss = loss_sum / static_cast<double>(population.size());
            record.baseline_mean_alpha = 1.0 - record.baseline_mean_loss;
        }
        return record;
    }
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
    check_scenario(config);
    Engine engine(config);
    ScenarioResult result;

    for (int i = 0; i < config.population_target; ++i) {
        engine.arrive(0);
        if (!engine.clients.back().feasible) {
            throw ConfigError("scenario infeasible during initial population: client " +
                              std::to_string(engine.clients.back().client.id) +
                              " cannot meet its threshold");
        }
    }
    result.frames.push_back(engine.capture(0));

    for (long frame = 1; frame <= config.frames; ++frame) {
        if (engine.events.bernoulli(config.arrival_prob)) engine.arrive(frame);
        if (!engine.clients.empty() && engine.events.bernoulli(config.departure_prob)) {
            const auto index = static_cast<std::size_t>(
                engine.events.uniform_int(0, static_cast<std::int64_t>(engine.clients.size()) - 1));
            engine.depart(index, frame);
        }
        if (!engine.clients.empty() && engine.events.bernoulli(config.view_change_prob)) {
            const auto index = static_cast<std::size_t>(
                engine.events.uniform_int(0, static_cast<std::int64_t>(engine.clients.size()) - 1));
            engine.change_view(engine.clients[index], frame);
        }
        engine.refresh_and_expire(frame);
        result.frames.push_back(engine.capture(frame));
    }

    Summary& s = engine.summary;
    s.frames = config.frames;
    const std::size_t skip = result.frames.size() > 1 ? 1 : 0;  // init snapshot
    double clients_sum = 0, mvgmp_ct = 0, base_ct = 0, mvgmp_alpha = 0, base_alpha = 0;
    long counted = 0;
    for (std::size_t i = skip; i < result.frames.size(); ++i) {
        const MetricsRecord& r = result.frames[i];
        clients_sum += r.active_clients;
        mvgmp_ct += r.mvgmp_channel_time_ms;
        base_ct += r.baseline_channel_time_ms;
        mvgmp_alpha += r.mvgmp_mean_alpha;
        base_alpha += r.baseline_mean_alpha;
        s.baseline_queued_total += r.baseline_queued;
        if (r.baseline_queued == 0 &&
            r.mvgmp_channel_time_ms > r.baseline_channel_time_ms + 1e-9)
            ++s.mvgmp_ct_exceeding_frames;
        ++counted;
    }
    if (counted > 0) {
        s.mean_active_clients = clients_sum / static_cast<double>(counted);
        s.mvgmp_mean_channel_time_ms = mvgmp_ct / static_cast<double>(counted);
        s.baseline_mean_channel_time_ms = base_ct / static_cast<double>(counted);
        s.mvgmp_mean_alpha = mvgmp_alpha / static_cast<double>(counted);
        s.baseline_mean_alpha = base_alpha / static_cast<double>(counted);
        if (s.baseline_mean_channel_time_ms > 0.0)
            s.channel_time_ratio =
                s.mvgmp_mean_channel_time_ms / s.baseline_mean_channel_time_ms;
    }

    result.clients = engine.departed;
    for (ActiveClient& entry : engine.clients) {
        entry.outcome.last_desired = entry.client.desired_views.front();
        entry.outcome.threshold = entry.client.threshold;
        result.clients.push_back(entry.outcome);
    }
    std::sort(result.clients.begin(), result.clients.end(),
              [](const ClientOutcome& a, const ClientOutcome& b) { return a.id < b.id; });
    result.summary = s;
    return result;
}

}  // namespace mvmc::sim
