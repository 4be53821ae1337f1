#include "mvmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace mvmc::oracle {
namespace {

struct Transmission {
    ViewId view;
    double loss;
};

// The client's receivable transmissions, one element per multicast instance.
std::vector<Transmission> receivable_transmissions(const Client& client,
                                                   const TransmissionPlan& plan,
                                                   const LossModel& model,
                                                   std::optional<ChannelId> only_channel) {
    std::vector<Transmission> out;
    for (const auto& [key, n] : plan.entries()) {
        if (only_channel && key.channel != *only_channel) continue;
        if (!client.can_receive(key.channel, key.rate)) continue;
        const double p = model.loss(client, key.channel, key.rate);
        for (int t = 0; t < n; ++t) out.push_back({key.view, p});
    }
    return out;
}

bool failure_given_received(const std::vector<char>& got, ViewId desired, int num_views,
                            int dibr_range) {
    if (got[static_cast<std::size_t>(desired)]) return false;
    for (ViewId left = std::max(1, desired - dibr_range + 1); left < desired; ++left) {
        if (!got[static_cast<std::size_t>(left)]) continue;
        const ViewId last_right = std::min(num_views, left + dibr_range);
        for (ViewId right = desired + 1; right <= last_right; ++right) {
            if (got[static_cast<std::size_t>(right)]) return false;
        }
    }
    return true;
}

double enumerate_impl(const Client& client, ViewId desired, const TransmissionPlan& plan,
                      const LossModel& model, int num_views, int dibr_range,
                      std::optional<ChannelId> only_channel) {
    check_view_count(num_views);
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    if (desired < 1 || desired > num_views) throw std::domain_error("desired view out of range");

    const auto txs = receivable_transmissions(client, plan, model, only_channel);
    const int count = static_cast<int>(txs.size());
    if (count > kMaxEnumeratedTransmissions)
        throw EnumerationLimit("enumeration over " + std::to_string(count) +
                               " transmissions needs 2^" + std::to_string(count) +
                               " outcomes (cap 2^" +
                               std::to_string(kMaxEnumeratedTransmissions) + ")");

    double failure = 0.0;
    std::vector<char> got(static_cast<std::size_t>(num_views) + 1);
    const std::uint64_t outcomes = 1ULL << count;
    for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
        double prob = 1.0;
        std::fill(got.begin(), got.end(), 0);
        for (int t = 0; t < count; ++t) {
            if (mask & (1ULL << t)) {
                prob *= 1.0 - txs[static_cast<std::size_t>(t)].loss;
                got[static_cast<std::size_t>(txs[static_cast<std::size_t>(t)].view)] = 1;
            } else {
                prob *= txs[static_cast<std::size_t>(t)].loss;
            }
        }
        if (prob == 0.0) continue;
        if (failure_given_received(got, desired, num_views, dibr_range)) failure += prob;
    }
    return failure;
}

}  // namespace

double enumerate_failure_probability(const Client& client, ViewId desired,
                                     const TransmissionPlan& plan, const LossModel& model,
                                     int num_views, int dibr_range) {
    return enumerate_impl(client, desired, plan, model, num_views, dibr_range, std::nullopt);
}

double enumerate_failure_probability_single_radio(const Client& client,
                                                  ChannelId fixed_channel, ViewId desired,
                                                  const TransmissionPlan& plan,
                                                  const LossModel& model, int num_views,
                                                  int dibr_range) {
    return enumerate_impl(client, desired, plan, model, num_views, dibr_range, fixed_channel);
}

std::vector<ViewId> simulate_reception(const TransmissionPlan& plan, const Client& client,
                                       const LossModel& model, Rng& rng) {
    std::vector<ViewId> received;
    for (const auto& [key, n] : plan.entries()) {
        if (!client.can_receive(key.channel, key.rate)) continue;
        const double p = model.loss(client, key.channel, key.rate);
        for (int t = 0; t < n; ++t) {
            if (!rng.bernoulli(p)) {
                received.push_back(key.view);
                break;  // one success delivers the view; later copies cannot undo it
            }
        }
    }
    std::sort(received.begin(), received.end());
    received.erase(std::unique(received.begin(), received.end()), received.end());
    return received;
}

std::vector<ViewId> recoverable_views(const std::vector<ViewId>& received, int num_views,
                                      int dibr_range) {
    std::vector<char> got(static_cast<std::size_t>(num_views) + 1, 0);
    for (ViewId v : received) {
        if (v < 1 || v > num_views) throw std::domain_error("received view out of range");
        got[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<char> usable = got;
    // One left-to-right sweep: between consecutive received views at most
    // dibr_range apart, everything in between is synthesizable.
    int last = -1;
    for (ViewId v = 1; v <= num_views; ++v) {
        if (!got[static_cast<std::size_t>(v)]) continue;
        if (last > 0 && v - last <= dibr_range) {
            for (ViewId u = last + 1; u < v; ++u) usable[static_cast<std::size_t>(u)] = 1;
        }
        last = v;
    }
    std::vector<ViewId> out;
    for (ViewId v = 1; v <= num_views; ++v) {
        if (usable[static_cast<std::size_t>(v)]) out.push_back(v);
    }
    return out;
}

namespace {

Estimate finish_estimate(double sum, double sum_sq, std::int64_t n) {
    Estimate e;
    e.trials = n;
    if (n == 0) return e;
    e.mean = sum / static_cast<double>(n);
    if (n > 1) {
        const double var =
            std::max(0.0, (sum_sq - sum * sum / static_cast<double>(n)) /
                              static_cast<double>(n - 1));
        e.std_error = std::sqrt(var / static_cast<double>(n));
    }
    e.half_width_95 = 1.96 * e.std_error;
    return e;
}

}  // namespace

Estimate monte_carlo_alpha(const Client& client, const TransmissionPlan& plan,
                           const LossModel& model, int num_views, int dibr_range,
                           std::int64_t trials, Rng& rng) {
    if (trials < 1) throw std::domain_error("trials must be positive");
    if (client.desired_views.empty()) throw std::domain_error("client desires no views");
    const auto txs = receivable_transmissions(client, plan, model, std::nullopt);
    double sum = 0.0, sum_sq = 0.0;
    std::vector<char> got(static_cast<std::size_t>(num_views) + 1);
    std::vector<char> usable(static_cast<std::size_t>(num_views) + 1);
    for (std::int64_t t = 0; t < trials; ++t) {
        std::fill(got.begin(), got.end(), 0);
        for (const Transmission& tx : txs) {
            if (!rng.bernoulli(tx.loss)) got[static_cast<std::size_t>(tx.view)] = 1;
        }
        // Same sweep as recoverable_views, without materializing the sets.
        usable = got;
        int last = -1;
        for (ViewId v = 1; v <= num_views; ++v) {
            if (!got[static_cast<std::size_t>(v)]) continue;
            if (last > 0 && v - last <= dibr_range) {
                for (ViewId u = last + 1; u < v; ++u) usable[static_cast<std::size_t>(u)] = 1;
            }
            last = v;
        }
        int obtained = 0;
        for (ViewId k : client.desired_views) {
            obtained += usable[static_cast<std::size_t>(k)];
        }
        const double alpha =
            static_cast<double>(obtained) / static_cast<double>(client.desired_views.size());
        sum += alpha;
        sum_sq += alpha * alpha;
    }
    return finish_estimate(sum, sum_sq, trials);
}

Estimate simulate_view_sequence_alpha(double p_loss, int dibr_range,
                                      const SubscriptionSpec& subscription,
                                      std::int64_t num_views, Rng& rng) {
    if (p_loss < 0.0 || p_loss > 1.0) throw std::domain_error("loss probability out of [0, 1]");
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    if (num_views < 1) throw std::domain_error("sequence must contain at least one view");

    const auto transmitted = [&](std::int64_t v) {
        if (const auto* spaced = std::get_if<SpacedSubscription>(&subscription)) {
            return (v - 1) % spaced->spacing == 0;
        }
        return true;
    };
    const auto subscribe_probability = [&](std::int64_t v) {
        if (const auto* uniform = std::get_if<UniformSubscription>(&subscription))
            return uniform->p_select;
        if (const auto* spaced = std::get_if<SpacedSubscription>(&subscription))
            return spaced->p_select;
        const auto& zipf = std::get<PeriodicZipfSubscription>(subscription);
        const int pos = static_cast<int>((v - 1) % zipf.period) + 1;
        return zipf.scale / std::pow(static_cast<double>(pos), zipf.exponent);
    };

    // Streaming closure: a segment is open between consecutive received
    // views; when the closing view arrives within the quality range, every
    // subscribed view inside the segment counts as obtained.
    const std::int64_t batches = std::min<std::int64_t>(200, num_views);
    const std::int64_t batch_len = (num_views + batches - 1) / batches;
    std::vector<double> batch_alpha;
    std::int64_t total_subscribed = 0, total_obtained = 0;
    std::int64_t batch_subscribed = 0, batch_obtained = 0;
    std::int64_t last_received = -1;
    std::int64_t open_subscribed = 0;  // subscribed views since the last received view

    for (std::int64_t v = 1; v <= num_views; ++v) {
        const bool subscribed = rng.bernoulli(subscribe_probability(v));
        const bool received = transmitted(v) && !rng.bernoulli(p_loss);
        if (subscribed) {
            ++total_subscribed;
            ++batch_subscribed;
        }
        if (received) {
            std::int64_t gained = subscribed ? 1 : 0;
            if (last_received > 0 && v - last_received <= dibr_range) {
                gained += open_subscribed;
            }
            total_obtained += gained;
            batch_obtained += gained;
            last_received = v;
            open_subscribed = 0;
        } else if (subscribed) {
            ++open_subscribed;
        }
        if (v % batch_len == 0 || v == num_views) {
            if (batch_subscribed > 0) {
                batch_alpha.push_back(static_cast<double>(batch_obtained) /
                                      static_cast<double>(batch_subscribed));
            }
            batch_subscribed = batch_obtained = 0;
        }
    }

    Estimate e;
    e.trials = num_views;
    e.mean = total_subscribed == 0 ? 0.0
                                   : static_cast<double>(total_obtained) /
                                         static_cast<double>(total_subscribed);
    if (batch_alpha.size() > 1) {
        double mean_b = 0.0;
        for (double a : batch_alpha) mean_b += a;
        mean_b /= static_cast<double>(batch_alpha.size());
        double var = 0.0;
        for (double a : batch_alpha) var += (a - mean_b) * (a - mean_b);
        var /= static_cast<double>(batch_alpha.size() - 1);
        e.std_error = std::sqrt(var / static_cast<double>(batch_alpha.size()));
    }
    e.half_width_95 = 1.96 * e.std_error;
    return e;
}

}  // namespace mvmc::oracle
