#include "mvmc/model.hpp"

#include <algorithm>
#include <cmath>

namespace mvmc {

RateSet::RateSet(std::vector<double> mbps) : mbps_(std::move(mbps)) {
    for (double r : mbps_) {
        if (!(r > 0.0)) throw ConfigError("PHY rate must be positive");
    }
}

double RateSet::mbps(RateId r) const {
    if (r < 0 || r >= size()) throw ConfigError("rate index out of range: " + std::to_string(r));
    return mbps_[static_cast<std::size_t>(r)];
}

void TransmissionPlan::add(ViewId view, ChannelId channel, RateId rate, int times) {
    if (times < 0) throw std::invalid_argument("transmission count must be non-negative");
    if (times == 0) return;
    counts_[PlanKey{view, channel, rate}] += times;
}

void TransmissionPlan::set_count(const PlanKey& key, int times) {
    if (times < 0) throw std::invalid_argument("transmission count must be non-negative");
    if (times == 0) {
        counts_.erase(key);
    } else {
        counts_[key] = times;
    }
}

int TransmissionPlan::count(ViewId view, ChannelId channel, RateId rate) const {
    auto it = counts_.find(PlanKey{view, channel, rate});
    return it == counts_.end() ? 0 : it->second;
}

int TransmissionPlan::total_transmissions() const {
    int total = 0;
    for (const auto& [key, n] : counts_) total += n;
    return total;
}

bool Client::can_receive(ChannelId channel, RateId rate) const {
    return std::find(channels.begin(), channels.end(), channel) != channels.end() &&
           std::find(rates.begin(), rates.end(), rate) != rates.end();
}

void check_client(const Client& client) {
    if (client.channels.empty()) throw std::invalid_argument("client has no channels");
    if (client.rates.empty()) throw std::invalid_argument("client has no rates");
    if (client.desired_views.empty()) throw std::invalid_argument("client desires no views");
    if (!(client.threshold > 0.0 && client.threshold <= 1.0))
        throw std::invalid_argument("client threshold must lie in (0, 1]");
    if (client.max_protection_views < 1)
        throw std::invalid_argument("max_protection_views must be positive");
}

LossModel LossModel::table() {
    LossModel m;
    m.kind_ = Kind::table;
    return m;
}

LossModel LossModel::distance(std::vector<double> base_loss_per_rate,
                              double reference_distance_m, double exponent) {
    LossModel m;
    m.kind_ = Kind::distance;
    for (double p : base_loss_per_rate) {
        if (p < 0.0 || p > 1.0) throw ConfigError("base loss must lie in [0, 1]");
    }
    if (!(reference_distance_m > 0.0)) throw ConfigError("reference distance must be positive");
    m.base_loss_per_rate_ = std::move(base_loss_per_rate);
    m.reference_distance_m_ = reference_distance_m;
    m.exponent_ = exponent;
    return m;
}

void LossModel::set_loss(std::uint32_t client_id, ChannelId channel, RateId rate, double p) {
    if (kind_ != Kind::table) throw ConfigError("set_loss is only valid for table loss models");
    if (p < 0.0 || p > 1.0) throw ConfigError("loss probability must lie in [0, 1]");
    table_[TableKey{client_id, channel, rate}] = p;
}

double LossModel::loss(const Client& client, ChannelId channel, RateId rate) const {
    if (kind_ == Kind::table) {
        auto it = table_.find(TableKey{client.id, channel, rate});
        if (it == table_.end()) {
            throw ConfigError("no loss entry for client " + std::to_string(client.id) +
                              " channel " + std::to_string(channel) + " rate " +
                              std::to_string(rate));
        }
        return it->second;
    }
    if (rate < 0 || rate >= static_cast<int>(base_loss_per_rate_.size()))
        throw ConfigError("no base loss configured for rate index " + std::to_string(rate));
    const double base = base_loss_per_rate_[static_cast<std::size_t>(rate)];
    const double d = std::hypot(client.x, client.y);
    const double scale = std::pow(d / reference_distance_m_, exponent_);
    const double p = 1.0 - std::pow(1.0 - base, scale);
    return std::clamp(p, 0.0, 1.0);
}

double loss_probability(const LossModel& model, const Client& client,
                        ChannelId channel, RateId rate) {
    return model.loss(client, channel, rate);
}

void ApTransmissionPolicy::set(ChannelId channel, RateId rate, std::vector<double> probs) {
    policies_[{channel, rate}] = std::move(probs);
}

const std::vector<double>* ApTransmissionPolicy::find(ChannelId channel, RateId rate) const {
    auto it = policies_.find({channel, rate});
    return it == policies_.end() ? nullptr : &it->second;
}

void ApTransmissionPolicy::validate() const {
    for (const auto& [key, probs] : policies_) {
        double sum = 0.0;
        for (double p : probs) {
            if (p < 0.0) throw ConfigError("transmission-count probability below zero");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("transmission-count distribution does not sum to 1");
    }
}

std::map<ChannelId, double> per_channel_airtime_s(const TransmissionPlan& plan,
                                                  double frame_interval_s,
                                                  double video_rate_bps,
                                                  const RateSet& rates) {
    std::map<ChannelId, double> airtime;
    const double bits_per_frame = video_rate_bps * frame_interval_s;
    for (const auto& [key, n] : plan.entries()) {
        airtime[key.channel] += n * bits_per_frame / rates.bits_per_second(key.rate);
    }
    return airtime;
}

Feasibility validate_plan(const TransmissionPlan& plan, double frame_interval_s,
                          double video_rate_bps, const RateSet& rates) {
    Feasibility verdict;
    for (const auto& [channel, airtime] :
         per_channel_airtime_s(plan, frame_interval_s, video_rate_bps, rates)) {
        const double utilization = airtime / frame_interval_s;
        if (utilization > verdict.worst_utilization) {
            verdict.worst_utilization = utilization;
            verdict.worst_channel = channel;
        }
    }
    verdict.feasible = verdict.worst_utilization <= 1.0 + 1e-12;
    return verdict;
}

void check_view_count(int num_views) {
    if (num_views < 2) throw std::domain_error("view count must be at least 2");
}

}  // namespace mvmc
