#include "mvmc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace mvmc {
namespace {

// x^n for integer n >= 0 without pow()'s rounding detours; ipow(0, 0) == 1.
double ipow(double x, int n) {
    double acc = 1.0;
    for (int i = 0; i < n; ++i) acc *= x;
    return acc;
}

double clamp_probability(double p) {
    if (p < -1e-12 || p > 1.0 + 1e-12)
        throw std::logic_error("computed probability escaped [0, 1]: " + std::to_string(p));
    return std::clamp(p, 0.0, 1.0);
}

// Loss probability of one view over the client's receivable transmissions,
// optionally restricted to a single channel. Switches to log accumulation
// when a factor is small enough that repeated multiplication could underflow.
double per_view_loss(const Client& client, ViewId view, const TransmissionPlan& plan,
                     const LossModel& model, std::optional<ChannelId> only_channel) {
    double product = 1.0;
    double log_sum = 0.0;
    bool use_logs = false;
    for (ChannelId c : client.channels) {
        if (only_channel && c != *only_channel) continue;
        for (RateId r : client.rates) {
            const int n = plan.count(view, c, r);
            if (n == 0) continue;
            const double p = model.loss(client, c, r);
            if (p == 0.0) return 0.0;
            if (p < 1e-6) use_logs = true;
            product *= ipow(p, n);
            log_sum += n * std::log(p);
        }
    }
    return use_logs ? std::exp(log_sum) : product;
}

double failure_probability_impl(const Client& client, ViewId desired,
                                const TransmissionPlan& plan, const LossModel& model,
                                int num_views, int dibr_range,
                                std::optional<ChannelId> only_channel) {
    check_view_count(num_views);
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    if (desired < 1 || desired > num_views) throw std::domain_error("desired view out of range");

    const auto loss = [&](ViewId v) {
        return per_view_loss(client, v, plan, model, only_channel);
    };

    // Boundary views have no left/right pair; failure is plain loss.
    if (desired == 1 || desired == num_views) return clamp_probability(loss(desired));

    // Partition the failure event by the nearest received left view.
    // nearest left at distance k: views desired-k+1 .. desired all lost,
    // desired-k received, and every right view closing a pair within the
    // quality range lost. No received left within range: all of
    // desired-(R-1) .. desired lost (clipped at view 1).
    double failure = 0.0;
    const int max_left = std::min(dibr_range - 1, desired - 1);

    double left_prefix = loss(desired);  // product of losses of desired .. desired-k+1
    for (int k = 1; k <= max_left; ++k) {
        const int rights = std::min(dibr_range - k, num_views - desired);
        double right_block = 1.0;
        for (int l = 1; l <= rights; ++l) right_block *= loss(desired + l);
        failure += (1.0 - loss(desired - k)) * left_prefix * right_block;
        left_prefix *= loss(desired - k);
    }
    failure += left_prefix;  // now the product over desired .. desired-max_left
    return clamp_probability(failure);
}

}  // namespace

double view_loss_probability(const Client& client, ViewId view,
                             const TransmissionPlan& plan, const LossModel& model) {
    return clamp_probability(per_view_loss(client, view, plan, model, std::nullopt));
}

double view_failure_probability(const Client& client, ViewId desired,
                                const TransmissionPlan& plan, const LossModel& model,
                                int num_views, int dibr_range) {
    return failure_probability_impl(client, desired, plan, model, num_views, dibr_range,
                                    std::nullopt);
}

double view_failure_probability_single_radio(const Client& client, ChannelId fixed_channel,
                                             ViewId desired, const TransmissionPlan& plan,
                                             const LossModel& model, int num_views,
                                             int dibr_range) {
    if (std::find(client.channels.begin(), client.channels.end(), fixed_channel) ==
        client.channels.end())
        throw std::domain_error("fixed channel is not available to the client");
    return failure_probability_impl(client, desired, plan, model, num_views, dibr_range,
                                    fixed_channel);
}

double expected_alpha(const Client& client, const TransmissionPlan& plan,
                      const LossModel& model, int num_views, int dibr_range) {
    if (client.desired_views.empty()) throw std::domain_error("client desires no views");
    double sum = 0.0;
    for (ViewId k : client.desired_views) {
        sum += 1.0 - view_failure_probability(client, k, plan, model, num_views, dibr_range);
    }
    return clamp_probability(sum / static_cast<double>(client.desired_views.size()));
}

double aggregate_loss_probability(const Client& client, const ApTransmissionPolicy& policy,
                                  const LossModel& model) {
    policy.validate();
    double product = 1.0;
    for (ChannelId c : client.channels) {
        for (RateId r : client.rates) {
            const std::vector<double>* probs = policy.find(c, r);
            if (probs == nullptr) continue;  // never transmits there: factor 1
            const double p = model.loss(client, c, r);
            double factor = 0.0;
            for (std::size_t n = 0; n < probs->size(); ++n) {
                factor += (*probs)[n] * ipow(p, static_cast<int>(n));
            }
            product *= factor;
        }
    }
    return clamp_probability(product);
}

double asymptotic_alpha(double p_loss, int dibr_range) {
    if (p_loss < 0.0 || p_loss > 1.0) throw std::domain_error("loss probability out of [0, 1]");
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    const double q = 1.0 - p_loss;
    double bracket = ipow(p_loss, dibr_range);
    for (int k = 1; k <= dibr_range; ++k) {
        bracket += k * q * ipow(p_loss, k - 1);
    }
    return clamp_probability(q * bracket);
}

double asymptotic_alpha_spaced(double p_loss, int dibr_range, int spacing) {
    if (p_loss < 0.0 || p_loss > 1.0) throw std::domain_error("loss probability out of [0, 1]");
    if (spacing < 1 || spacing > dibr_range)
        throw std::domain_error("spacing must lie in [1, quality range]");
    const double q = 1.0 - p_loss;
    const int horizon = dibr_range / spacing;
    double bracket = ipow(p_loss, horizon);
    for (int k = 1; k <= horizon; ++k) {
        bracket += spacing * k * q * ipow(p_loss, k - 1);
    }
    return clamp_probability(q * bracket / spacing);
}

void PeriodicZipfParams::validate() const {
    if (period < 1) throw std::domain_error("period must be at least 1");
    if (exponent < 0.0) throw std::domain_error("exponent must be non-negative");
    if (!(scale > 0.0)) throw std::domain_error("scale must be positive");
    if (success < 0.0 || success > 1.0)
        throw std::domain_error("success probability out of [0, 1]");
    for (int pos = 1; pos <= period; ++pos) {
        if (subscription_probability(pos) > 1.0 + 1e-12)
            throw std::domain_error("subscription probability exceeds 1 at position " +
                                    std::to_string(pos));
    }
}

double PeriodicZipfParams::subscription_probability(int position) const {
    return scale / std::pow(static_cast<double>(position), exponent);
}

double PeriodicZipfParams::total_mass() const {
    double sum = 0.0;
    for (int pos = 1; pos <= period; ++pos) sum += subscription_probability(pos);
    return sum;
}

std::vector<std::vector<double>> periodic_zipf_transition_matrix(double success, int period) {
    if (period < 1) throw std::domain_error("period must be at least 1");
    if (!(success > 0.0) || success > 1.0)
        throw std::domain_error("success probability must lie in (0, 1]");
    const double p = success;
    const double wrap = 1.0 - ipow(1.0 - p, period);
    std::vector<std::vector<double>> matrix(static_cast<std::size_t>(period),
                                            std::vector<double>(static_cast<std::size_t>(period)));
    for (int i = 1; i <= period; ++i) {
        for (int j = 1; j <= period; ++j) {
            const int gap = i < j ? j - i : period - i + j;  // cyclic distance, 1..m
            matrix[i - 1][j - 1] = p * ipow(1.0 - p, gap - 1) / wrap;
        }
    }
    return matrix;
}

namespace {

int cyclic_position(int position, int offset, int period) {
    return (position - 1 + offset) % period + 1;
}

// Sum of subscription probabilities of the `count` cyclic positions after
// `position`: whole periods contribute the full mass, the remainder a prefix.
double expected_marks(int position, int count, const PeriodicZipfParams& params) {
    const int whole = count / params.period;
    double sum = whole * params.total_mass();
    for (int l = whole * params.period + 1; l <= count; ++l) {
        sum += params.subscription_probability(cyclic_position(position, l, params.period));
    }
    return sum;
}

}  // namespace

double periodic_zipf_cycle_reward(int position, const PeriodicZipfParams& params,
                                  int dibr_range) {
    params.validate();
    if (position < 1 || position > params.period)
        throw std::domain_error("position out of [1, period]");
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    const double p = params.success;
    double reward = 0.0;
    for (int x = 1; x <= dibr_range; ++x) {
        reward += expected_marks(position, x, params) * p * ipow(1.0 - p, x - 1);
    }
    return reward;
}

double asymptotic_alpha_periodic_zipf(const PeriodicZipfParams& params, int dibr_range) {
    params.validate();
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    const double p = params.success;
    if (p == 0.0) return 0.0;
    const int m = params.period;
    const double wrap = 1.0 - ipow(1.0 - p, m);

    double total = 0.0;
    for (int j = 1; j <= m; ++j) {
        double h = periodic_zipf_cycle_reward(j, params, dibr_range);
        // Cycles longer than the quality range still deliver their closing
        // received view; without this the assembled ratio undercounts by the
        // subscribed mass of those views.
        for (int e = 0; e < m; ++e) {
            const int pos = cyclic_position(j, dibr_range + 1 + e, m);
            h += params.subscription_probability(pos) * p * ipow(1.0 - p, dibr_range + e) / wrap;
        }
        total += h;
    }
    return clamp_probability(p * total / params.total_mass());
}

double asymptotic_alpha_periodic_zipf_piecewise(const PeriodicZipfParams& params,
                                                int dibr_range) {
    params.validate();
    if (dibr_range < 1) throw std::domain_error("quality range must be at least 1");
    const double p = params.success;
    if (p == 0.0) return 0.0;
    const int m = params.period;

    double total = 0.0;
    for (int j = 1; j <= m; ++j) {
        double h = 0.0;
        for (int x = 1; x <= dibr_range; ++x) {
            // Prefix of the current period, clipped when the cycle ends
            // before the period does (the piecewise form leaves that case
            // open; the clipped prefix is the only defined term).
            double marks = 0.0;
            for (int l = 1; l <= std::min(x, m - j); ++l) {
                marks += params.subscription_probability(j + l);
            }
            const int past = x - (m - j);
            if (past > 0) {
                marks += params.total_mass() * static_cast<double>(past) / m;
                for (int l = 1; l <= past % m; ++l) {
                    marks += params.subscription_probability(l);
                }
            }
            h += marks * p * ipow(1.0 - p, x - 1);
        }
        total += h;
    }
    return p * total / params.total_mass();
}

}  // namespace mvmc
