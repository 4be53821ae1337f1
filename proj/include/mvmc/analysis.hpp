#pragma once

#include <vector>

#include "mvmc/model.hpp"

namespace mvmc {

// Probability that `view` is not received by the client over all of its
// transmissions in the plan: product of p_{i,c,r}^n over the client's
// (channel, rate) pairs. Entries the client cannot receive contribute
// nothing; a view with no receivable transmissions is lost with certainty.
double view_loss_probability(const Client& client, ViewId view,
                             const TransmissionPlan& plan, const LossModel& model);

// Probability that the client neither receives its desired view nor can
// synthesize it from a received left view and right view at most R apart.
// Boundary views (1 and M) cannot be synthesized and reduce to the plain
// loss probability.
double view_failure_probability(const Client& client, ViewId desired,
                                const TransmissionPlan& plan, const LossModel& model,
                                int num_views, int dibr_range);

// Same, for a single-radio client locked to one channel: only transmissions
// on `fixed_channel` (at any of the client's rates) are receivable.
double view_failure_probability_single_radio(const Client& client, ChannelId fixed_channel,
                                             ViewId desired, const TransmissionPlan& plan,
                                             const LossModel& model, int num_views,
                                             int dibr_range);

// Expected fraction of the client's desired views that it can obtain:
// mean over K_i of (1 - failure probability).
double expected_alpha(const Client& client, const TransmissionPlan& plan,
                      const LossModel& model, int num_views, int dibr_range);

// View loss probability when transmission counts are themselves random:
// product over (c, r) of sum_n policy(n) * p_{i,c,r}^n. Pairs with no policy
// entry always transmit zero times and contribute factor 1.
double aggregate_loss_probability(const Client& client, const ApTransmissionPolicy& policy,
                                  const LossModel& model);

// Long-run fraction of subscribed views obtained when every view is
// multicast and each is lost independently with probability p_loss:
//     (1 - p) * { sum_{k=1}^{R} k (1 - p) p^{k-1} + p^R }.
// Equals 1 - p_loss at R = 1 (no synthesis possible).
double asymptotic_alpha(double p_loss, int dibr_range);

// Variant where only one view in every `spacing` consecutive views is
// transmitted (1 <= spacing <= R); the rest rely on synthesis.
double asymptotic_alpha_spaced(double p_loss, int dibr_range, int spacing);

// Cyclic subscription with period m: position pos in [1, m] is subscribed
// with probability scale / pos^exponent. `success` is the per-view
// *reception* probability (not a loss).
struct PeriodicZipfParams {
    int period = 1;        // m >= 1
    double exponent = 1.0; // s >= 0
    double scale = 1.0;    // c > 0 and c / pos^s <= 1 for all positions
    double success = 0.5;  // per-view reception probability in [0, 1]

    void validate() const;  // throws std::domain_error
    double subscription_probability(int position) const;
    double total_mass() const;  // sum of subscription probabilities over one period
};

// Embedded chain over cyclic positions of successive received views:
// entry (i, j) is the probability the next received view lands on position
// j given the previous one landed on i. Rows sum to 1; requires success > 0.
std::vector<std::vector<double>> periodic_zipf_transition_matrix(double success, int period);

// Expected subscribed positions covered by one renewal cycle starting at
// position j, truncated at the quality range: cycles longer than R earn
// nothing here. h(j) = sum_{x=1}^{R} E[marks(j, x)] p (1-p)^{x-1}, where
// E[marks(j, x)] sums subscription probabilities over the x cyclic positions
// after j.
double periodic_zipf_cycle_reward(int position, const PeriodicZipfParams& params,
                                  int dibr_range);

// Long-run fraction of subscribed views obtained under the periodic
// subscription. Assembled from the cycle rewards plus the closing-view reward
// of cycles longer than R (the received view that ends a long gap is still
// obtained). Uniform full subscription with period 1 reduces this to
// asymptotic_alpha(1 - success, R).
double asymptotic_alpha_periodic_zipf(const PeriodicZipfParams& params, int dibr_range);

// Alternative piecewise evaluation that weights the whole-period mass by the
// fractional period count (x - (m - j)) / m instead of whole periods, and
// truncates like periodic_zipf_cycle_reward. Kept only so validation reports
// can quantify its deviation from Monte Carlo; not used elsewhere.
double asymptotic_alpha_periodic_zipf_piecewise(const PeriodicZipfParams& params,
                                                int dibr_range);

}  // namespace mvmc
