#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "mvmc/model.hpp"
#include "mvmc/rng.hpp"

// Ground-truth engines used to validate the closed forms: exhaustive
// enumeration over per-transmission loss outcomes and seeded Monte Carlo.
// Nothing here calls into the closed-form implementations.
namespace mvmc::oracle {

// Enumeration refuses instances whose outcome space exceeds 2^this.
inline constexpr int kMaxEnumeratedTransmissions = 24;

struct EnumerationLimit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact failure probability by summing over every loss/success outcome of
// the client's receivable transmissions: the desired view unreceived and no
// received pair (left, right) at most `dibr_range` apart around it. Boundary
// desired views need direct reception. Throws EnumerationLimit above the cap.
double enumerate_failure_probability(const Client& client, ViewId desired,
                                     const TransmissionPlan& plan, const LossModel& model,
                                     int num_views, int dibr_range);

// Same, with the client locked to a single channel.
double enumerate_failure_probability_single_radio(const Client& client,
                                                  ChannelId fixed_channel, ViewId desired,
                                                  const TransmissionPlan& plan,
                                                  const LossModel& model, int num_views,
                                                  int dibr_range);

// One frame of reception: every receivable transmission succeeds
// independently with probability 1 - p_{i,c,r}. Returns the sorted set of
// views received at least once.
std::vector<ViewId> simulate_reception(const TransmissionPlan& plan, const Client& client,
                                       const LossModel& model, Rng& rng);

// DIBR closure: the received views plus every view strictly between two
// received views at most `dibr_range` apart. Input need not be sorted;
// output is sorted and unique.
std::vector<ViewId> recoverable_views(const std::vector<ViewId>& received, int num_views,
                                      int dibr_range);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double half_width_95 = 0.0;
    std::int64_t trials = 0;
};

// Monte Carlo estimate of the fraction of desired views obtained per frame
// (received or synthesizable), with its standard error.
Estimate monte_carlo_alpha(const Client& client, const TransmissionPlan& plan,
                           const LossModel& model, int num_views, int dibr_range,
                           std::int64_t trials, Rng& rng);

// Subscription modes for the long-sequence estimator.
struct UniformSubscription {
    double p_select = 1.0;  // each view subscribed independently
};
struct SpacedSubscription {
    int spacing = 1;        // one view transmitted per `spacing` consecutive views
    double p_select = 1.0;
};
struct PeriodicZipfSubscription {
    int period = 1;
    double exponent = 1.0;
    double scale = 1.0;     // subscribe position pos with probability scale / pos^exponent
};
using SubscriptionSpec =
    std::variant<UniformSubscription, SpacedSubscription, PeriodicZipfSubscription>;

// Simulates a reception indicator sequence over `num_views` consecutive
// views (each transmitted view lost with probability p_loss), marks
// subscribed views per the mode, applies the DIBR closure, and returns the
// obtained/subscribed ratio. The standard error comes from batch means to
// absorb the correlation the closure introduces.
Estimate simulate_view_sequence_alpha(double p_loss, int dibr_range,
                                      const SubscriptionSpec& subscription,
                                      std::int64_t num_views, Rng& rng);

}  // namespace mvmc::oracle
