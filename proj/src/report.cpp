#include "mvmc/report.hpp"

#include <cmath>

#include "mvmc/csv.hpp"

namespace mvmc::cli {
namespace {

std::string hex64(std::uint64_t value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

void stamp(CsvWriter& csv, std::uint64_t config_hash, std::uint64_t seed) {
    csv.comment("config_hash=" + hex64(config_hash) + " seed=" + std::to_string(seed));
}

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
};

MeanCi mean_ci(const std::vector<double>& values) {
    MeanCi out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double var = 0.0;
        for (double v : values) var += (v - out.mean) * (v - out.mean);
        var /= static_cast<double>(values.size() - 1);
        out.ci95 = 1.96 * std::sqrt(var / static_cast<double>(values.size()));
    }
    return out;
}

const std::vector<std::string> kSummaryColumns = {
    "frames",          "mean_active_clients",   "mvgmp_channel_time_ms",
    "baseline_channel_time_ms", "channel_time_ratio", "mvgmp_mean_alpha",
    "baseline_mean_alpha", "infeasible_events", "baseline_queued",
    "baseline_cap_hits", "mvgmp_ct_exceeding_frames"};

std::vector<double> summary_values(const sim::Summary& s) {
    return {static_cast<double>(s.frames),
            s.mean_active_clients,
            s.mvgmp_mean_channel_time_ms,
            s.baseline_mean_channel_time_ms,
            s.channel_time_ratio,
            s.mvgmp_mean_alpha,
            s.baseline_mean_alpha,
            static_cast<double>(s.infeasible_events),
            static_cast<double>(s.baseline_queued_total),
            static_cast<double>(s.baseline_cap_hits),
            static_cast<double>(s.mvgmp_ct_exceeding_frames)};
}

}  // namespace

void write_frames_csv(std::ostream& out, const sim::ScenarioResult& result,
                      std::uint64_t config_hash, std::uint64_t seed) {
    CsvWriter csv(out);
    stamp(csv, config_hash, seed);
    csv.row({"frame", "active_clients", "mvgmp_channel_time_ms", "mvgmp_instances",
             "mvgmp_mean_failure", "mvgmp_max_failure", "mvgmp_mean_alpha",
             "mvgmp_infeasible", "baseline_channel_time_ms", "baseline_instances",
             "baseline_mean_loss", "baseline_mean_alpha", "baseline_queued"});
    for (const sim::MetricsRecord& r : result.frames) {
        csv.row({std::to_string(r.frame), std::to_string(r.active_clients),
                 csv_number(r.mvgmp_channel_time_ms), std::to_string(r.mvgmp_instances),
                 csv_number(r.mvgmp_mean_failure), csv_number(r.mvgmp_max_failure),
                 csv_number(r.mvgmp_mean_alpha), std::to_string(r.mvgmp_infeasible),
                 csv_number(r.baseline_channel_time_ms), std::to_string(r.baseline_instances),
                 csv_number(r.baseline_mean_loss), csv_number(r.baseline_mean_alpha),
                 std::to_string(r.baseline_queued)});
    }
}

void write_clients_csv(std::ostream& out, const sim::ScenarioResult& result,
                       std::uint64_t config_hash, std::uint64_t seed) {
    CsvWriter csv(out);
    stamp(csv, config_hash, seed);
    csv.row({"client", "last_desired_view", "threshold", "frames_active",
             "failures_observed", "observed_failure_rate", "mean_predicted_failure",
             "ever_infeasible"});
    for (const sim::ClientOutcome& c : result.clients) {
        const double rate = c.frames_active > 0 ? static_cast<double>(c.failures_observed) /
                                                      static_cast<double>(c.frames_active)
                                                : 0.0;
        const double predicted = c.frames_active > 0
                                     ? c.predicted_failure_sum /
                                           static_cast<double>(c.frames_active)
                                     : 0.0;
        csv.row({std::to_string(c.id), std::to_string(c.last_desired),
                 csv_number(c.threshold), std::to_string(c.frames_active),
                 std::to_string(c.failures_observed), csv_number(rate), csv_number(predicted),
                 c.ever_infeasible ? "1" : "0"});
    }
}

void write_summary_csv(std::ostream& out, const std::vector<sim::Summary>& summaries,
                       std::uint64_t config_hash) {
    CsvWriter csv(out);
    csv.comment("config_hash=" + hex64(config_hash) + " seeds=" +
                std::to_string(summaries.size()));
    std::vector<std::string> header = {"seed"};
    header.insert(header.end(), kSummaryColumns.begin(), kSummaryColumns.end());
    csv.row(header);
    for (const sim::Summary& s : summaries) {
        std::vector<std::string> cells = {std::to_string(s.seed)};
        for (double v : summary_values(s)) cells.push_back(csv_number(v));
        csv.row(cells);
    }
    for (const std::string& kind : {std::string("mean"), std::string("ci95")}) {
        std::vector<std::string> cells = {kind};
        for (std::size_t col = 0; col < kSummaryColumns.size(); ++col) {
            std::vector<double> values;
            for (const sim::Summary& s : summaries) values.push_back(summary_values(s)[col]);
            const MeanCi stats = mean_ci(values);
            cells.push_back(csv_number(kind == "mean" ? stats.mean : stats.ci95));
        }
        csv.row(cells);
    }
}

void write_validation_csv(std::ostream& out,
                          const std::vector<validation::ValidationRow>& rows,
                          std::uint64_t config_hash, std::uint64_t seed) {
    CsvWriter csv(out);
    stamp(csv, config_hash, seed);
    csv.row({"id", "closed_form", "oracle", "abs_delta", "ci95_half_width", "tolerance",
             "gated", "pass"});
    for (const validation::ValidationRow& r : rows) {
        csv.row({r.id, csv_number(r.closed_form), csv_number(r.oracle_value),
                 csv_number(r.abs_delta), csv_number(r.ci_half_width), csv_number(r.tolerance),
                 r.gated ? "1" : "0", r.pass ? "1" : "0"});
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points,
                     std::uint64_t config_hash) {
    CsvWriter csv(out);
    csv.comment("config_hash=" + hex64(config_hash));
    csv.row({"parameter", "value", "seeds", "mvgmp_channel_time_ms", "mvgmp_ct_ci95",
             "baseline_channel_time_ms", "baseline_ct_ci95", "channel_time_ratio",
             "mvgmp_mean_alpha", "mvgmp_alpha_ci95", "baseline_mean_alpha",
             "baseline_alpha_ci95", "infeasible_events", "baseline_queued"});
    for (const SweepPoint& point : points) {
        std::vector<double> mvgmp_ct, base_ct, ratio, mvgmp_alpha, base_alpha;
        double infeasible = 0, queued = 0;
        for (const sim::Summary& s : point.summaries) {
            mvgmp_ct.push_back(s.mvgmp_mean_channel_time_ms);
            base_ct.push_back(s.baseline_mean_channel_time_ms);
            ratio.push_back(s.channel_time_ratio);
            mvgmp_alpha.push_back(s.mvgmp_mean_alpha);
            base_alpha.push_back(s.baseline_mean_alpha);
            infeasible += static_cast<double>(s.infeasible_events);
            queued += static_cast<double>(s.baseline_queued_total);
        }
        const MeanCi m_ct = mean_ci(mvgmp_ct), b_ct = mean_ci(base_ct);
        const MeanCi m_a = mean_ci(mvgmp_alpha), b_a = mean_ci(base_alpha);
        csv.row({point.parameter, point.value, std::to_string(point.summaries.size()),
                 csv_number(m_ct.mean), csv_number(m_ct.ci95), csv_number(b_ct.mean),
                 csv_number(b_ct.ci95), csv_number(mean_ci(ratio).mean),
                 csv_number(m_a.mean), csv_number(m_a.ci95), csv_number(b_a.mean),
                 csv_number(b_a.ci95), csv_number(infeasible), csv_number(queued)});
    }
}

}  // namespace mvmc::cli
