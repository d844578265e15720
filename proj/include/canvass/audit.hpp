#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/features.hpp"
#include "canvass/ingest.hpp"
#include "canvass/model.hpp"

namespace canvass {

struct HitRateRow {
    std::string group;
    std::size_t inspections = 0;
    std::size_t hits = 0;
    double rate = 0.0;  // full precision; round only for display
};

struct HitRateTable {
    std::vector<HitRateRow> rows;
    std::size_t total_inspections = 0;
    std::size_t total_hits = 0;
};

std::string format_rate_3dp(double rate);

/// Inspection and hit counts per sanitarian cluster of the record itself;
/// records without a cluster fall into an "unclustered" row.
HitRateTable cluster_hit_rates(const std::vector<InspectionRecord>& records);

struct CodeClusterRates {
    std::vector<std::string> clusters;
    std::vector<std::size_t> inspections;                 // per cluster
    std::vector<std::array<std::size_t, 14>> citations;   // per cluster x V1..V14
    std::vector<std::array<double, 14>> rates;
};

/// Fraction of each cluster's inspections citing each critical code V1..V14.
CodeClusterRates code_hit_rates_by_cluster(const std::vector<InspectionRecord>& records);

struct MonthlyRate {
    int year = 0;
    unsigned month = 0;
    std::size_t inspections = 0;
    std::size_t hits = 0;
    double rate = 0.0;

    std::string label() const;  // "YYYY-MM"
};

/// Calendar-month hit-rate series over records of the given kind. With a
/// code, a hit is a citation of that code; without, any critical citation.
/// Months with no inspections are absent.
std::vector<MonthlyRate> monthly_hit_rate_series(const std::vector<InspectionRecord>& records,
                                                 std::optional<ViolationCode> code,
                                                 InspectionKind kind);

struct PeriodStats {
    std::size_t months = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;  // Tukey hinges
    double q3 = 0.0;
};

PeriodStats summarize_rates(const std::vector<MonthlyRate>& series);

struct PrePostCell {
    ViolationCode code = 1;
    InspectionKind kind = InspectionKind::canvass;
    std::vector<MonthlyRate> pre;
    std::vector<MonthlyRate> post;
    PeriodStats pre_stats;
    PeriodStats post_stats;
};

struct PrePostSummary {
    Date split;
    std::vector<PrePostCell> cells;  // 14 codes x {canvass, complaint}
};

/// Monthly hit-rate distributions per critical code and inspection type on
/// both sides of the split date. Throws DataError when either period holds
/// no canvass/complaint records at all.
PrePostSummary prepost_comparison(const std::vector<InspectionRecord>& records,
                                  Date split = Date::from_ymd(2015, 1, 1));

/// month_key -> mean daily high over that calendar month.
std::map<int, double> monthly_average_temperature(const WeatherSeries& weather);

/// Keeps only canvass records of the k most common non-empty chain keys.
std::vector<InspectionRecord> select_top_chains(const std::vector<InspectionRecord>& records,
                                                std::size_t k = 51);

struct SeasonalAssociation {
    double coefficient = 0.0;  // on monthly average temperature
    double std_error = 0.0;    // asymptotic, from observed information
    std::size_t n_records = 0;
    std::size_t n_chains = 0;
};

/// Logistic regression of code citation on chain fixed-effect dummies plus
/// monthly average temperature. Every record needs a chain key and a
/// covered month. A constant temperature column is an error.
SeasonalAssociation seasonal_association(const std::vector<InspectionRecord>& records,
                                         const std::map<int, double>& monthly_temps,
                                         ViolationCode code, const TrainingConfig& cfg = {});

enum class CounterfactualMode { zero_out, reference_mean };

std::string to_string(CounterfactualMode m);
CounterfactualMode counterfactual_mode_from_string(const std::string& s);

struct CounterfactualRow {
    std::int64_t inspection_id = 0;
    double baseline_probability = 0.0;
    double counterfactual_probability = 0.0;
    std::size_t baseline_rank = 0;        // 1 = scheduled first
    std::size_t counterfactual_rank = 0;
    // baseline_rank - counterfactual_rank; positive = earlier once the
    // cluster contribution is neutralized.
    std::int64_t rank_shift = 0;
};

struct CounterfactualReport {
    CounterfactualMode mode = CounterfactualMode::zero_out;
    std::vector<CounterfactualRow> rows;  // ascending inspection_id
};

/// Rescoring with the six cluster contributions removed (zero_out) or
/// replaced by the inspection-count-weighted mean cluster coefficient
/// (reference_mean). The model must contain all six cluster features.
CounterfactualReport sanitarian_counterfactual(const LogisticModel& model,
                                               const std::vector<LabeledInstance>& test,
                                               CounterfactualMode mode);

/// Establishments on different sides of position `threshold` in the two
/// rankings.
std::size_t crossing_count(const CounterfactualReport& report, std::size_t threshold);

void write_hit_rate_csv(std::ostream& out, const HitRateTable& table);
void write_code_cluster_csv(std::ostream& out, const CodeClusterRates& rates);
void write_monthly_csv(std::ostream& out, const std::vector<MonthlyRate>& series);
void write_prepost_csv(std::ostream& out, const PrePostSummary& summary);
void write_prepost_summary_json(std::ostream& out, const PrePostSummary& summary);
void write_seasonal_json(std::ostream& out, const SeasonalAssociation& assoc,
                         ViolationCode code);
void write_counterfactual_csv(std::ostream& out, const CounterfactualReport& report);
void write_counterfactual_summary_json(std::ostream& out, const CounterfactualReport& report);

}  // namespace canvass
