#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/features.hpp"

namespace canvass {

enum class Strategy { usual, random, best, worst, model };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// One unit of schedulable work: a test-set inspection with its real-life
/// date (the "usual" order), its hindsight label, and an optional score.
struct ScheduleItem {
    std::int64_t inspection_id = 0;
    Date actual_date;
    int label = 0;
};

std::vector<ScheduleItem> schedule_items(const std::vector<LabeledInstance>& instances);

/// A simulated inspection ordering under equal daily capacity. Day of the
/// item at 1-based position p is ceil(p / capacity).
struct Schedule {
    std::vector<std::int64_t> ordering;  // permutation of the item ids
    int capacity = 1;
    Strategy strategy = Strategy::usual;
    std::optional<std::uint64_t> seed;   // random strategy only

    int day_of_position(std::size_t position_1based) const;
    std::map<std::int64_t, int> day_by_id() const;
    int total_days() const;
};

/// Orderings: usual = ascending actual date; model = descending score;
/// best/worst = hits first/last (usual order within groups); random =
/// seeded uniform shuffle. All ties break by inspection_id ascending.
Schedule make_schedule(const std::vector<ScheduleItem>& items, Strategy strategy,
                       const std::map<std::int64_t, double>* scores, int capacity,
                       std::optional<std::uint64_t> seed = std::nullopt);

/// Capacity that reproduces the real horizon: total items divided by the
/// number of distinct actual dates, rounded up.
int default_capacity(const std::vector<ScheduleItem>& items);

struct DayReduction {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

/// Over label-1 items only: actual day minus simulated day (positive means
/// found earlier). Throws NumericError when there are no hits.
DayReduction day_reduction_stats(const Schedule& schedule,
                                 const std::vector<ScheduleItem>& items,
                                 const std::map<std::int64_t, int>& actual_days);

/// Share of label-1 items inside the first ceil(N/2) ordering positions.
double first_half_fraction(const Schedule& schedule, const std::vector<ScheduleItem>& items);

struct HitCurvePoint {
    int day = 0;
    std::size_t cumulative_hits = 0;
};

std::vector<HitCurvePoint> hit_curve(const Schedule& schedule,
                                     const std::vector<ScheduleItem>& items);

struct ScheduleMetrics {
    double mean_day_reduction = 0.0;
    double std_day_reduction = 0.0;
    double first_half = 0.0;
    std::vector<HitCurvePoint> curve;
};

/// All three metrics plus the hit curve, with actual days taken from the
/// usual schedule at the same capacity.
ScheduleMetrics evaluate_schedule(const Schedule& schedule,
                                  const std::vector<ScheduleItem>& items);

void write_schedule_csv(std::ostream& out, const Schedule& schedule,
                        const std::vector<ScheduleItem>& items,
                        const std::map<std::int64_t, double>* scores);
void write_hit_curve_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, std::vector<HitCurvePoint>>>&
                             curves_by_strategy);
void write_metrics_json(std::ostream& out,
                        const std::vector<std::pair<std::string, ScheduleMetrics>>& metrics);

}  // namespace canvass
