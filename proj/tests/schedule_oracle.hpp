// Brute-force recomputation of the schedule metrics from the explicit day
// table. Test-only; shares no code with the scheduler implementation beyond
// the public Schedule type.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "canvass/scheduler.hpp"

namespace oracle {

struct Metrics {
    std::optional<double> mean;    // absent when there are no hits
    std::optional<double> stddev;
    std::optional<double> first_half;
    std::vector<std::size_t> hits_by_day;  // index 0 = day 1
};

// Day table by literal counting: walk positions, start a new day every
// `capacity` items.
inline std::map<std::int64_t, int> day_table(const std::vector<std::int64_t>& ordering,
                                             int capacity) {
    std::map<std::int64_t, int> days;
    int day = 1, used = 0;
    for (std::int64_t id : ordering) {
        if (used == capacity) {
            ++day;
            used = 0;
        }
        days[id] = day;
        ++used;
    }
    return days;
}

inline std::vector<std::int64_t> usual_ordering(const std::vector<canvass::ScheduleItem>& items) {
    std::vector<canvass::ScheduleItem> sorted = items;
    std::sort(sorted.begin(), sorted.end(),
              [](const canvass::ScheduleItem& a, const canvass::ScheduleItem& b) {
                  if (a.actual_date != b.actual_date) return a.actual_date < b.actual_date;
                  return a.inspection_id < b.inspection_id;
              });
    std::vector<std::int64_t> ids;
    for (const auto& item : sorted) ids.push_back(item.inspection_id);
    return ids;
}

inline Metrics recompute(const std::vector<std::int64_t>& ordering,
                         const std::vector<canvass::ScheduleItem>& items, int capacity) {
    Metrics m;
    const auto simulated = day_table(ordering, capacity);
    const auto actual = day_table(usual_ordering(items), capacity);

    std::map<std::int64_t, int> label_of;
    for (const auto& item : items) label_of[item.inspection_id] = item.label;

    // Hit ids in ascending order, mirroring the definitional sum order.
    std::vector<std::int64_t> hits;
    for (const auto& item : items)
        if (item.label == 1) hits.push_back(item.inspection_id);
    std::sort(hits.begin(), hits.end());

    if (!hits.empty()) {
        double sum = 0.0;
        for (std::int64_t id : hits) sum += actual.at(id) - simulated.at(id);
        const double mean = sum / static_cast<double>(hits.size());
        double sq = 0.0;
        for (std::int64_t id : hits) {
            const double r = actual.at(id) - simulated.at(id);
            sq += (r - mean) * (r - mean);
        }
        m.mean = mean;
        m.stddev = std::sqrt(sq / static_cast<double>(hits.size()));

        const std::size_t half = (ordering.size() + 1) / 2;
        std::size_t in_half = 0;
        for (std::size_t p = 0; p < half; ++p) in_half += label_of.at(ordering[p]) == 1;
        m.first_half = static_cast<double>(in_half) / static_cast<double>(hits.size());
    }

    int last_day = 0;
    for (const auto& [id, day] : simulated) last_day = std::max(last_day, day);
    m.hits_by_day.assign(static_cast<std::size_t>(last_day), 0);
    for (int day = 1; day <= last_day; ++day) {
        std::size_t cumulative = 0;
        for (std::int64_t id : ordering)
            if (simulated.at(id) <= day && label_of.at(id) == 1) ++cumulative;
        m.hits_by_day[static_cast<std::size_t>(day - 1)] = cumulative;
    }
    return m;
}

// Independent ordering constructions for the four deterministic strategies.
inline std::vector<std::int64_t> expected_ordering(
    const std::vector<canvass::ScheduleItem>& items, canvass::Strategy strategy,
    const std::map<std::int64_t, double>& scores) {
    using canvass::Strategy;
    const auto usual = usual_ordering(items);
    std::map<std::int64_t, int> label_of;
    for (const auto& item : items) label_of[item.inspection_id] = item.label;
    switch (strategy) {
        case Strategy::usual:
            return usual;
        case Strategy::best: {
            std::vector<std::int64_t> out;
            for (std::int64_t id : usual)
                if (label_of.at(id) == 1) out.push_back(id);
            for (std::int64_t id : usual)
                if (label_of.at(id) == 0) out.push_back(id);
            return out;
        }
        case Strategy::worst: {
            std::vector<std::int64_t> out;
            for (std::int64_t id : usual)
                if (label_of.at(id) == 0) out.push_back(id);
            for (std::int64_t id : usual)
                if (label_of.at(id) == 1) out.push_back(id);
            return out;
        }
        case Strategy::model: {
            std::vector<std::int64_t> out = usual;
            std::sort(out.begin(), out.end(), [&](std::int64_t a, std::int64_t b) {
                if (scores.at(a) != scores.at(b)) return scores.at(a) > scores.at(b);
                return a < b;
            });
            return out;
        }
        case Strategy::random:
            break;  // not independently derivable
    }
    return {};
}

}  // namespace oracle
