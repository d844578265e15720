#include "canvass/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <unordered_map>

#include "canvass/csv.hpp"
#include "json.hpp"

namespace canvass {

namespace {

// Engine-stable bounded draw (avoids std::uniform_int_distribution, whose
// output differs across standard libraries).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

std::vector<const ScheduleItem*> usual_order(const std::vector<ScheduleItem>& items) {
    std::vector<const ScheduleItem*> order;
    order.reserve(items.size());
    for (const auto& item : items) order.push_back(&item);
    std::sort(order.begin(), order.end(), [](const ScheduleItem* a, const ScheduleItem* b) {
        if (a->actual_date != b->actual_date) return a->actual_date < b->actual_date;
        return a->inspection_id < b->inspection_id;
    });
    return order;
}

std::size_t count_hits(const std::vector<ScheduleItem>& items) {
    std::size_t hits = 0;
    for (const auto& item : items) hits += item.label == 1;
    return hits;
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::usual: return "usual";
        case Strategy::random: return "random";
        case Strategy::best: return "best";
        case Strategy::worst: return "worst";
        case Strategy::model: return "model";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "usual") return Strategy::usual;
    if (s == "random") return Strategy::random;
    if (s == "best") return Strategy::best;
    if (s == "worst") return Strategy::worst;
    if (s == "model") return Strategy::model;
    throw UsageError("unknown strategy '" + s + "'");
}

std::vector<ScheduleItem> schedule_items(const std::vector<LabeledInstance>& instances) {
    std::vector<ScheduleItem> items;
    items.reserve(instances.size());
    for (const auto& inst : instances)
        items.push_back({inst.inspection_id, inst.date, inst.label});
    return items;
}

int Schedule::day_of_position(std::size_t position_1based) const {
    return static_cast<int>((position_1based + capacity - 1) / capacity);
}

std::map<std::int64_t, int> Schedule::day_by_id() const {
    std::map<std::int64_t, int> out;
    for (std::size_t p = 0; p < ordering.size(); ++p) out[ordering[p]] = day_of_position(p + 1);
    return out;
}

int Schedule::total_days() const {
    return ordering.empty() ? 0 : day_of_position(ordering.size());
}

Schedule make_schedule(const std::vector<ScheduleItem>& items, Strategy strategy,
                       const std::map<std::int64_t, double>* scores, int capacity,
                       std::optional<std::uint64_t> seed) {
    if (capacity <= 0) throw UsageError("schedule capacity must be positive");
    {
        std::set<std::int64_t> ids;
        for (const auto& item : items)
            if (!ids.insert(item.inspection_id).second)
                throw DataError("duplicate inspection_id " + std::to_string(item.inspection_id));
    }

    std::vector<const ScheduleItem*> order = usual_order(items);

    switch (strategy) {
        case Strategy::usual:
            break;
        case Strategy::model: {
            if (!scores) throw UsageError("model strategy requires scores");
            for (const auto& item : items)
                if (!scores->count(item.inspection_id))
                    throw DataError("no score for inspection " +
                                    std::to_string(item.inspection_id));
            std::stable_sort(order.begin(), order.end(),
                             [&](const ScheduleItem* a, const ScheduleItem* b) {
                                 const double sa = scores->at(a->inspection_id);
                                 const double sb = scores->at(b->inspection_id);
                                 if (sa != sb) return sa > sb;
                                 return a->inspection_id < b->inspection_id;
                             });
            break;
        }
        case Strategy::best:
            std::stable_sort(order.begin(), order.end(),
                             [](const ScheduleItem* a, const ScheduleItem* b) {
                                 return a->label > b->label;
                             });
            break;
        case Strategy::worst:
            std::stable_sort(order.begin(), order.end(),
                             [](const ScheduleItem* a, const ScheduleItem* b) {
                                 return a->label < b->label;
                             });
            break;
        case Strategy::random: {
            std::mt19937_64 rng(seed.value_or(0));
            // Fisher-Yates over the usual order.
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[bounded(rng, i)]);
            break;
        }
    }

    Schedule s;
    s.capacity = capacity;
    s.strategy = strategy;
    if (strategy == Strategy::random) s.seed = seed.value_or(0);
    s.ordering.reserve(order.size());
    for (const ScheduleItem* item : order) s.ordering.push_back(item->inspection_id);
    return s;
}

int default_capacity(const std::vector<ScheduleItem>& items) {
    if (items.empty()) return 1;
    std::set<Date> dates;
    for (const auto& item : items) dates.insert(item.actual_date);
    const std::size_t n = items.size();
    const std::size_t d = dates.size();
    return static_cast<int>((n + d - 1) / d);
}

DayReduction day_reduction_stats(const Schedule& schedule,
                                 const std::vector<ScheduleItem>& items,
                                 const std::map<std::int64_t, int>& actual_days) {
    const auto simulated = schedule.day_by_id();

    // Hits accumulated in ascending inspection_id order: deterministic sums.
    std::vector<const ScheduleItem*> hits;
    for (const auto& item : items)
        if (item.label == 1) hits.push_back(&item);
    if (hits.empty()) throw NumericError("day reduction undefined: no critical violations");
    std::sort(hits.begin(), hits.end(), [](const ScheduleItem* a, const ScheduleItem* b) {
        return a->inspection_id < b->inspection_id;
    });

    double sum = 0.0;
    for (const ScheduleItem* item : hits) {
        auto actual = actual_days.find(item->inspection_id);
        auto sim = simulated.find(item->inspection_id);
        if (actual == actual_days.end() || sim == simulated.end())
            throw DataError("inspection " + std::to_string(item->inspection_id) +
                            " missing a day assignment");
        sum += actual->second - sim->second;
    }
    const double mean = sum / static_cast<double>(hits.size());
    double sq = 0.0;
    for (const ScheduleItem* item : hits) {
        const double r =
            actual_days.at(item->inspection_id) - simulated.at(item->inspection_id);
        sq += (r - mean) * (r - mean);
    }
    return {mean, std::sqrt(sq / static_cast<double>(hits.size()))};
}

double first_half_fraction(const Schedule& schedule, const std::vector<ScheduleItem>& items) {
    const std::size_t hits = count_hits(items);
    if (hits == 0) throw NumericError("first-half fraction undefined: no critical violations");

    std::unordered_map<std::int64_t, int> label_of;
    for (const auto& item : items) label_of[item.inspection_id] = item.label;

    const std::size_t half = (schedule.ordering.size() + 1) / 2;
    std::size_t in_first_half = 0;
    for (std::size_t p = 0; p < half && p < schedule.ordering.size(); ++p)
        in_first_half += label_of.at(schedule.ordering[p]) == 1;
    return static_cast<double>(in_first_half) / static_cast<double>(hits);
}

std::vector<HitCurvePoint> hit_curve(const Schedule& schedule,
                                     const std::vector<ScheduleItem>& items) {
    std::unordered_map<std::int64_t, int> label_of;
    for (const auto& item : items) label_of[item.inspection_id] = item.label;

    std::vector<HitCurvePoint> curve;
    const int days = schedule.total_days();
    curve.reserve(static_cast<std::size_t>(days));
    std::size_t cumulative = 0;
    std::size_t position = 0;
    for (int day = 1; day <= days; ++day) {
        while (position < schedule.ordering.size() &&
               schedule.day_of_position(position + 1) == day) {
            cumulative += label_of.at(schedule.ordering[position]) == 1;
            ++position;
        }
        curve.push_back({day, cumulative});
    }
    return curve;
}

ScheduleMetrics evaluate_schedule(const Schedule& schedule,
                                  const std::vector<ScheduleItem>& items) {
    const Schedule usual = make_schedule(items, Strategy::usual, nullptr, schedule.capacity);
    const auto actual_days = usual.day_by_id();
    ScheduleMetrics m;
    const DayReduction dr = day_reduction_stats(schedule, items, actual_days);
    m.mean_day_reduction = dr.mean;
    m.std_day_reduction = dr.stddev;
    m.first_half = first_half_fraction(schedule, items);
    m.curve = hit_curve(schedule, items);
    return m;
}

void write_schedule_csv(std::ostream& out, const Schedule& schedule,
                        const std::vector<ScheduleItem>& items,
                        const std::map<std::int64_t, double>* scores) {
    std::unordered_map<std::int64_t, const ScheduleItem*> by_id;
    for (const auto& item : items) by_id[item.inspection_id] = &item;
    csv::Writer w(out);
    w.row({"inspection_id", "position", "day", "score", "label"});
    for (std::size_t p = 0; p < schedule.ordering.size(); ++p) {
        const std::int64_t id = schedule.ordering[p];
        std::string score;
        if (scores) {
            auto it = scores->find(id);
            if (it != scores->end()) score = csv::format_double(it->second);
        }
        w.row({std::to_string(id), std::to_string(p + 1),
               std::to_string(schedule.day_of_position(p + 1)), score,
               std::to_string(by_id.at(id)->label)});
    }
}

void write_hit_curve_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, std::vector<HitCurvePoint>>>&
                             curves_by_strategy) {
    csv::Writer w(out);
    w.row({"strategy", "day", "cumulative_hits"});
    for (const auto& [strategy, curve] : curves_by_strategy)
        for (const auto& point : curve)
            w.row({strategy, std::to_string(point.day), std::to_string(point.cumulative_hits)});
}

void write_metrics_json(std::ostream& out,
                        const std::vector<std::pair<std::string, ScheduleMetrics>>& metrics) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [strategy, m] : metrics) {
        j[strategy] = {{"mean_day_reduction", m.mean_day_reduction},
                       {"std_day_reduction", m.std_day_reduction},
                       {"first_half_fraction", m.first_half},
                       {"total_days", m.curve.empty() ? 0 : m.curve.back().day},
                       {"total_hits", m.curve.empty() ? 0 : m.curve.back().cumulative_hits}};
    }
    out << j.dump(2) << '\n';
}

}  // namespace canvass
