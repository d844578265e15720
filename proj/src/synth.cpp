#include "canvass/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "canvass/audit.hpp"
#include "canvass/model.hpp"
#include "json.hpp"

namespace canvass {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// One independent stream per purpose; draws in one stage never shift the
// streams of another. All distributions are built from raw engine bits so
// output is identical across standard libraries.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, const std::string& purpose)
        : rng_(splitmix64(seed ^ fnv1a(purpose))) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = rng_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 30.0) {
            const double draw = std::round(lambda + std::sqrt(lambda) * normal());
            return draw < 0.0 ? 0 : static_cast<std::size_t>(draw);
        }
        const double limit = std::exp(-lambda);
        std::size_t k = 0;
        double product = uniform();
        while (product > limit) {
            ++k;
            product *= uniform();
        }
        return k;
    }

  private:
    std::mt19937_64 rng_;
};

struct Establishment {
    std::string id;
    GeoPoint location;
    std::string chain;
};

int day_of_year(Date d) {
    return static_cast<int>(d - Date::from_ymd(d.year(), 1, 1)) + 1;
}

std::string padded(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

}  // namespace

SynthBundle generate(const SynthConfig& config) {
    if (config.n_establishments == 0 || config.n_inspections == 0 ||
        config.n_sanitarians == 0)
        throw UsageError("synth: establishment, inspection and sanitarian counts must be positive");
    if (config.range_start >= config.range_end)
        throw UsageError("synth: date range is empty");

    SynthBundle bundle;
    const std::uint64_t seed = config.seed;

    // Establishments and licenses.
    RandomStream est_rng(seed, "establishments");
    std::vector<Establishment> establishments;
    establishments.reserve(config.n_establishments);
    for (std::size_t i = 0; i < config.n_establishments; ++i) {
        Establishment e;
        e.id = padded("est_", i + 1, 6);
        e.location.lat = est_rng.uniform(41.70, 41.99);
        e.location.lon = est_rng.uniform(-87.80, -87.58);
        if (est_rng.bernoulli(config.chain_fraction) && config.n_chains > 0)
            e.chain = padded("chain_", est_rng.below(config.n_chains) + 1, 2);

        LicenseInfo li;
        li.establishment_id = e.id;
        li.license_start = config.range_start.add_days(
            -static_cast<std::int64_t>(est_rng.below(8 * 365)) - 1);
        li.has_alcohol = est_rng.bernoulli(0.35);
        li.has_tobacco = est_rng.bernoulli(0.15);
        bundle.licenses.push_back(li);
        establishments.push_back(std::move(e));
    }

    // Sanitarians cycle through the six clusters.
    std::vector<std::string> sanitarians;
    std::vector<ClusterLabel> sanitarian_cluster;
    for (std::size_t i = 0; i < config.n_sanitarians; ++i) {
        sanitarians.push_back(padded("san_", i + 1, 3));
        sanitarian_cluster.push_back(all_cluster_labels()[i % kClusterCount]);
        bundle.manifest.sanitarian_clusters[sanitarians.back()] =
            to_string(sanitarian_cluster.back());
    }

    // Daily weather: seasonal sinusoid plus noise.
    RandomStream weather_rng(seed, "weather");
    for (Date d = config.range_start; d <= config.range_end; d = d.add_days(1)) {
        const double phase =
            2.0 * std::numbers::pi * (day_of_year(d) - 105) / kDaysPerYear;
        bundle.weather[d] = 55.0 + 28.0 * std::sin(phase) + weather_rng.uniform(-6.0, 6.0);
    }
    const std::map<int, double> monthly_temps = monthly_average_temperature(bundle.weather);

    // Point events, placed at establishment coordinates so intensities are
    // unit-scale own-event counts under the sub-meter default bandwidth.
    RandomStream event_rng(seed, "events");
    const Date event_start = config.range_start.add_days(-config.kde.window_days - 1);
    const std::int64_t event_days = config.range_end - event_start + 1;
    for (int k = 0; k < 3; ++k) {
        const double lambda = config.event_rates[static_cast<std::size_t>(k)] *
                              static_cast<double>(config.n_establishments) *
                              static_cast<double>(event_days);
        const std::size_t total = event_rng.poisson(lambda);
        bundle.manifest.events_per_kind[static_cast<std::size_t>(k)] = total;
        for (std::size_t i = 0; i < total; ++i) {
            PointEvent e;
            e.kind = static_cast<EventKind>(k);
            e.date = event_start.add_days(
                static_cast<std::int64_t>(event_rng.below(static_cast<std::uint64_t>(event_days))));
            e.location = establishments[event_rng.below(config.n_establishments)].location;
            bundle.events.push_back(e);
        }
    }

    // Inspection skeleton: per-establishment renewal process, oversampled
    // then thinned to the requested count.
    RandomStream schedule_rng(seed, "schedule");
    const double range_days = static_cast<double>(config.range_end - config.range_start);
    const double mean_gap =
        std::max(2.0, range_days * static_cast<double>(config.n_establishments) /
                          (1.3 * static_cast<double>(config.n_inspections)));
    struct Slot {
        std::size_t est;
        Date date;
    };
    std::vector<Slot> pool;
    for (std::size_t e = 0; e < config.n_establishments; ++e) {
        double offset = schedule_rng.uniform(0.0, mean_gap);
        while (offset <= range_days) {
            pool.push_back({e, config.range_start.add_days(static_cast<std::int64_t>(offset))});
            offset += schedule_rng.uniform(0.15 * mean_gap, 1.85 * mean_gap);
        }
    }
    if (pool.size() < config.n_inspections)
        throw DataError("synth: pool of " + std::to_string(pool.size()) +
                        " candidate inspections is below the requested " +
                        std::to_string(config.n_inspections) +
                        "; widen the date range or add establishments");
    RandomStream thin_rng(seed, "thinning");
    for (std::size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[thin_rng.below(i)]);
    pool.resize(config.n_inspections);
    std::sort(pool.begin(), pool.end(), [](const Slot& a, const Slot& b) {
        if (a.date != b.date) return a.date < b.date;
        return a.est < b.est;
    });

    // Assign kinds and sanitarians, then walk chronologically planting
    // labels from the true model.
    RandomStream kind_rng(seed, "kinds");
    RandomStream san_rng(seed, "sanitarians");
    RandomStream label_rng(seed, "labels");
    RandomStream code_rng(seed, "codes");

    const LicenseMap license_map = index_licenses(bundle.licenses);
    const EventIndex event_index(bundle.events);
    FeatureOptions fopts;
    fopts.kde = config.kde;
    fopts.time_since_default = config.time_since_default;

    std::map<std::string, InspectionRecord> last_canvass;
    double probability_sum = 0.0;
    std::size_t canvass_n = 0;

    auto coef = [&](const char* name) {
        auto it = config.true_coefficients.find(name);
        if (it == config.true_coefficients.end())
            throw UsageError(std::string("synth: true_coefficients lacks '") + name + "'");
        return it->second;
    };

    auto sample_codes = [&](bool hit, Date on) {
        std::set<ViolationCode> codes;
        if (hit) {
            const double t = monthly_temps.at(on.month_key()) - 58.0;
            if (code_rng.bernoulli(sigmoid(-0.2 + config.temperature_effect * t)))
                codes.insert(3);
            if (code_rng.bernoulli(sigmoid(-0.8 + config.temperature_effect * t)))
                codes.insert(2);
            if (code_rng.bernoulli(0.35))
                codes.insert(static_cast<ViolationCode>(code_rng.below(14) + 1));
            if (codes.empty())
                codes.insert(static_cast<ViolationCode>(code_rng.below(14) + 1));
        }
        if (code_rng.bernoulli(0.30))
            codes.insert(static_cast<ViolationCode>(code_rng.below(15) + 15));
        if (code_rng.bernoulli(0.45))
            codes.insert(static_cast<ViolationCode>(code_rng.below(16) + 30));
        return codes;
    };

    bundle.inspections.reserve(config.n_inspections);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Establishment& est = establishments[pool[i].est];
        InspectionRecord rec;
        rec.inspection_id = static_cast<std::int64_t>(1000001 + i);
        rec.establishment_id = est.id;
        rec.name = "Establishment " + std::to_string(pool[i].est + 1);
        rec.chain_key = est.chain;
        rec.facility_type = "restaurant";
        rec.location = est.location;
        rec.date = pool[i].date;
        rec.kind = kind_rng.bernoulli(config.complaint_fraction) ? InspectionKind::complaint
                                                                 : InspectionKind::canvass;
        const std::size_t sanitarian = san_rng.below(config.n_sanitarians);
        rec.sanitarian = sanitarians[sanitarian];
        rec.cluster = sanitarian_cluster[sanitarian];

        if (rec.kind == InspectionKind::canvass) {
            LinkedInspection link{rec, std::nullopt};
            auto prev = last_canvass.find(est.id);
            if (prev != last_canvass.end()) link.previous = prev->second;
            const FeatureVector fv =
                build_feature_vector(link, license_map, bundle.weather, event_index, fopts);

            double z = config.true_intercept;
            z += coef("past_serious") * fv.past_serious;
            z += coef("past_critical") * fv.past_critical;
            z += coef("time_since_last") * fv.time_since_last;
            z += coef("age_over_4y") * fv.age_over_4y;
            z += coef("alcohol") * fv.alcohol;
            z += coef("tobacco") * fv.tobacco;
            z += coef("tmax_f") * fv.tmax_f;
            z += coef("burglary_kde") * fv.burglary_kde;
            z += coef("sanitation_kde") * fv.sanitation_kde;
            z += coef("garbage_kde") * fv.garbage_kde;
            for (int c = 0; c < kClusterCount; ++c)
                z += config.cluster_effects[static_cast<std::size_t>(c)] *
                     fv.cluster_onehot[static_cast<std::size_t>(c)];

            const double p = sigmoid(z);
            if (p < 1e-6 || p > 1.0 - 1e-6)
                throw DataError("synth: degenerate label probability " + csv::format_double(p) +
                                " at inspection " + std::to_string(rec.inspection_id));
            probability_sum += p;
            ++canvass_n;

            const bool hit = label_rng.bernoulli(p);
            rec.violations = sample_codes(hit, rec.date);
            last_canvass[est.id] = rec;
        } else {
            rec.violations = sample_codes(label_rng.bernoulli(0.25), rec.date);
        }
        bundle.inspections.push_back(std::move(rec));
    }

    // Tallies.
    auto& m = bundle.manifest;
    m.total_inspections = bundle.inspections.size();
    for (const auto& rec : bundle.inspections) {
        const bool canvass = rec.kind == InspectionKind::canvass;
        const int hit = target_label(rec);
        m.canvass_count += canvass;
        m.complaint_count += !canvass;
        if (!canvass) continue;
        m.canvass_positives += hit;
        if (rec.date >= config.train_window.start && rec.date <= config.train_window.end) {
            ++m.train_canvass;
            m.train_positives += hit;
        } else if (rec.date >= config.test_window.start && rec.date <= config.test_window.end) {
            ++m.test_canvass;
            m.test_positives += hit;
        }
    }
    m.canvass_positive_rate =
        m.canvass_count ? static_cast<double>(m.canvass_positives) / m.canvass_count : 0.0;
    m.mean_true_probability = canvass_n ? probability_sum / static_cast<double>(canvass_n) : 0.0;
    return bundle;
}

void write_bundle(const std::string& dir, const SynthBundle& bundle, const SynthConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw DataError(std::string("cannot write ") + name + " under " + dir);
        return out;
    };
    {
        auto out = open("inspections.csv");
        write_inspections_csv(out, bundle.inspections);
    }
    {
        auto out = open("licenses.csv");
        write_licenses_csv(out, bundle.licenses);
    }
    {
        auto out = open("weather.csv");
        write_weather_csv(out, bundle.weather);
    }
    {
        auto out = open("events.csv");
        write_events_csv(out, bundle.events);
    }

    nlohmann::ordered_json j;
    j["seed"] = config.seed;
    j["n_establishments"] = config.n_establishments;
    j["n_inspections"] = config.n_inspections;
    j["n_sanitarians"] = config.n_sanitarians;
    j["complaint_fraction"] = config.complaint_fraction;
    j["date_range"] = {config.range_start.to_string(), config.range_end.to_string()};
    j["train_window"] = {config.train_window.start.to_string(),
                         config.train_window.end.to_string()};
    j["test_window"] = {config.test_window.start.to_string(),
                        config.test_window.end.to_string()};
    nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
    for (const auto& name : feature_names()) {
        auto it = config.true_coefficients.find(name);
        if (it != config.true_coefficients.end()) coefs[name] = it->second;
    }
    for (int c = 0; c < kClusterCount; ++c)
        coefs["cluster_" + to_string(all_cluster_labels()[static_cast<std::size_t>(c)])] =
            config.cluster_effects[static_cast<std::size_t>(c)];
    j["true_coefficients"] = coefs;
    j["true_intercept"] = config.true_intercept;
    j["temperature_effect"] = config.temperature_effect;
    j["kde"] = {{"bandwidth_meters", config.kde.bandwidth_meters},
                {"window_days", config.kde.window_days}};
    j["time_since_default"] = config.time_since_default;

    const auto& m = bundle.manifest;
    j["counts"] = {{"total_inspections", m.total_inspections},
                   {"canvass", m.canvass_count},
                   {"complaint", m.complaint_count},
                   {"train_canvass", m.train_canvass},
                   {"test_canvass", m.test_canvass},
                   {"train_positives", m.train_positives},
                   {"test_positives", m.test_positives},
                   {"canvass_positives", m.canvass_positives},
                   {"canvass_positive_rate", m.canvass_positive_rate},
                   {"mean_true_probability", m.mean_true_probability},
                   {"events_burglary", m.events_per_kind[0]},
                   {"events_sanitation_complaint", m.events_per_kind[1]},
                   {"events_garbage_cart_request", m.events_per_kind[2]}};
    nlohmann::ordered_json clusters = nlohmann::ordered_json::object();
    for (const auto& [id, label] : m.sanitarian_clusters) clusters[id] = label;
    j["sanitarian_clusters"] = clusters;

    auto out = open("manifest.json");
    out << j.dump(2) << '\n';
}

}  // namespace canvass
