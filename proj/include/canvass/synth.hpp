#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/features.hpp"
#include "canvass/ingest.hpp"

namespace canvass {

/// Ground-truth parameters for the synthetic mini-city. Events are emitted
/// at establishment coordinates, so with the sub-meter default bandwidth
/// each intensity feature is a unit-scale count of the establishment's own
/// events in the window; that keeps every planted coefficient recoverable.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t n_establishments = 400;
    std::size_t n_inspections = 500;
    std::size_t n_sanitarians = 18;
    double complaint_fraction = 0.15;
    double chain_fraction = 0.25;  // establishments belonging to a named chain
    std::size_t n_chains = 20;

    Date range_start = Date::from_ymd(2011, 9, 1);
    Date range_end = Date::from_ymd(2014, 10, 31);
    DateWindow train_window{Date::from_ymd(2011, 9, 1), Date::from_ymd(2014, 4, 30)};
    DateWindow test_window{Date::from_ymd(2014, 9, 1), Date::from_ymd(2014, 10, 31)};

    // Planted model: the ten contextual coefficients by canonical feature
    // name plus the six cluster effects (purple..brown) applied through the
    // previous inspection's sanitarian cluster.
    std::map<std::string, double> true_coefficients = {
        {"past_serious", 0.302},  {"past_critical", 0.427}, {"time_since_last", 0.097},
        {"age_over_4y", -0.164},  {"alcohol", 0.411},       {"tobacco", 0.171},
        {"tmax_f", 0.005},        {"burglary_kde", 0.002},  {"sanitation_kde", 0.002},
        {"garbage_kde", -0.004}};
    double true_intercept = -2.5;
    std::array<double, kClusterCount> cluster_effects = {1.555, 0.950, 0.202,
                                                         -0.244, -0.697, -1.306};
    // Log-odds of citing V2/V3 (given a hit) per degree of monthly average
    // temperature above 58F.
    double temperature_effect = 0.03;

    // Expected events per establishment per day, by kind.
    std::array<double, 3> event_rates = {0.016, 0.014, 0.012};

    KdeConfig kde{0.5, 90};
    double time_since_default = 2.0;
};

struct SynthManifest {
    std::size_t total_inspections = 0;
    std::size_t canvass_count = 0;
    std::size_t complaint_count = 0;
    std::size_t train_canvass = 0;
    std::size_t test_canvass = 0;
    std::size_t train_positives = 0;
    std::size_t test_positives = 0;
    std::size_t canvass_positives = 0;
    double canvass_positive_rate = 0.0;
    double mean_true_probability = 0.0;
    std::array<std::size_t, 3> events_per_kind{};
    std::map<std::string, std::string> sanitarian_clusters;
};

struct SynthBundle {
    std::vector<InspectionRecord> inspections;
    std::vector<LicenseInfo> licenses;
    WeatherSeries weather;
    std::vector<PointEvent> events;
    SynthManifest manifest;
};

/// Deterministic generation from the seed: one sub-stream per purpose, so
/// adding draws to one stage cannot perturb another. Throws DataError when
/// the config implies degenerate label probabilities.
SynthBundle generate(const SynthConfig& config);

/// Writes inspections.csv, licenses.csv, weather.csv, events.csv and
/// manifest.json under dir (created if missing).
void write_bundle(const std::string& dir, const SynthBundle& bundle, const SynthConfig& config);

}  // namespace canvass
