#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/csv.hpp"
#include "canvass/ingest.hpp"

namespace canvass {

struct KdeConfig {
    double bandwidth_meters = 1000.0;
    int window_days = 90;
    // kernel: isotropic bivariate Gaussian (the only option)
};

/// Equirectangular ground distance in meters; error < 0.1% at city scale.
double ground_distance_meters(const GeoPoint& a, const GeoPoint& b);

/// Gaussian kernel value for a single event at distance_m from the query.
double kde_kernel(double distance_m, double bandwidth_meters);

/// Sum of kernel values over events inside the half-open date window
/// [on - window_days, on). Events of other kinds in the list are ignored
/// when a kind filter is supplied.
double kde_intensity(const std::vector<PointEvent>& events, const GeoPoint& at, Date on,
                     const KdeConfig& cfg);

/// Per-kind event store bucketed on a 0.01-degree grid with date-sorted
/// cells, for repeated intensity queries over large event streams. Results
/// match kde_intensity up to summation order.
class EventIndex {
  public:
    explicit EventIndex(const std::vector<PointEvent>& events);
    double intensity(EventKind kind, const GeoPoint& at, Date on, const KdeConfig& cfg) const;

  private:
    std::array<std::map<std::int64_t, std::vector<PointEvent>>, 3> grid_;
    std::array<std::vector<PointEvent>, 3> all_;  // date-sorted fallback
};

/// The 16 model predictors. Cluster indicators refer to the sanitarian
/// cluster of the establishment's previous canvass inspection.
struct FeatureVector {
    double past_serious = 0.0;
    double past_critical = 0.0;
    double time_since_last = 0.0;
    double age_over_4y = 0.0;
    double alcohol = 0.0;
    double tobacco = 0.0;
    double tmax_f = 0.0;
    double burglary_kde = 0.0;
    double sanitation_kde = 0.0;
    double garbage_kde = 0.0;
    std::array<double, kClusterCount> cluster_onehot{};  // purple..brown
};

inline constexpr std::size_t kFeatureCount = 16;

/// Canonical feature order used everywhere a matrix or model is built.
const std::vector<std::string>& feature_names();
std::array<double, kFeatureCount> feature_values(const FeatureVector& fv);
FeatureVector feature_vector_from_values(const std::array<double, kFeatureCount>& values);

struct LabeledInstance {
    FeatureVector features;
    int label = 0;
    std::int64_t inspection_id = 0;
    Date date;
    std::string prev_sanitarian;  // empty when no previous inspection
    std::optional<ClusterLabel> prev_cluster;
};

using LicenseMap = std::map<std::string, LicenseInfo>;
LicenseMap index_licenses(const std::vector<LicenseInfo>& licenses);

struct FeatureOptions {
    KdeConfig kde;
    double time_since_default = 2.0;  // years; longest routine cycle
    bool allow_missing_license = false;
};

struct FeatureBuildStats {
    std::size_t missing_license = 0;
    std::vector<std::string> warnings;
};

/// Builds one instance's predictors. Weather for the inspection date is
/// mandatory; a missing license is an error unless allow_missing_license,
/// in which case age/alcohol/tobacco default to 0.
FeatureVector build_feature_vector(const LinkedInspection& link, const LicenseMap& licenses,
                                   const WeatherSeries& weather, const EventIndex& events,
                                   const FeatureOptions& opts,
                                   FeatureBuildStats* stats = nullptr);

LabeledInstance build_instance(const LinkedInspection& link, const LicenseMap& licenses,
                               const WeatherSeries& weather, const EventIndex& events,
                               const FeatureOptions& opts, FeatureBuildStats* stats = nullptr);

struct DateWindow {
    Date start;
    Date end;  // inclusive
};

struct DatasetSplit {
    std::vector<LabeledInstance> train;
    std::vector<LabeledInstance> test;
    double train_positive_rate = 0.0;
    double test_positive_rate = 0.0;
    FeatureBuildStats stats;
};

/// Labeled train/test matrices over canvass links inside each window.
/// Windows must be disjoint with train before test.
DatasetSplit build_dataset(const std::vector<LinkedInspection>& links, const LicenseMap& licenses,
                           const WeatherSeries& weather, const EventIndex& events,
                           const FeatureOptions& opts, const DateWindow& train_window,
                           const DateWindow& test_window);

std::vector<LabeledInstance> build_instances(const std::vector<LinkedInspection>& links,
                                             const LicenseMap& licenses,
                                             const WeatherSeries& weather,
                                             const EventIndex& events, const FeatureOptions& opts,
                                             FeatureBuildStats* stats = nullptr);

void write_features_csv(std::ostream& out, const std::vector<LabeledInstance>& instances);
std::vector<LabeledInstance> read_features_csv(const csv::Table& table);
std::vector<LabeledInstance> read_features_file(const std::string& path);

}  // namespace canvass
