#include "canvass/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace canvass {

namespace {

constexpr double kEarthRadiusMeters = 6371000.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;

void validate_kde_config(const KdeConfig& cfg) {
    if (!(cfg.bandwidth_meters > 0.0)) throw UsageError("KDE bandwidth must be positive");
    if (cfg.window_days < 1) throw UsageError("KDE window must be at least one day");
}

bool in_window(Date event_date, Date on, int window_days) {
    return event_date >= on.add_days(-window_days) && event_date < on;
}

constexpr double kGridCellDegrees = 0.01;
constexpr double kMetersPerDegreeLat = 111320.0;

std::int64_t cell_key(int cx, int cy) {
    return (static_cast<std::int64_t>(cx) << 32) |
           static_cast<std::int64_t>(static_cast<std::uint32_t>(cy));
}

int cell_of(double degrees) {
    return static_cast<int>(std::floor(degrees / kGridCellDegrees));
}

struct DateLess {
    bool operator()(const PointEvent& a, const PointEvent& b) const { return a.date < b.date; }
    bool operator()(const PointEvent& a, Date d) const { return a.date < d; }
};

double sum_window(const std::vector<PointEvent>& sorted, Date lo, Date hi, const GeoPoint& at,
                  double h, double cut) {
    auto first = std::lower_bound(sorted.begin(), sorted.end(), lo, DateLess{});
    auto last = std::lower_bound(sorted.begin(), sorted.end(), hi, DateLess{});
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
        const double d = ground_distance_meters(at, it->location);
        // Beyond 8 bandwidths the kernel is < 1.3e-14 of its peak.
        if (d > cut) continue;
        sum += kde_kernel(d, h);
    }
    return sum;
}

}  // namespace

double ground_distance_meters(const GeoPoint& a, const GeoPoint& b) {
    const double lat_a = a.lat * kDegToRad;
    const double lat_b = b.lat * kDegToRad;
    const double x = (b.lon - a.lon) * kDegToRad * std::cos(0.5 * (lat_a + lat_b));
    const double y = lat_b - lat_a;
    return kEarthRadiusMeters * std::sqrt(x * x + y * y);
}

double kde_kernel(double distance_m, double bandwidth_meters) {
    const double h2 = bandwidth_meters * bandwidth_meters;
    return std::exp(-0.5 * distance_m * distance_m / h2) / (2.0 * std::numbers::pi * h2);
}

double kde_intensity(const std::vector<PointEvent>& events, const GeoPoint& at, Date on,
                     const KdeConfig& cfg) {
    validate_kde_config(cfg);
    const double h = cfg.bandwidth_meters;
    const double cut = 8.0 * h;
    double sum = 0.0;
    for (const auto& e : events) {
        if (!in_window(e.date, on, cfg.window_days)) continue;
        const double d = ground_distance_meters(at, e.location);
        if (d > cut) continue;
        sum += kde_kernel(d, h);
    }
    return sum;
}

EventIndex::EventIndex(const std::vector<PointEvent>& events) {
    for (const auto& e : events) {
        const auto k = static_cast<std::size_t>(e.kind);
        all_[k].push_back(e);
        grid_[k][cell_key(cell_of(e.location.lat), cell_of(e.location.lon))].push_back(e);
    }
    for (auto& v : all_) std::sort(v.begin(), v.end(), DateLess{});
    for (auto& g : grid_)
        for (auto& [key, v] : g) std::sort(v.begin(), v.end(), DateLess{});
}

double EventIndex::intensity(EventKind kind, const GeoPoint& at, Date on,
                             const KdeConfig& cfg) const {
    validate_kde_config(cfg);
    const auto k = static_cast<std::size_t>(kind);
    const Date lo = on.add_days(-cfg.window_days);
    const double h = cfg.bandwidth_meters;
    const double cut = 8.0 * h;

    const double margin_lat = cut / kMetersPerDegreeLat;
    const double cos_lat = std::max(0.05, std::cos(at.lat * kDegToRad));
    const double margin_lon = cut / (kMetersPerDegreeLat * cos_lat);
    const int cx_lo = cell_of(at.lat - margin_lat), cx_hi = cell_of(at.lat + margin_lat);
    const int cy_lo = cell_of(at.lon - margin_lon), cy_hi = cell_of(at.lon + margin_lon);

    const std::int64_t cells = (static_cast<std::int64_t>(cx_hi) - cx_lo + 1) *
                               (static_cast<std::int64_t>(cy_hi) - cy_lo + 1);
    if (cells > 20000 || cells <= 0)
        return sum_window(all_[k], lo, on, at, h, cut);

    double sum = 0.0;
    const auto& grid = grid_[k];
    for (int cx = cx_lo; cx <= cx_hi; ++cx) {
        for (int cy = cy_lo; cy <= cy_hi; ++cy) {
            auto it = grid.find(cell_key(cx, cy));
            if (it == grid.end()) continue;
            sum += sum_window(it->second, lo, on, at, h, cut);
        }
    }
    return sum;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "past_serious",   "past_critical",  "time_since_last", "age_over_4y",
        "alcohol",        "tobacco",        "tmax_f",          "burglary_kde",
        "sanitation_kde", "garbage_kde",    "cluster_purple",  "cluster_blue",
        "cluster_orange", "cluster_green",  "cluster_yellow",  "cluster_brown"};
    return names;
}

std::array<double, kFeatureCount> feature_values(const FeatureVector& fv) {
    return {fv.past_serious,   fv.past_critical,     fv.time_since_last,   fv.age_over_4y,
            fv.alcohol,        fv.tobacco,           fv.tmax_f,            fv.burglary_kde,
            fv.sanitation_kde, fv.garbage_kde,       fv.cluster_onehot[0], fv.cluster_onehot[1],
            fv.cluster_onehot[2], fv.cluster_onehot[3], fv.cluster_onehot[4],
            fv.cluster_onehot[5]};
}

FeatureVector feature_vector_from_values(const std::array<double, kFeatureCount>& v) {
    FeatureVector fv;
    fv.past_serious = v[0];
    fv.past_critical = v[1];
    fv.time_since_last = v[2];
    fv.age_over_4y = v[3];
    fv.alcohol = v[4];
    fv.tobacco = v[5];
    fv.tmax_f = v[6];
    fv.burglary_kde = v[7];
    fv.sanitation_kde = v[8];
    fv.garbage_kde = v[9];
    for (int c = 0; c < kClusterCount; ++c) fv.cluster_onehot[c] = v[10 + c];
    return fv;
}

LicenseMap index_licenses(const std::vector<LicenseInfo>& licenses) {
    LicenseMap out;
    for (const auto& li : licenses) out[li.establishment_id] = li;
    return out;
}

FeatureVector build_feature_vector(const LinkedInspection& link, const LicenseMap& licenses,
                                   const WeatherSeries& weather, const EventIndex& events,
                                   const FeatureOptions& opts, FeatureBuildStats* stats) {
    const InspectionRecord& cur = link.current;
    FeatureVector fv;

    if (link.previous) {
        const auto& prev = *link.previous;
        for (ViolationCode code : prev.violations) {
            const Severity s = severity_of(code);
            if (s == Severity::serious) fv.past_serious = 1.0;
            if (s == Severity::critical) fv.past_critical = 1.0;
        }
        fv.time_since_last = fractional_years(prev.date, cur.date);
        if (prev.cluster)
            fv.cluster_onehot[static_cast<std::size_t>(*prev.cluster)] = 1.0;
    } else {
        fv.time_since_last = opts.time_since_default;
    }

    auto lic = licenses.find(cur.establishment_id);
    if (lic != licenses.end()) {
        fv.age_over_4y = fractional_years(lic->second.license_start, cur.date) > 4.0 ? 1.0 : 0.0;
        fv.alcohol = lic->second.has_alcohol ? 1.0 : 0.0;
        fv.tobacco = lic->second.has_tobacco ? 1.0 : 0.0;
    } else if (opts.allow_missing_license) {
        if (stats) {
            ++stats->missing_license;
            stats->warnings.push_back("no license for establishment " + cur.establishment_id +
                                      "; age/alcohol/tobacco set to 0");
        }
    } else {
        throw DataError("no license record for establishment " + cur.establishment_id);
    }

    auto wx = weather.find(cur.date);
    if (wx == weather.end())
        throw DataError("no weather observation for " + cur.date.to_string());
    fv.tmax_f = wx->second;

    fv.burglary_kde = events.intensity(EventKind::burglary, cur.location, cur.date, opts.kde);
    fv.sanitation_kde =
        events.intensity(EventKind::sanitation_complaint, cur.location, cur.date, opts.kde);
    fv.garbage_kde =
        events.intensity(EventKind::garbage_cart_request, cur.location, cur.date, opts.kde);
    return fv;
}

LabeledInstance build_instance(const LinkedInspection& link, const LicenseMap& licenses,
                               const WeatherSeries& weather, const EventIndex& events,
                               const FeatureOptions& opts, FeatureBuildStats* stats) {
    LabeledInstance inst;
    inst.features = build_feature_vector(link, licenses, weather, events, opts, stats);
    inst.label = target_label(link.current);
    inst.inspection_id = link.current.inspection_id;
    inst.date = link.current.date;
    if (link.previous) {
        inst.prev_sanitarian = link.previous->sanitarian;
        inst.prev_cluster = link.previous->cluster;
    }
    return inst;
}

std::vector<LabeledInstance> build_instances(const std::vector<LinkedInspection>& links,
                                             const LicenseMap& licenses,
                                             const WeatherSeries& weather,
                                             const EventIndex& events, const FeatureOptions& opts,
                                             FeatureBuildStats* stats) {
    std::vector<LabeledInstance> out;
    out.reserve(links.size());
    for (const auto& link : links)
        out.push_back(build_instance(link, licenses, weather, events, opts, stats));
    return out;
}

DatasetSplit build_dataset(const std::vector<LinkedInspection>& links, const LicenseMap& licenses,
                           const WeatherSeries& weather, const EventIndex& events,
                           const FeatureOptions& opts, const DateWindow& train_window,
                           const DateWindow& test_window) {
    if (train_window.start > train_window.end || test_window.start > test_window.end)
        throw UsageError("window start is after end");
    if (train_window.end >= test_window.start)
        throw UsageError("train window must end before the test window starts");

    DatasetSplit split;
    for (const auto& link : links) {
        const Date d = link.current.date;
        const bool in_train = d >= train_window.start && d <= train_window.end;
        const bool in_test = d >= test_window.start && d <= test_window.end;
        if (!in_train && !in_test) continue;
        LabeledInstance inst =
            build_instance(link, licenses, weather, events, opts, &split.stats);
        (in_train ? split.train : split.test).push_back(std::move(inst));
    }

    auto positive_rate = [](const std::vector<LabeledInstance>& v) {
        if (v.empty()) return 0.0;
        std::size_t pos = 0;
        for (const auto& i : v) pos += i.label;
        return static_cast<double>(pos) / static_cast<double>(v.size());
    };
    split.train_positive_rate = positive_rate(split.train);
    split.test_positive_rate = positive_rate(split.test);
    return split;
}

void write_features_csv(std::ostream& out, const std::vector<LabeledInstance>& instances) {
    csv::Writer w(out);
    std::vector<std::string> header = {"inspection_id", "date", "label"};
    for (const auto& n : feature_names()) header.push_back(n);
    header.push_back("prev_sanitarian");
    header.push_back("prev_cluster");
    w.row(header);
    for (const auto& inst : instances) {
        std::vector<std::string> row = {std::to_string(inst.inspection_id),
                                        inst.date.to_string(), std::to_string(inst.label)};
        for (double v : feature_values(inst.features)) row.push_back(csv::format_double(v));
        row.push_back(inst.prev_sanitarian);
        row.push_back(inst.prev_cluster ? to_string(*inst.prev_cluster) : "");
        w.row(row);
    }
}

std::vector<LabeledInstance> read_features_csv(const csv::Table& table) {
    const std::size_t id_col = table.column("inspection_id");
    const std::size_t date_col = table.column("date");
    const std::size_t label_col = table.column("label");
    std::array<std::size_t, kFeatureCount> feat_cols{};
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        feat_cols[i] = table.column(feature_names()[i]);
    std::optional<std::size_t> sanitarian_col, cluster_col;
    if (table.has_column("prev_sanitarian")) sanitarian_col = table.column("prev_sanitarian");
    if (table.has_column("prev_cluster")) cluster_col = table.column("prev_cluster");

    std::vector<LabeledInstance> out;
    out.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::size_t file_row = table.file_row(r);
        auto number = [&](std::size_t col) {
            return csv::to_double(table.cell(r, col), "number in row " + std::to_string(file_row));
        };
        LabeledInstance inst;
        inst.inspection_id = csv::to_int(table.cell(r, id_col),
                                         "inspection_id in row " + std::to_string(file_row));
        inst.date = Date::parse(table.cell(r, date_col));
        const double label = number(label_col);
        if (label != 0.0 && label != 1.0)
            throw DataError("row " + std::to_string(file_row) + ": label must be 0 or 1");
        inst.label = static_cast<int>(label);
        std::array<double, kFeatureCount> values{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) values[i] = number(feat_cols[i]);
        inst.features = feature_vector_from_values(values);
        if (sanitarian_col) inst.prev_sanitarian = table.cell(r, *sanitarian_col);
        if (cluster_col) {
            const std::string& raw = table.cell(r, *cluster_col);
            if (!raw.empty()) inst.prev_cluster = cluster_from_string(raw);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<LabeledInstance> read_features_file(const std::string& path) {
    return read_features_csv(csv::parse_file(path));
}

}  // namespace canvass
