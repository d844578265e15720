#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/csv.hpp"

namespace canvass {

struct LicenseInfo {
    std::string establishment_id;
    Date license_start;
    bool has_alcohol = false;
    bool has_tobacco = false;
};

enum class EventKind { burglary, sanitation_complaint, garbage_cart_request };

std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct PointEvent {
    EventKind kind = EventKind::burglary;
    Date date;
    GeoPoint location;
};

/// date -> daily high temperature (F). One observation per date.
using WeatherSeries = std::map<Date, double>;

/// A canvass inspection joined with the establishment's most recent strictly
/// earlier canvass inspection, when one exists.
struct LinkedInspection {
    InspectionRecord current;
    std::optional<InspectionRecord> previous;
};

struct IngestOptions {
    Date cutoff = Date::from_ymd(2018, 7, 1);  // rows on/after this date are dropped
};

struct InspectionParseStats {
    std::size_t rows_read = 0;
    std::size_t dropped_after_cutoff = 0;
    std::size_t unknown_type_count = 0;
    std::vector<std::string> warnings;
};

/// Splits the violations field on '|' and reads the leading integer code of
/// each entry; text after the code (including " - Comments:" tails) is
/// discarded. Codes outside 1..45 or entries without a leading integer raise
/// DataError naming the entry index.
std::set<ViolationCode> parse_violation_field(const std::string& text);

/// Canonical schema: inspection_id, establishment_id, name, chain_key,
/// facility_type, lat, lon, inspection_date, inspection_type, violations,
/// sanitarian_id, cluster. City of Chicago portal exports ("Inspection ID",
/// "License #", ...) are detected by header and remapped.
std::vector<InspectionRecord> parse_inspections(const csv::Table& table,
                                                const IngestOptions& opts,
                                                InspectionParseStats* stats = nullptr);
std::vector<InspectionRecord> parse_inspections_file(const std::string& path,
                                                     const IngestOptions& opts,
                                                     InspectionParseStats* stats = nullptr);

std::vector<LicenseInfo> parse_licenses(const csv::Table& table);
std::vector<LicenseInfo> parse_licenses_file(const std::string& path);

WeatherSeries parse_weather(const csv::Table& table);
WeatherSeries parse_weather_file(const std::string& path);

std::vector<PointEvent> parse_events(const csv::Table& table);
std::vector<PointEvent> parse_events_file(const std::string& path);

struct LinkStats {
    std::size_t same_date_ties = 0;
    std::vector<std::string> warnings;
};

/// Pairs every canvass record with the most recent strictly earlier canvass
/// record of the same establishment. Records of an establishment are ordered
/// by (date, inspection_id); same-date canvass pairs are counted as ties and
/// warned about. Output is sorted by (date, inspection_id).
std::vector<LinkedInspection> link_previous_inspections(
    const std::vector<InspectionRecord>& records, LinkStats* stats = nullptr);

/// Records with start <= date <= end, optionally restricted to one kind.
std::vector<InspectionRecord> filter_window(const std::vector<InspectionRecord>& records,
                                            Date start, Date end,
                                            std::optional<InspectionKind> kind = std::nullopt);

// Canonical-format writers; parse(write(x)) is a fixpoint.
void write_inspections_csv(std::ostream& out, const std::vector<InspectionRecord>& records);
void write_licenses_csv(std::ostream& out, const std::vector<LicenseInfo>& licenses);
void write_weather_csv(std::ostream& out, const WeatherSeries& weather);
void write_events_csv(std::ostream& out, const std::vector<PointEvent>& events);

std::string serialize_violations(const std::set<ViolationCode>& codes);

}  // namespace canvass
