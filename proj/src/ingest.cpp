#include "canvass/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ostream>
#include <unordered_map>

namespace canvass {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Collapses runs of whitespace so the alias table can be exact-match.
std::string normalize_type(const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (char raw : trim(s)) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

const std::unordered_map<std::string, InspectionKind>& type_alias_table() {
    static const std::unordered_map<std::string, InspectionKind> table = {
        {"canvass", InspectionKind::canvass},
        {"canvas", InspectionKind::canvass},
        {"complaint", InspectionKind::complaint},
        {"short form complaint", InspectionKind::complaint},
        {"suspected food poisoning", InspectionKind::complaint},
        {"license", InspectionKind::license},
        {"license task force", InspectionKind::license},
        {"reinspection", InspectionKind::reinspection},
        {"re-inspection", InspectionKind::reinspection},
        {"canvass re-inspection", InspectionKind::reinspection},
        {"complaint re-inspection", InspectionKind::reinspection},
        {"license re-inspection", InspectionKind::reinspection},
        {"short form fire-complaint", InspectionKind::complaint},
        {"suspected food poisoning re-inspection", InspectionKind::reinspection},
    };
    return table;
}

double parse_double(const std::string& raw, const std::string& what, std::size_t file_row) {
    const std::string s = trim(raw);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(file_row) + ": bad " + what + " '" + raw + "'");
    return v;
}

std::int64_t parse_int(const std::string& raw, const std::string& what, std::size_t file_row) {
    const std::string s = trim(raw);
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(file_row) + ": bad " + what + " '" + raw + "'");
    return v;
}

// Accepts YYYY-MM-DD everywhere and MM/DD/YYYY in portal exports.
Date parse_date_flexible(const std::string& raw, std::size_t file_row) {
    const std::string s = trim(raw);
    try {
        if (s.size() == 10 && s[2] == '/' && s[5] == '/')
            return Date::parse(s.substr(6, 4) + "-" + s.substr(0, 2) + "-" + s.substr(3, 2));
        return Date::parse(s);
    } catch (const DataError& e) {
        throw DataError("row " + std::to_string(file_row) + ": " + e.what());
    }
}

struct ColumnMap {
    std::size_t inspection_id, establishment_id, name, facility_type;
    std::size_t lat, lon, date, type, violations;
    std::optional<std::size_t> chain_key, sanitarian, cluster;
};

ColumnMap canonical_columns(const csv::Table& t) {
    ColumnMap m{t.column("inspection_id"),
                t.column("establishment_id"),
                t.column("name"),
                t.column("facility_type"),
                t.column("lat"),
                t.column("lon"),
                t.column("inspection_date"),
                t.column("inspection_type"),
                t.column("violations"),
                {},
                {},
                {}};
    m.chain_key = t.column("chain_key");
    if (t.has_column("sanitarian_id")) m.sanitarian = t.column("sanitarian_id");
    if (t.has_column("cluster")) m.cluster = t.column("cluster");
    return m;
}

ColumnMap portal_columns(const csv::Table& t) {
    ColumnMap m{t.column("Inspection ID"),
                t.column("License #"),
                t.column("DBA Name"),
                t.column("Facility Type"),
                t.column("Latitude"),
                t.column("Longitude"),
                t.column("Inspection Date"),
                t.column("Inspection Type"),
                t.column("Violations"),
                {},
                {},
                {}};
    if (t.has_column("AKA Name")) m.chain_key = t.column("AKA Name");
    return m;
}

}  // namespace

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::burglary: return "burglary";
        case EventKind::sanitation_complaint: return "sanitation_complaint";
        case EventKind::garbage_cart_request: return "garbage_cart_request";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "burglary") return EventKind::burglary;
    if (s == "sanitation_complaint") return EventKind::sanitation_complaint;
    if (s == "garbage_cart_request") return EventKind::garbage_cart_request;
    throw DataError("unknown event kind '" + s + "'");
}

std::set<ViolationCode> parse_violation_field(const std::string& text) {
    std::set<ViolationCode> codes;
    if (trim(text).empty()) return codes;

    std::size_t start = 0;
    std::size_t index = 0;
    while (start <= text.size()) {
        std::size_t bar = text.find('|', start);
        const std::string entry =
            trim(text.substr(start, bar == std::string::npos ? bar : bar - start));
        ++index;
        if (entry.empty())
            throw DataError("violations entry " + std::to_string(index) + ": empty entry");
        int code = 0;
        auto res = std::from_chars(entry.data(), entry.data() + entry.size(), code);
        if (res.ec != std::errc{} || res.ptr == entry.data())
            throw DataError("violations entry " + std::to_string(index) +
                            ": no leading code in '" + entry.substr(0, 40) + "'");
        if (code < kMinViolationCode || code > kMaxViolationCode)
            throw DataError("violations entry " + std::to_string(index) + ": code " +
                            std::to_string(code) + " outside 1..45");
        codes.insert(code);
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return codes;
}

std::vector<InspectionRecord> parse_inspections(const csv::Table& table,
                                                const IngestOptions& opts,
                                                InspectionParseStats* stats) {
    const bool portal = table.has_column("Inspection ID");
    const ColumnMap cols = portal ? portal_columns(table) : canonical_columns(table);
    const auto& aliases = type_alias_table();

    InspectionParseStats local;
    std::vector<InspectionRecord> records;
    records.reserve(table.row_count());

    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::size_t file_row = table.file_row(r);
        ++local.rows_read;

        InspectionRecord rec;
        rec.date = parse_date_flexible(table.cell(r, cols.date), file_row);
        if (rec.date >= opts.cutoff) {
            ++local.dropped_after_cutoff;
            continue;
        }
        rec.inspection_id = parse_int(table.cell(r, cols.inspection_id), "inspection_id", file_row);
        rec.establishment_id = trim(table.cell(r, cols.establishment_id));
        if (rec.establishment_id.empty())
            throw DataError("row " + std::to_string(file_row) + ": empty establishment_id");
        rec.name = table.cell(r, cols.name);
        rec.facility_type = table.cell(r, cols.facility_type);
        rec.chain_key = cols.chain_key ? trim(table.cell(r, *cols.chain_key)) : std::string();
        rec.location.lat = parse_double(table.cell(r, cols.lat), "lat", file_row);
        rec.location.lon = parse_double(table.cell(r, cols.lon), "lon", file_row);
        if (!valid_geopoint(rec.location))
            throw DataError("row " + std::to_string(file_row) + ": lat/lon out of range");

        const std::string type_norm = normalize_type(table.cell(r, cols.type));
        auto alias = aliases.find(type_norm);
        if (alias != aliases.end()) {
            rec.kind = alias->second;
        } else {
            rec.kind = InspectionKind::other;
            ++local.unknown_type_count;
            local.warnings.push_back("row " + std::to_string(file_row) +
                                     ": unknown inspection type '" + type_norm + "'");
        }

        try {
            rec.violations = parse_violation_field(table.cell(r, cols.violations));
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(file_row) + ": " + e.what());
        }

        if (cols.sanitarian) rec.sanitarian = trim(table.cell(r, *cols.sanitarian));
        if (cols.cluster) {
            const std::string raw = lower(trim(table.cell(r, *cols.cluster)));
            if (!raw.empty()) {
                auto c = cluster_from_string(raw);
                if (!c)
                    throw DataError("row " + std::to_string(file_row) + ": unknown cluster '" +
                                    raw + "'");
                rec.cluster = c;
            }
        }
        records.push_back(std::move(rec));
    }
    if (stats) *stats = std::move(local);
    return records;
}

std::vector<InspectionRecord> parse_inspections_file(const std::string& path,
                                                     const IngestOptions& opts,
                                                     InspectionParseStats* stats) {
    return parse_inspections(csv::parse_file(path), opts, stats);
}

std::vector<LicenseInfo> parse_licenses(const csv::Table& table) {
    const std::size_t id = table.column("establishment_id");
    const std::size_t start = table.column("license_start_date");
    const std::size_t alcohol = table.column("has_alcohol");
    const std::size_t tobacco = table.column("has_tobacco");
    std::vector<LicenseInfo> out;
    out.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::size_t file_row = table.file_row(r);
        LicenseInfo li;
        li.establishment_id = trim(table.cell(r, id));
        li.license_start = parse_date_flexible(table.cell(r, start), file_row);
        li.has_alcohol = parse_int(table.cell(r, alcohol), "has_alcohol", file_row) != 0;
        li.has_tobacco = parse_int(table.cell(r, tobacco), "has_tobacco", file_row) != 0;
        out.push_back(std::move(li));
    }
    return out;
}

std::vector<LicenseInfo> parse_licenses_file(const std::string& path) {
    return parse_licenses(csv::parse_file(path));
}

WeatherSeries parse_weather(const csv::Table& table) {
    const std::size_t date = table.column("date");
    const std::size_t tmax = table.column("tmax_f");
    WeatherSeries out;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::size_t file_row = table.file_row(r);
        const Date d = parse_date_flexible(table.cell(r, date), file_row);
        const double t = parse_double(table.cell(r, tmax), "tmax_f", file_row);
        if (t < -60.0 || t > 130.0)
            throw DataError("row " + std::to_string(file_row) + ": tmax_f " +
                            csv::format_double(t) + " outside [-60, 130]");
        if (!out.emplace(d, t).second)
            throw DataError("row " + std::to_string(file_row) + ": duplicate weather date " +
                            d.to_string());
    }
    return out;
}

WeatherSeries parse_weather_file(const std::string& path) {
    return parse_weather(csv::parse_file(path));
}

std::vector<PointEvent> parse_events(const csv::Table& table) {
    const std::size_t kind = table.column("kind");
    const std::size_t date = table.column("date");
    const std::size_t lat = table.column("lat");
    const std::size_t lon = table.column("lon");
    std::vector<PointEvent> out;
    out.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::size_t file_row = table.file_row(r);
        PointEvent e;
        try {
            e.kind = event_kind_from_string(trim(table.cell(r, kind)));
        } catch (const DataError& err) {
            throw DataError("row " + std::to_string(file_row) + ": " + err.what());
        }
        e.date = parse_date_flexible(table.cell(r, date), file_row);
        e.location.lat = parse_double(table.cell(r, lat), "lat", file_row);
        e.location.lon = parse_double(table.cell(r, lon), "lon", file_row);
        if (!valid_geopoint(e.location))
            throw DataError("row " + std::to_string(file_row) + ": lat/lon out of range");
        out.push_back(e);
    }
    return out;
}

std::vector<PointEvent> parse_events_file(const std::string& path) {
    return parse_events(csv::parse_file(path));
}

std::vector<LinkedInspection> link_previous_inspections(
    const std::vector<InspectionRecord>& records, LinkStats* stats) {
    LinkStats local;

    std::vector<const InspectionRecord*> canvass;
    for (const auto& r : records)
        if (r.kind == InspectionKind::canvass) canvass.push_back(&r);

    std::sort(canvass.begin(), canvass.end(), [](const auto* a, const auto* b) {
        if (a->establishment_id != b->establishment_id)
            return a->establishment_id < b->establishment_id;
        if (a->date != b->date) return a->date < b->date;
        return a->inspection_id < b->inspection_id;
    });

    std::vector<LinkedInspection> out;
    out.reserve(canvass.size());
    for (std::size_t i = 0; i < canvass.size(); ++i) {
        const InspectionRecord& cur = *canvass[i];
        LinkedInspection link{cur, std::nullopt};
        // Walk back to the nearest strictly earlier canvass of the same
        // establishment; same-date predecessors are skipped (and warned once).
        for (std::size_t j = i; j-- > 0;) {
            const InspectionRecord& cand = *canvass[j];
            if (cand.establishment_id != cur.establishment_id) break;
            if (cand.date == cur.date) {
                ++local.same_date_ties;
                local.warnings.push_back("establishment " + cur.establishment_id +
                                         ": two canvass inspections on " + cur.date.to_string());
                continue;
            }
            link.previous = cand;
            break;
        }
        out.push_back(std::move(link));
    }

    std::sort(out.begin(), out.end(), [](const LinkedInspection& a, const LinkedInspection& b) {
        if (a.current.date != b.current.date) return a.current.date < b.current.date;
        return a.current.inspection_id < b.current.inspection_id;
    });

    if (stats) *stats = std::move(local);
    return out;
}

std::vector<InspectionRecord> filter_window(const std::vector<InspectionRecord>& records,
                                            Date start, Date end,
                                            std::optional<InspectionKind> kind) {
    if (start > end) throw UsageError("filter window start is after end");
    std::vector<InspectionRecord> out;
    for (const auto& r : records) {
        if (r.date < start || r.date > end) continue;
        if (kind && r.kind != *kind) continue;
        out.push_back(r);
    }
    return out;
}

std::string serialize_violations(const std::set<ViolationCode>& codes) {
    std::string out;
    for (ViolationCode c : codes) {
        if (!out.empty()) out += " | ";
        out += std::to_string(c) + ".";
    }
    return out;
}

void write_inspections_csv(std::ostream& out, const std::vector<InspectionRecord>& records) {
    csv::Writer w(out);
    w.row({"inspection_id", "establishment_id", "name", "chain_key", "facility_type", "lat",
           "lon", "inspection_date", "inspection_type", "violations", "sanitarian_id",
           "cluster"});
    for (const auto& r : records) {
        w.row({std::to_string(r.inspection_id), r.establishment_id, r.name, r.chain_key,
               r.facility_type, csv::format_double(r.location.lat),
               csv::format_double(r.location.lon), r.date.to_string(), to_string(r.kind),
               serialize_violations(r.violations), r.sanitarian,
               r.cluster ? to_string(*r.cluster) : ""});
    }
}

void write_licenses_csv(std::ostream& out, const std::vector<LicenseInfo>& licenses) {
    csv::Writer w(out);
    w.row({"establishment_id", "license_start_date", "has_alcohol", "has_tobacco"});
    for (const auto& li : licenses)
        w.row({li.establishment_id, li.license_start.to_string(), li.has_alcohol ? "1" : "0",
               li.has_tobacco ? "1" : "0"});
}

void write_weather_csv(std::ostream& out, const WeatherSeries& weather) {
    csv::Writer w(out);
    w.row({"date", "tmax_f"});
    for (const auto& [d, t] : weather) w.row({d.to_string(), csv::format_double(t)});
}

void write_events_csv(std::ostream& out, const std::vector<PointEvent>& events) {
    csv::Writer w(out);
    w.row({"kind", "date", "lat", "lon"});
    for (const auto& e : events)
        w.row({to_string(e.kind), e.date.to_string(), csv::format_double(e.location.lat),
               csv::format_double(e.location.lon)});
}

}  // namespace canvass
