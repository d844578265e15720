#include "canvass/core.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace canvass {

namespace {

// Days-from-civil / civil-from-days, Howard Hinnant's algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    int y;
    unsigned m;
    unsigned d;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

unsigned days_in_month(int y, unsigned m) {
    static constexpr std::array<unsigned, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                         31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
        throw DataError("invalid calendar date: " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
    return Date(days_from_civil(year, month, day));
}

Date Date::parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw DataError("malformed date (want YYYY-MM-DD): '" + text + "'");
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](int from, int to, auto& out) {
        auto res = std::from_chars(text.data() + from, text.data() + to, out);
        if (res.ec != std::errc{} || res.ptr != text.data() + to)
            throw DataError("malformed date (want YYYY-MM-DD): '" + text + "'");
    };
    num(0, 4, y);
    num(5, 7, m);
    num(8, 10, d);
    return from_ymd(y, m, d);
}

int Date::year() const { return civil_from_days(serial_).y; }
unsigned Date::month() const { return civil_from_days(serial_).m; }
unsigned Date::day() const { return civil_from_days(serial_).d; }

std::string Date::to_string() const {
    const Civil c = civil_from_days(serial_);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.y, c.m, c.d);
    return buf;
}

std::string to_string(Severity s) {
    switch (s) {
        case Severity::critical: return "critical";
        case Severity::serious: return "serious";
        case Severity::minor: return "minor";
    }
    return "?";
}

Severity severity_of(ViolationCode code) {
    if (code < kMinViolationCode || code > kMaxViolationCode)
        throw DataError("violation code out of range 1..45: " + std::to_string(code));
    if (code <= kLastCriticalCode) return Severity::critical;
    if (code <= kLastSeriousCode) return Severity::serious;
    return Severity::minor;
}

std::string to_string(InspectionKind k) {
    switch (k) {
        case InspectionKind::canvass: return "canvass";
        case InspectionKind::complaint: return "complaint";
        case InspectionKind::license: return "license";
        case InspectionKind::reinspection: return "reinspection";
        case InspectionKind::other: return "other";
    }
    return "?";
}

InspectionKind inspection_kind_from_string(const std::string& s) {
    if (s == "canvass") return InspectionKind::canvass;
    if (s == "complaint") return InspectionKind::complaint;
    if (s == "license") return InspectionKind::license;
    if (s == "reinspection") return InspectionKind::reinspection;
    if (s == "other") return InspectionKind::other;
    throw UsageError("unknown inspection kind '" + s + "'");
}

std::string to_string(ClusterLabel c) {
    switch (c) {
        case ClusterLabel::purple: return "purple";
        case ClusterLabel::blue: return "blue";
        case ClusterLabel::orange: return "orange";
        case ClusterLabel::green: return "green";
        case ClusterLabel::yellow: return "yellow";
        case ClusterLabel::brown: return "brown";
    }
    return "?";
}

std::optional<ClusterLabel> cluster_from_string(const std::string& s) {
    for (ClusterLabel c : all_cluster_labels())
        if (to_string(c) == s) return c;
    return std::nullopt;
}

const std::vector<ClusterLabel>& all_cluster_labels() {
    static const std::vector<ClusterLabel> labels = {
        ClusterLabel::purple, ClusterLabel::blue,   ClusterLabel::orange,
        ClusterLabel::green,  ClusterLabel::yellow, ClusterLabel::brown};
    return labels;
}

bool valid_geopoint(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

int target_label(const std::set<ViolationCode>& violations) {
    for (ViolationCode code : violations)
        if (severity_of(code) == Severity::critical) return 1;
    return 0;
}

int target_label(const InspectionRecord& record) { return target_label(record.violations); }

double fractional_years(Date earlier, Date later) {
    if (earlier > later)
        throw DataError("fractional_years: earlier date " + earlier.to_string() +
                        " is after " + later.to_string());
    return static_cast<double>(later - earlier) / kDaysPerYear;
}

}  // namespace canvass
