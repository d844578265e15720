#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace canvass {

// Exit-code categories used by the CLI: usage -> 1, data -> 2, numeric -> 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
  public:
    Date() : serial_(0) {}

    static Date from_ymd(int year, unsigned month, unsigned day);
    /// Parses "YYYY-MM-DD". Throws DataError on malformed or invalid dates.
    static Date parse(const std::string& text);
    static Date from_serial(std::int64_t days) { return Date(days); }

    int year() const;
    unsigned month() const;
    unsigned day() const;
    std::int64_t serial() const { return serial_; }
    /// Months since year 0; groups records by calendar month.
    int month_key() const { return year() * 12 + static_cast<int>(month()) - 1; }

    std::string to_string() const;

    Date add_days(std::int64_t n) const { return Date(serial_ + n); }
    friend std::int64_t operator-(Date a, Date b) { return a.serial_ - b.serial_; }
    auto operator<=>(const Date&) const = default;

  private:
    explicit Date(std::int64_t serial) : serial_(serial) {}
    std::int64_t serial_;
};

enum class Severity { critical, serious, minor };

std::string to_string(Severity s);

/// Violation codes under the pre-July-2018 Chicago food code: 1-14 critical,
/// 15-29 serious, 30-45 minor. Values outside 1..45 are rejected.
using ViolationCode = int;

inline constexpr int kMinViolationCode = 1;
inline constexpr int kMaxViolationCode = 45;
inline constexpr int kLastCriticalCode = 14;
inline constexpr int kLastSeriousCode = 29;

Severity severity_of(ViolationCode code);

enum class InspectionKind { canvass, complaint, license, reinspection, other };

std::string to_string(InspectionKind k);
InspectionKind inspection_kind_from_string(const std::string& s);

enum class ClusterLabel { purple, blue, orange, green, yellow, brown };

inline constexpr int kClusterCount = 6;

std::string to_string(ClusterLabel c);
std::optional<ClusterLabel> cluster_from_string(const std::string& s);
/// Labels in fixed rank order: purple, blue, orange, green, yellow, brown.
const std::vector<ClusterLabel>& all_cluster_labels();

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

bool valid_geopoint(const GeoPoint& p);

struct InspectionRecord {
    std::int64_t inspection_id = 0;
    std::string establishment_id;
    std::string name;
    std::string chain_key;
    std::string facility_type;
    GeoPoint location;
    Date date;
    InspectionKind kind = InspectionKind::other;
    std::set<ViolationCode> violations;
    std::string sanitarian;           // empty when unknown
    std::optional<ClusterLabel> cluster;
};

/// 1 iff the record cites at least one critical violation (codes 1..14).
int target_label(const InspectionRecord& record);
int target_label(const std::set<ViolationCode>& violations);

/// Elapsed time in fractional years: (days between) / 365.25.
/// Throws DataError when earlier > later.
double fractional_years(Date earlier, Date later);

inline constexpr double kDaysPerYear = 365.25;

}  // namespace canvass
