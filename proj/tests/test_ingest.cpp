#include "canvass/ingest.hpp"

#include <map>
#include <random>
#include <sstream>

#include "doctest.h"

using namespace canvass;

namespace {

InspectionRecord make_record(std::int64_t id, const std::string& est, const std::string& date,
                             InspectionKind kind) {
    InspectionRecord r;
    r.inspection_id = id;
    r.establishment_id = est;
    r.name = "Place " + est;
    r.facility_type = "restaurant";
    r.location = {41.9, -87.65};
    r.date = Date::parse(date);
    r.kind = kind;
    return r;
}

const char* kInspectionsHeader =
    "inspection_id,establishment_id,name,chain_key,facility_type,lat,lon,inspection_date,"
    "inspection_type,violations,sanitarian_id,cluster\n";

}  // namespace

TEST_CASE("violation field of the canonical format") {
    const auto codes = parse_violation_field(
        "3. POTENTIALLY HAZARDOUS FOOD MEETS TEMPERATURE REQUIREMENT - Comments: held at 52F "
        "| 32. FOOD AND NON-FOOD CONTACT SURFACES PROPERLY DESIGNED - Comments: worn");
    CHECK(codes == std::set<ViolationCode>{3, 32});
}

TEST_CASE("empty violation field means no citations") {
    CHECK(parse_violation_field("").empty());
    CHECK(parse_violation_field("   ").empty());
}

TEST_CASE("single entry with trailing text") {
    CHECK(parse_violation_field("14. PREVIOUS SERIOUS VIOLATION CORRECTED - Comments: ok") ==
          std::set<ViolationCode>{14});
}

TEST_CASE("violation entry without a leading code carries the entry index") {
    CHECK_THROWS_WITH_AS(parse_violation_field("3. FINE | NO CODE HERE"),
                         doctest::Contains("entry 2"), DataError);
    CHECK_THROWS_WITH_AS(parse_violation_field("JUNK"), doctest::Contains("entry 1"), DataError);
}

TEST_CASE("violation codes outside 1..45 are rejected") {
    CHECK_THROWS_WITH_AS(parse_violation_field("70. NEW-CODE VIOLATION"),
                         doctest::Contains("outside 1..45"), DataError);
    CHECK_THROWS_AS(parse_violation_field("0. NOTHING"), DataError);
}

TEST_CASE("duplicate codes collapse into a set") {
    CHECK(parse_violation_field("5. A | 5. B") == std::set<ViolationCode>{5});
}

TEST_CASE("inspections parsing applies the cutoff") {
    std::string text = kInspectionsHeader;
    text += "1,e1,A,,restaurant,41.9,-87.6,2014-01-05,Canvass,3.,s1,purple\n";
    text += "2,e1,A,,restaurant,41.9,-87.6,2018-08-01,Canvass,3.,s1,purple\n";
    text += "3,e2,B,,restaurant,41.8,-87.7,2015-06-01,complaint,,s2,\n";
    InspectionParseStats stats;
    const auto records = parse_inspections(csv::parse_string(text), IngestOptions{}, &stats);
    CHECK(records.size() == 2);
    CHECK(stats.rows_read == 3);
    CHECK(stats.dropped_after_cutoff == 1);
    CHECK(records[0].kind == InspectionKind::canvass);  // "Canvass" case-insensitive
    CHECK(records[0].cluster == ClusterLabel::purple);
    CHECK(records[1].kind == InspectionKind::complaint);
    CHECK(!records[1].cluster.has_value());
}

TEST_CASE("unknown inspection type maps to other with a warning") {
    std::string text = kInspectionsHeader;
    text += "1,e1,A,,restaurant,41.9,-87.6,2014-01-05,Mystery Visit,,s1,\n";
    InspectionParseStats stats;
    const auto records = parse_inspections(csv::parse_string(text), IngestOptions{}, &stats);
    CHECK(records[0].kind == InspectionKind::other);
    CHECK(stats.unknown_type_count == 1);
    REQUIRE(stats.warnings.size() == 1);
    CHECK(stats.warnings[0].find("mystery visit") != std::string::npos);
}

TEST_CASE("alias table handles re-inspections and complaint variants") {
    std::string text = kInspectionsHeader;
    text += "1,e1,A,,r,41.9,-87.6,2014-01-05,CANVASS RE-INSPECTION,,,\n";
    text += "2,e1,A,,r,41.9,-87.6,2014-01-06,Short Form Complaint,,,\n";
    text += "3,e1,A,,r,41.9,-87.6,2014-01-07,License,,,\n";
    const auto records = parse_inspections(csv::parse_string(text), IngestOptions{}, nullptr);
    CHECK(records[0].kind == InspectionKind::reinspection);
    CHECK(records[1].kind == InspectionKind::complaint);
    CHECK(records[2].kind == InspectionKind::license);
}

TEST_CASE("malformed rows name the row number") {
    std::string text = kInspectionsHeader;
    text += "1,e1,A,,r,41.9,-87.6,2014-01-05,canvass,,,\n";
    text += "2,e1,A,,r,not-a-number,-87.6,2014-01-06,canvass,,,\n";
    CHECK_THROWS_WITH_AS(parse_inspections(csv::parse_string(text), IngestOptions{}, nullptr),
                         doctest::Contains("row 3"), DataError);
}

TEST_CASE("bad cluster names are rejected") {
    std::string text = kInspectionsHeader;
    text += "1,e1,A,,r,41.9,-87.6,2014-01-05,canvass,,s1,chartreuse\n";
    CHECK_THROWS_WITH_AS(parse_inspections(csv::parse_string(text), IngestOptions{}, nullptr),
                         doctest::Contains("chartreuse"), DataError);
}

TEST_CASE("portal column names are remapped") {
    std::string text =
        "Inspection ID,License #,DBA Name,AKA Name,Facility Type,Latitude,Longitude,"
        "Inspection Date,Inspection Type,Violations\n";
    text += "67732,1974745,WOLCOTT'S,TROQUET,Restaurant,41.99,-87.68,01/15/2014,Canvass,"
            "\"3. DETAIL - Comments: x | 18. DETAIL\"\n";
    const auto records = parse_inspections(csv::parse_string(text), IngestOptions{}, nullptr);
    REQUIRE(records.size() == 1);
    CHECK(records[0].inspection_id == 67732);
    CHECK(records[0].establishment_id == "1974745");
    CHECK(records[0].chain_key == "TROQUET");
    CHECK(records[0].date == Date::parse("2014-01-15"));
    CHECK(records[0].violations == std::set<ViolationCode>{3, 18});
}

TEST_CASE("licenses, weather and events parse and validate") {
    const auto licenses = parse_licenses(
        csv::parse_string("establishment_id,license_start_date,has_alcohol,has_tobacco\n"
                          "e1,2009-01-01,1,0\n"));
    REQUIRE(licenses.size() == 1);
    CHECK(licenses[0].has_alcohol);
    CHECK(!licenses[0].has_tobacco);

    const auto weather = parse_weather(csv::parse_string("date,tmax_f\n2014-01-05,22.5\n"));
    CHECK(weather.at(Date::parse("2014-01-05")) == 22.5);
    CHECK_THROWS_WITH_AS(
        parse_weather(csv::parse_string("date,tmax_f\n2014-01-05,22.5\n2014-01-05,23\n")),
        doctest::Contains("duplicate"), DataError);
    CHECK_THROWS_AS(parse_weather(csv::parse_string("date,tmax_f\n2014-01-05,155\n")),
                    DataError);

    const auto events = parse_events(
        csv::parse_string("kind,date,lat,lon\nburglary,2014-01-05,41.9,-87.6\n"));
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::burglary);
    CHECK_THROWS_AS(
        parse_events(csv::parse_string("kind,date,lat,lon\narson,2014-01-05,41.9,-87.6\n")),
        DataError);
}

TEST_CASE("parse-serialize-parse is a fixpoint") {
    std::string text = kInspectionsHeader;
    text += "1,e1,\"A, diner\",chainX,restaurant,41.9,-87.6,2014-01-05,canvass,3. | 32.,s1,blue\n";
    text += "2,e2,B,,grocery,41.8,-87.7,2014-02-06,complaint,,s2,\n";
    const auto once = parse_inspections(csv::parse_string(text), IngestOptions{}, nullptr);
    std::ostringstream serialized;
    write_inspections_csv(serialized, once);
    const auto twice =
        parse_inspections(csv::parse_string(serialized.str()), IngestOptions{}, nullptr);
    std::ostringstream again;
    write_inspections_csv(again, twice);
    CHECK(serialized.str() == again.str());
    CHECK(once.size() == twice.size());
    CHECK(once[0].violations == twice[0].violations);
}

TEST_CASE("two-record chain links second to first") {
    std::vector<InspectionRecord> records = {
        make_record(1, "e1", "2012-03-01", InspectionKind::canvass),
        make_record(2, "e1", "2012-09-10", InspectionKind::canvass),
    };
    const auto links = link_previous_inspections(records);
    REQUIRE(links.size() == 2);
    CHECK(!links[0].previous.has_value());
    REQUIRE(links[1].previous.has_value());
    CHECK(links[1].previous->inspection_id == 1);
}

TEST_CASE("single inspection has no previous") {
    std::vector<InspectionRecord> records = {
        make_record(1, "e1", "2012-03-01", InspectionKind::canvass)};
    const auto links = link_previous_inspections(records);
    REQUIRE(links.size() == 1);
    CHECK(!links[0].previous.has_value());
}

TEST_CASE("complaints between canvasses are skipped") {
    // canvass t1, complaint t1.5, canvass t2: the link target is t1.
    std::vector<InspectionRecord> records = {
        make_record(1, "e1", "2012-03-01", InspectionKind::canvass),
        make_record(2, "e1", "2012-06-01", InspectionKind::complaint),
        make_record(3, "e1", "2012-09-10", InspectionKind::canvass),
    };
    const auto links = link_previous_inspections(records);

    // Oracle: filter to canvass, then argmax over strictly earlier dates.
    std::optional<InspectionRecord> expected;
    for (const auto& r : records)
        if (r.kind == InspectionKind::canvass && r.date < Date::parse("2012-09-10"))
            if (!expected || r.date > expected->date) expected = r;
    REQUIRE(expected.has_value());

    REQUIRE(links.size() == 2);
    REQUIRE(links[1].previous.has_value());
    CHECK(links[1].previous->inspection_id == expected->inspection_id);
    CHECK(links[1].previous->inspection_id == 1);
}

TEST_CASE("same-date canvass ties warn and link past the tie") {
    std::vector<InspectionRecord> records = {
        make_record(1, "e1", "2012-03-01", InspectionKind::canvass),
        make_record(5, "e1", "2012-09-10", InspectionKind::canvass),
        make_record(4, "e1", "2012-09-10", InspectionKind::canvass),
    };
    LinkStats stats;
    const auto links = link_previous_inspections(records, &stats);
    CHECK(stats.same_date_ties > 0);
    for (const auto& link : links) {
        if (!link.previous) continue;
        CHECK(link.previous->date < link.current.date);
    }
    // Both same-date records link back to the strictly earlier one.
    REQUIRE(links.size() == 3);
    CHECK(links[1].previous->inspection_id == 1);
    CHECK(links[2].previous->inspection_id == 1);
}

TEST_CASE("links never cross establishments nor point forward") {
    std::mt19937_64 rng(42);
    std::vector<InspectionRecord> records;
    const Date base = Date::parse("2011-01-01");
    for (int i = 0; i < 300; ++i) {
        const std::string est = "e" + std::to_string(rng() % 20);
        const auto kind = (rng() % 3 == 0) ? InspectionKind::complaint : InspectionKind::canvass;
        auto r = make_record(i + 1, est, "2011-01-01", kind);
        r.date = base.add_days(static_cast<std::int64_t>(rng() % 1000));
        records.push_back(r);
    }
    const auto links = link_previous_inspections(records);
    std::size_t canvass_count = 0;
    for (const auto& r : records) canvass_count += r.kind == InspectionKind::canvass;
    CHECK(links.size() == canvass_count);
    for (const auto& link : links) {
        CHECK(link.current.kind == InspectionKind::canvass);
        if (!link.previous) continue;
        CHECK(link.previous->establishment_id == link.current.establishment_id);
        CHECK(link.previous->date < link.current.date);
        CHECK(link.previous->kind == InspectionKind::canvass);
    }
}

TEST_CASE("filter window") {
    std::vector<InspectionRecord> records = {
        make_record(1, "e1", "2012-03-01", InspectionKind::canvass),
        make_record(2, "e1", "2013-03-01", InspectionKind::complaint),
        make_record(3, "e1", "2014-03-01", InspectionKind::canvass),
    };
    SUBCASE("full range is the identity") {
        const auto all =
            filter_window(records, Date::parse("2000-01-01"), Date::parse("2020-01-01"));
        CHECK(all.size() == records.size());
    }
    SUBCASE("empty range") {
        const auto none =
            filter_window(records, Date::parse("2000-01-01"), Date::parse("2000-12-31"));
        CHECK(none.empty());
    }
    SUBCASE("kind filter and inclusive bounds") {
        const auto canvass = filter_window(records, Date::parse("2012-03-01"),
                                           Date::parse("2014-03-01"), InspectionKind::canvass);
        CHECK(canvass.size() == 2);
    }
    SUBCASE("reversed bounds are a usage error") {
        CHECK_THROWS_AS(
            filter_window(records, Date::parse("2014-01-01"), Date::parse("2013-01-01")),
            UsageError);
    }
}

TEST_CASE("monthly bucket counts sum to the filtered total") {
    std::mt19937_64 rng(11);
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 500; ++i) {
        auto r = make_record(i + 1, "e" + std::to_string(rng() % 30), "2012-01-01",
                             InspectionKind::canvass);
        r.date = Date::parse("2012-01-01").add_days(static_cast<std::int64_t>(rng() % 700));
        records.push_back(r);
    }
    const auto filtered =
        filter_window(records, Date::parse("2012-03-01"), Date::parse("2013-06-30"));
    std::map<int, std::size_t> by_month;
    for (const auto& r : filtered) ++by_month[r.date.month_key()];
    std::size_t total = 0;
    for (const auto& [key, n] : by_month) total += n;
    CHECK(total == filtered.size());
}
