#include "canvass/audit.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace canvass;

namespace {

InspectionRecord record_with(std::int64_t id, std::optional<ClusterLabel> cluster,
                             const std::set<ViolationCode>& violations,
                             const std::string& date = "2013-05-10",
                             InspectionKind kind = InspectionKind::canvass,
                             const std::string& chain = "") {
    InspectionRecord r;
    r.inspection_id = id;
    r.establishment_id = "e" + std::to_string(id % 97);
    r.chain_key = chain;
    r.location = {41.88, -87.63};
    r.date = Date::parse(date);
    r.kind = kind;
    r.violations = violations;
    r.cluster = cluster;
    return r;
}

// The six cluster sizes and 3-dp rates of the reference hit-rate table; hit
// counts are the rounded products.
struct ClusterFixture {
    ClusterLabel label;
    std::size_t inspections;
    std::size_t hits;
    const char* rate;
};

const ClusterFixture kReferenceTable[] = {
    {ClusterLabel::purple, 1174, 477, "0.406"}, {ClusterLabel::blue, 2897, 768, "0.265"},
    {ClusterLabel::orange, 3769, 513, "0.136"}, {ClusterLabel::green, 4595, 437, "0.095"},
    {ClusterLabel::yellow, 2762, 160, "0.058"}, {ClusterLabel::brown, 1878, 45, "0.024"},
};

std::vector<InspectionRecord> reference_records() {
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (const auto& row : kReferenceTable) {
        for (std::size_t i = 0; i < row.inspections; ++i) {
            const bool hit = i < row.hits;
            records.push_back(record_with(id++, row.label,
                                          hit ? std::set<ViolationCode>{3}
                                              : std::set<ViolationCode>{31}));
        }
    }
    return records;
}

}  // namespace

TEST_CASE("reference cluster table reproduces all six 3-dp rates") {
    const auto table = cluster_hit_rates(reference_records());
    REQUIRE(table.rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(table.rows[i].group == to_string(kReferenceTable[i].label));
        CHECK(table.rows[i].inspections == kReferenceTable[i].inspections);
        CHECK(table.rows[i].hits == kReferenceTable[i].hits);
        CHECK(format_rate_3dp(table.rows[i].rate) == kReferenceTable[i].rate);
    }
    // Partition invariant: group hits sum to the overall hit count.
    std::size_t sum = 0;
    for (const auto& row : table.rows) sum += row.hits;
    CHECK(sum == table.total_hits);
}

TEST_CASE("all-miss fixture has rate zero") {
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 10; ++i)
        records.push_back(record_with(i + 1, ClusterLabel::green, {31}));
    const auto table = cluster_hit_rates(records);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].rate == 0.0);
}

TEST_CASE("two-cluster hand fixture") {
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (int i = 0; i < 10; ++i)
        records.push_back(record_with(id++, ClusterLabel::purple,
                                      i < 3 ? std::set<ViolationCode>{2}
                                            : std::set<ViolationCode>{}));
    for (int i = 0; i < 5; ++i)
        records.push_back(record_with(id++, ClusterLabel::blue, {5}));
    const auto table = cluster_hit_rates(records);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].group == "purple");
    CHECK(table.rows[0].rate == doctest::Approx(0.3));
    CHECK(table.rows[1].group == "blue");
    CHECK(table.rows[1].rate == 1.0);
}

TEST_CASE("records without a cluster land in the unclustered row") {
    std::vector<InspectionRecord> records = {record_with(1, ClusterLabel::purple, {3}),
                                             record_with(2, std::nullopt, {3}),
                                             record_with(3, std::nullopt, {})};
    const auto table = cluster_hit_rates(records);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1].group == "unclustered");
    CHECK(table.rows[1].inspections == 2);
    CHECK(table.rows[1].hits == 1);
}

TEST_CASE("per-code rates: only purple cites V3") {
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 8; ++i)
        records.push_back(record_with(i + 1, ClusterLabel::purple,
                                      i < 4 ? std::set<ViolationCode>{3}
                                            : std::set<ViolationCode>{}));
    for (int i = 0; i < 8; ++i)
        records.push_back(record_with(100 + i, ClusterLabel::brown, {}));
    const auto rates = code_hit_rates_by_cluster(records);
    REQUIRE(rates.clusters.size() == 2);
    for (std::size_t row = 0; row < rates.clusters.size(); ++row) {
        for (std::size_t code = 0; code < 14; ++code) {
            if (rates.clusters[row] == "purple" && code == 2)
                CHECK(rates.rates[row][code] == 0.5);
            else
                CHECK(rates.rates[row][code] == 0.0);
        }
    }
}

TEST_CASE("uniform fixture yields identical rows") {
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (ClusterLabel label : all_cluster_labels()) {
        records.push_back(record_with(id++, label, {1, 8}));
        records.push_back(record_with(id++, label, {}));
    }
    const auto rates = code_hit_rates_by_cluster(records);
    REQUIRE(rates.clusters.size() == 6);
    for (std::size_t row = 1; row < 6; ++row)
        for (std::size_t code = 0; code < 14; ++code)
            CHECK(rates.rates[row][code] == rates.rates[0][code]);
}

TEST_CASE("randomized per-code rates match a recount") {
    std::mt19937_64 rng(99);
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 400; ++i) {
        std::set<ViolationCode> violations;
        while (rng() % 3 != 0) violations.insert(static_cast<int>(rng() % 45 + 1));
        records.push_back(record_with(
            i + 1, all_cluster_labels()[rng() % 6], violations));
    }
    const auto rates = code_hit_rates_by_cluster(records);
    for (std::size_t row = 0; row < rates.clusters.size(); ++row) {
        for (int code = 1; code <= 14; ++code) {
            std::size_t n = 0, cites = 0;
            for (const auto& r : records) {
                if (to_string(*r.cluster) != rates.clusters[row]) continue;
                ++n;
                cites += r.violations.count(code) > 0;
            }
            CHECK(rates.citations[row][code - 1] == cites);
            CHECK(rates.rates[row][code - 1] ==
                  doctest::Approx(static_cast<double>(cites) / n));
        }
    }
}

TEST_CASE("monthly series: hand-counted january") {
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 10; ++i)
        records.push_back(record_with(i + 1, std::nullopt,
                                      i < 3 ? std::set<ViolationCode>{3}
                                            : std::set<ViolationCode>{},
                                      "2014-01-0" + std::to_string(i % 9 + 1)));
    const auto series = monthly_hit_rate_series(records, 3, InspectionKind::canvass);
    REQUIRE(series.size() == 1);
    CHECK(series[0].label() == "2014-01");
    CHECK(series[0].rate == doctest::Approx(0.3));
    CHECK(series[0].inspections == 10);
}

TEST_CASE("monthly series: single citing-nothing inspection") {
    std::vector<InspectionRecord> records = {record_with(1, std::nullopt, {})};
    const auto series = monthly_hit_rate_series(records, std::nullopt, InspectionKind::canvass);
    REQUIRE(series.size() == 1);
    CHECK(series[0].rate == 0.0);
}

TEST_CASE("months without inspections are absent") {
    std::vector<InspectionRecord> records = {
        record_with(1, std::nullopt, {3}, "2014-01-15"),
        record_with(2, std::nullopt, {}, "2014-03-15")};
    const auto series = monthly_hit_rate_series(records, std::nullopt, InspectionKind::canvass);
    REQUIRE(series.size() == 2);
    CHECK(series[0].label() == "2014-01");
    CHECK(series[1].label() == "2014-03");
}

TEST_CASE("pooled rate equals the count-weighted mean of monthly rates") {
    std::mt19937_64 rng(31);
    std::vector<InspectionRecord> records;
    for (int i = 0; i < 700; ++i) {
        auto r = record_with(i + 1, std::nullopt,
                             rng() % 5 == 0 ? std::set<ViolationCode>{4}
                                            : std::set<ViolationCode>{});
        r.date = Date::parse("2013-01-01").add_days(rng() % 500);
        records.push_back(r);
    }
    const auto series = monthly_hit_rate_series(records, std::nullopt, InspectionKind::canvass);
    double weighted = 0.0;
    std::size_t n = 0, hits = 0;
    for (const auto& m : series) {
        weighted += m.rate * static_cast<double>(m.inspections);
        n += m.inspections;
        hits += m.hits;
    }
    const double pooled = static_cast<double>(hits) / static_cast<double>(n);
    CHECK(pooled == doctest::Approx(weighted / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("prepost detects a planted V2 increase") {
    std::mt19937_64 rng(7);
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (int month = 0; month < 48; ++month) {
        const Date first = Date::from_ymd(2013 + month / 12, month % 12 + 1, 1);
        const bool post = first >= Date::from_ymd(2015, 1, 1);
        for (int i = 0; i < 40; ++i) {
            const double rate = post ? 0.30 : 0.10;
            const bool cite = (rng() % 1000) / 1000.0 < rate;
            records.push_back(record_with(id++, std::nullopt,
                                          cite ? std::set<ViolationCode>{2}
                                               : std::set<ViolationCode>{},
                                          first.to_string()));
            records.push_back(record_with(id++, std::nullopt, {}, first.to_string(),
                                          InspectionKind::complaint));
        }
    }
    const auto summary = prepost_comparison(records);
    const PrePostCell* v2_canvass = nullptr;
    for (const auto& cell : summary.cells)
        if (cell.code == 2 && cell.kind == InspectionKind::canvass) v2_canvass = &cell;
    REQUIRE(v2_canvass != nullptr);
    CHECK(v2_canvass->post_stats.median > v2_canvass->pre_stats.median);
    CHECK(v2_canvass->pre.size() == 24);
    CHECK(v2_canvass->post.size() == 24);
}

TEST_CASE("identical pre and post periods summarize identically") {
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (int year : {2014, 2015}) {
        for (int month = 1; month <= 12; ++month) {
            const Date first = Date::from_ymd(year, month, 1);
            records.push_back(record_with(id++, std::nullopt, {2}, first.to_string()));
            records.push_back(record_with(id++, std::nullopt, {}, first.to_string()));
        }
    }
    const auto summary = prepost_comparison(records);
    for (const auto& cell : summary.cells) {
        if (cell.kind != InspectionKind::canvass) continue;
        CHECK(cell.pre_stats.median == cell.post_stats.median);
        CHECK(cell.pre_stats.mean == cell.post_stats.mean);
        CHECK(cell.pre_stats.q1 == cell.post_stats.q1);
        CHECK(cell.pre_stats.q3 == cell.post_stats.q3);
    }
}

TEST_CASE("prepost names the empty period") {
    std::vector<InspectionRecord> only_pre = {record_with(1, std::nullopt, {}, "2013-01-01")};
    CHECK_THROWS_WITH_AS(prepost_comparison(only_pre), doctest::Contains("on/after"), DataError);
    std::vector<InspectionRecord> only_post = {record_with(1, std::nullopt, {}, "2016-01-01")};
    CHECK_THROWS_WITH_AS(prepost_comparison(only_post), doctest::Contains("before"), DataError);
}

TEST_CASE("tukey hinge summary on a known list") {
    std::vector<MonthlyRate> series;
    for (double rate : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        MonthlyRate m;
        m.rate = rate;
        m.inspections = 10;
        series.push_back(m);
    }
    const auto stats = summarize_rates(series);
    CHECK(stats.median == 0.3);
    CHECK(stats.q1 == 0.2);  // lower half {0.1,0.2,0.3} includes the median
    CHECK(stats.q3 == 0.4);
    CHECK(stats.mean == doctest::Approx(0.3));
}

namespace {

// Generates chain records whose V3 citations follow exactly the regression
// the audit fits: logit(p) = alpha_chain + beta * monthly_temp.
std::vector<InspectionRecord> seasonal_fixture(std::size_t n, double beta, std::uint64_t seed,
                                               std::map<int, double>* temps_out) {
    std::mt19937_64 rng(seed);
    const std::vector<std::string> chains = {"alpha", "bravo", "charlie", "delta", "echo"};
    const std::vector<double> alphas = {-2.2, -1.8, -2.6, -2.0, -1.5};
    std::vector<InspectionRecord> records;
    std::map<int, double> temps;
    for (std::size_t i = 0; i < n; ++i) {
        const int month = static_cast<int>(rng() % 36);
        const Date date = Date::from_ymd(2012 + month / 12, month % 12 + 1, 10);
        const double temp = 25.0 + 50.0 * std::sin(2 * 3.14159265358979 * (month % 12) / 12.0) +
                            (month % 5);
        temps[date.month_key()] = temp;
        const std::size_t chain = rng() % chains.size();
        const double p = sigmoid(alphas[chain] + beta * temp);
        const bool cite = (rng() % 1000000) / 1e6 < p;
        records.push_back(record_with(static_cast<std::int64_t>(i + 1), std::nullopt,
                                      cite ? std::set<ViolationCode>{3}
                                           : std::set<ViolationCode>{},
                                      date.to_string(), InspectionKind::canvass,
                                      chains[chain]));
    }
    *temps_out = temps;
    return records;
}

}  // namespace

TEST_CASE("seasonal association recovers a planted temperature effect") {
    std::map<int, double> temps;
    const auto records = seasonal_fixture(50000, 0.05, 2024, &temps);
    const auto assoc = seasonal_association(records, temps, 3);
    CHECK(std::abs(assoc.coefficient - 0.05) < 0.01);
    CHECK(assoc.std_error > 0.0);
    CHECK(assoc.n_chains == 5);
}

TEST_CASE("null temperature effect stays within two standard errors") {
    int within = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        std::map<int, double> temps;
        const auto records = seasonal_fixture(2000, 0.0, 5000 + rep, &temps);
        const auto assoc = seasonal_association(records, temps, 3);
        if (std::abs(assoc.coefficient) < 2.0 * assoc.std_error) ++within;
    }
    CHECK(within >= 90);
}

TEST_CASE("constant temperature is rejected as unidentifiable") {
    std::map<int, double> temps;
    auto records = seasonal_fixture(500, 0.0, 1, &temps);
    for (auto& [month, temp] : temps) temp = 55.0;
    CHECK_THROWS_WITH_AS(seasonal_association(records, temps, 3), doctest::Contains("constant"),
                         DataError);
}

TEST_CASE("missing chain keys and missing months are data errors") {
    std::map<int, double> temps;
    auto records = seasonal_fixture(200, 0.0, 2, &temps);
    auto no_chain = records;
    no_chain[0].chain_key.clear();
    CHECK_THROWS_AS(seasonal_association(no_chain, temps, 3), DataError);
    auto missing_month = temps;
    missing_month.erase(missing_month.begin());
    CHECK_THROWS_AS(seasonal_association(records, missing_month, 3), DataError);
}

TEST_CASE("disjoint chain temperature ranges still identify the coefficient") {
    // Each chain occupies its own months, but months within a chain vary.
    std::mt19937_64 rng(9);
    std::vector<InspectionRecord> records;
    std::map<int, double> temps;
    std::int64_t id = 1;
    for (int chain = 0; chain < 3; ++chain) {
        for (int m = 0; m < 6; ++m) {
            const int month = chain * 6 + m;
            const Date date = Date::from_ymd(2013 + month / 12, month % 12 + 1, 5);
            const double temp = 20.0 + 15.0 * chain + 2.5 * m;
            temps[date.month_key()] = temp;
            for (int i = 0; i < 60; ++i) {
                const double p = sigmoid(-2.0 + 0.03 * temp);
                const bool cite = (rng() % 100000) / 1e5 < p;
                records.push_back(record_with(id++, std::nullopt,
                                              cite ? std::set<ViolationCode>{3}
                                                   : std::set<ViolationCode>{},
                                              date.to_string(), InspectionKind::canvass,
                                              "chain" + std::to_string(chain)));
            }
        }
    }
    const auto assoc = seasonal_association(records, temps, 3);
    CHECK(std::isfinite(assoc.coefficient));
    CHECK(std::isfinite(assoc.std_error));
}

TEST_CASE("top-chain selection keeps the most frequent keys") {
    std::vector<InspectionRecord> records;
    std::int64_t id = 1;
    for (int i = 0; i < 10; ++i)
        records.push_back(record_with(id++, std::nullopt, {}, "2013-01-01",
                                      InspectionKind::canvass, "big"));
    for (int i = 0; i < 5; ++i)
        records.push_back(record_with(id++, std::nullopt, {}, "2013-01-01",
                                      InspectionKind::canvass, "mid"));
    records.push_back(record_with(id++, std::nullopt, {}, "2013-01-01",
                                  InspectionKind::canvass, "small"));
    records.push_back(record_with(id++, std::nullopt, {}, "2013-01-01",
                                  InspectionKind::canvass, ""));
    const auto top2 = select_top_chains(records, 2);
    CHECK(top2.size() == 15);
    for (const auto& r : top2) CHECK((r.chain_key == "big" || r.chain_key == "mid"));
}

namespace {

LogisticModel counterfactual_model() {
    return make_model(
        {"cluster_purple", "cluster_blue", "cluster_orange", "cluster_green", "cluster_yellow",
         "cluster_brown", "tmax_f"},
        {1.555, 0.950, 0.202, -0.244, -0.697, -1.306, 0.005}, -2.0);
}

LabeledInstance clustered_instance(std::int64_t id, std::optional<ClusterLabel> cluster,
                                   double tmax) {
    LabeledInstance inst;
    inst.inspection_id = id;
    inst.date = Date::parse("2014-09-15");
    inst.features.tmax_f = tmax;
    if (cluster) {
        inst.features.cluster_onehot[static_cast<std::size_t>(*cluster)] = 1.0;
        inst.prev_cluster = cluster;
    }
    return inst;
}

}  // namespace

TEST_CASE("zero_out divides purple odds by the purple odds ratio") {
    const auto model = counterfactual_model();
    const std::vector<LabeledInstance> test = {
        clustered_instance(1, ClusterLabel::purple, 60.0),
        clustered_instance(2, std::nullopt, 60.0)};
    const auto report = sanitarian_counterfactual(model, test, CounterfactualMode::zero_out);
    const auto& purple = report.rows[0];
    const double odds_base =
        purple.baseline_probability / (1.0 - purple.baseline_probability);
    const double odds_cf =
        purple.counterfactual_probability / (1.0 - purple.counterfactual_probability);
    CHECK(std::abs(odds_base / odds_cf - 4.735) <= 0.001);
    // The cluster-free instance is untouched by zero_out.
    CHECK(report.rows[1].baseline_probability == report.rows[1].counterfactual_probability);
}

TEST_CASE("a shared cluster keeps the ranking unchanged under zero_out") {
    const auto model = counterfactual_model();
    std::vector<LabeledInstance> test;
    for (int i = 0; i < 20; ++i)
        test.push_back(clustered_instance(i + 1, ClusterLabel::blue, 30.0 + 3.0 * i));
    const auto report = sanitarian_counterfactual(model, test, CounterfactualMode::zero_out);
    for (const auto& row : report.rows) CHECK(row.rank_shift == 0);
}

TEST_CASE("zero_out is idempotent") {
    const auto model = counterfactual_model();
    std::vector<LabeledInstance> test = {clustered_instance(1, ClusterLabel::purple, 60.0),
                                         clustered_instance(2, ClusterLabel::brown, 45.0),
                                         clustered_instance(3, std::nullopt, 75.0)};
    const auto once = sanitarian_counterfactual(model, test, CounterfactualMode::zero_out);
    // Apply the counterfactual to already-neutralized instances.
    std::vector<LabeledInstance> neutral = test;
    for (auto& inst : neutral) inst.features.cluster_onehot = {};
    const auto twice = sanitarian_counterfactual(model, neutral, CounterfactualMode::zero_out);
    for (std::size_t i = 0; i < once.rows.size(); ++i) {
        CHECK(once.rows[i].counterfactual_probability ==
              twice.rows[i].counterfactual_probability);
        CHECK(twice.rows[i].baseline_probability == twice.rows[i].counterfactual_probability);
    }
}

TEST_CASE("both rankings are permutations of the ids") {
    const auto model = counterfactual_model();
    std::mt19937_64 rng(3);
    std::vector<LabeledInstance> test;
    for (int i = 0; i < 50; ++i)
        test.push_back(clustered_instance(
            i + 1, rng() % 3 == 0 ? std::optional<ClusterLabel>(all_cluster_labels()[rng() % 6])
                                  : std::nullopt,
            static_cast<double>(rng() % 100)));
    const auto report =
        sanitarian_counterfactual(model, test, CounterfactualMode::reference_mean);
    std::set<std::size_t> base_ranks, cf_ranks;
    for (const auto& row : report.rows) {
        base_ranks.insert(row.baseline_rank);
        cf_ranks.insert(row.counterfactual_rank);
    }
    CHECK(base_ranks.size() == test.size());
    CHECK(*base_ranks.begin() == 1);
    CHECK(*base_ranks.rbegin() == test.size());
    CHECK(cf_ranks == base_ranks);
}

TEST_CASE("reference_mean gives same-cluster same-feature instances equal scores") {
    const auto model = counterfactual_model();
    std::vector<LabeledInstance> test = {clustered_instance(1, ClusterLabel::yellow, 50.0),
                                         clustered_instance(2, ClusterLabel::yellow, 50.0),
                                         clustered_instance(3, ClusterLabel::purple, 50.0)};
    for (auto mode : {CounterfactualMode::zero_out, CounterfactualMode::reference_mean}) {
        const auto report = sanitarian_counterfactual(model, test, mode);
        CHECK(report.rows[0].counterfactual_probability ==
              report.rows[1].counterfactual_probability);
        // With the cluster contribution neutralized all three coincide.
        CHECK(report.rows[0].counterfactual_probability ==
              report.rows[2].counterfactual_probability);
    }
}

TEST_CASE("reference_mean uses the inspection-count-weighted mean") {
    const auto model = counterfactual_model();
    // Three purple, one brown: mean contribution (3*1.555 - 1.306) / 4.
    std::vector<LabeledInstance> test = {clustered_instance(1, ClusterLabel::purple, 50.0),
                                         clustered_instance(2, ClusterLabel::purple, 50.0),
                                         clustered_instance(3, ClusterLabel::purple, 50.0),
                                         clustered_instance(4, ClusterLabel::brown, 50.0)};
    const auto report =
        sanitarian_counterfactual(model, test, CounterfactualMode::reference_mean);
    const double reference = (3 * 1.555 - 1.306) / 4.0;
    const double expected = sigmoid(-2.0 + 0.005 * 50.0 + reference);
    for (const auto& row : report.rows)
        CHECK(row.counterfactual_probability == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("counterfactual requires the cluster features") {
    const auto model = make_model({"tmax_f"}, {0.005}, -2.0);
    std::vector<LabeledInstance> test = {clustered_instance(1, ClusterLabel::purple, 60.0)};
    CHECK_THROWS_WITH_AS(sanitarian_counterfactual(model, test, CounterfactualMode::zero_out),
                         doctest::Contains("cluster_"), DataError);
}

TEST_CASE("crossing count flags rank-threshold flips") {
    CounterfactualReport report;
    report.rows = {{1, 0.9, 0.1, 1, 3, -2}, {2, 0.5, 0.6, 2, 1, 1}, {3, 0.2, 0.4, 3, 2, 1}};
    CHECK(crossing_count(report, 1) == 2);  // ids 1 and 2 swap across position 1
    CHECK(crossing_count(report, 2) == 2);  // ids 1 and 3 swap across position 2
    CHECK(crossing_count(report, 3) == 0);
}
