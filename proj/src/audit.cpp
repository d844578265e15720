#include "canvass/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "canvass/csv.hpp"
#include "json.hpp"

namespace canvass {

namespace {

std::string month_label(int year, unsigned month) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", year, month);
    return buf;
}

double median_of_sorted(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    // median of v[lo..hi) (half-open)
    const std::size_t n = hi - lo;
    if (n % 2 == 1) return v[lo + n / 2];
    return 0.5 * (v[lo + n / 2 - 1] + v[lo + n / 2]);
}

}  // namespace

std::string format_rate_3dp(double rate) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", rate);
    return buf;
}

HitRateTable cluster_hit_rates(const std::vector<InspectionRecord>& records) {
    std::array<std::size_t, kClusterCount> counts{}, hits{};
    std::size_t unclustered_count = 0, unclustered_hits = 0;

    HitRateTable table;
    for (const auto& r : records) {
        const int hit = target_label(r);
        ++table.total_inspections;
        table.total_hits += hit;
        if (r.cluster) {
            const auto c = static_cast<std::size_t>(*r.cluster);
            ++counts[c];
            hits[c] += hit;
        } else {
            ++unclustered_count;
            unclustered_hits += hit;
        }
    }

    for (ClusterLabel label : all_cluster_labels()) {
        const auto c = static_cast<std::size_t>(label);
        if (counts[c] == 0) continue;
        table.rows.push_back({to_string(label), counts[c], hits[c],
                              static_cast<double>(hits[c]) / static_cast<double>(counts[c])});
    }
    if (unclustered_count > 0)
        table.rows.push_back({"unclustered", unclustered_count, unclustered_hits,
                              static_cast<double>(unclustered_hits) /
                                  static_cast<double>(unclustered_count)});
    return table;
}

CodeClusterRates code_hit_rates_by_cluster(const std::vector<InspectionRecord>& records) {
    std::map<std::string, std::size_t> index;
    CodeClusterRates out;

    auto row_for = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        index.emplace(name, out.clusters.size());
        out.clusters.push_back(name);
        out.inspections.push_back(0);
        out.citations.push_back({});
        out.rates.push_back({});
        return out.clusters.size() - 1;
    };
    // Fix row order: the six labels first, then unclustered when present.
    for (ClusterLabel label : all_cluster_labels()) {
        bool seen = false;
        for (const auto& r : records)
            if (r.cluster == label) {
                seen = true;
                break;
            }
        if (seen) row_for(to_string(label));
    }

    for (const auto& r : records) {
        const std::size_t row = row_for(r.cluster ? to_string(*r.cluster) : "unclustered");
        ++out.inspections[row];
        for (ViolationCode code : r.violations)
            if (code >= 1 && code <= kLastCriticalCode) ++out.citations[row][code - 1];
    }
    for (std::size_t row = 0; row < out.clusters.size(); ++row)
        for (std::size_t c = 0; c < 14; ++c)
            out.rates[row][c] = out.inspections[row] == 0
                                    ? 0.0
                                    : static_cast<double>(out.citations[row][c]) /
                                          static_cast<double>(out.inspections[row]);
    return out;
}

std::string MonthlyRate::label() const { return month_label(year, month); }

std::vector<MonthlyRate> monthly_hit_rate_series(const std::vector<InspectionRecord>& records,
                                                 std::optional<ViolationCode> code,
                                                 InspectionKind kind) {
    std::map<int, std::pair<std::size_t, std::size_t>> buckets;  // month_key -> (n, hits)
    for (const auto& r : records) {
        if (r.kind != kind) continue;
        auto& [n, h] = buckets[r.date.month_key()];
        ++n;
        h += code ? (r.violations.count(*code) ? 1 : 0) : target_label(r);
    }
    std::vector<MonthlyRate> out;
    out.reserve(buckets.size());
    for (const auto& [key, nh] : buckets) {
        MonthlyRate m;
        m.year = key / 12;
        m.month = static_cast<unsigned>(key % 12) + 1;
        m.inspections = nh.first;
        m.hits = nh.second;
        m.rate = static_cast<double>(nh.second) / static_cast<double>(nh.first);
        out.push_back(m);
    }
    return out;
}

PeriodStats summarize_rates(const std::vector<MonthlyRate>& series) {
    PeriodStats s;
    s.months = series.size();
    if (series.empty()) return s;
    std::vector<double> rates;
    rates.reserve(series.size());
    double sum = 0.0;
    for (const auto& m : series) {
        rates.push_back(m.rate);
        sum += m.rate;
    }
    std::sort(rates.begin(), rates.end());
    s.mean = sum / static_cast<double>(rates.size());
    const std::size_t n = rates.size();
    s.median = median_of_sorted(rates, 0, n);
    // Tukey hinges: halves include the median position when n is odd.
    const std::size_t half = (n + 1) / 2;
    s.q1 = median_of_sorted(rates, 0, half);
    s.q3 = median_of_sorted(rates, n - half, n);
    return s;
}

PrePostSummary prepost_comparison(const std::vector<InspectionRecord>& records, Date split) {
    std::vector<InspectionRecord> pre, post;
    for (const auto& r : records) {
        if (r.kind != InspectionKind::canvass && r.kind != InspectionKind::complaint) continue;
        (r.date < split ? pre : post).push_back(r);
    }
    if (pre.empty())
        throw DataError("no canvass/complaint records before split date " + split.to_string());
    if (post.empty())
        throw DataError("no canvass/complaint records on/after split date " + split.to_string());

    PrePostSummary out;
    out.split = split;
    for (ViolationCode code = 1; code <= kLastCriticalCode; ++code) {
        for (InspectionKind kind : {InspectionKind::canvass, InspectionKind::complaint}) {
            PrePostCell cell;
            cell.code = code;
            cell.kind = kind;
            cell.pre = monthly_hit_rate_series(pre, code, kind);
            cell.post = monthly_hit_rate_series(post, code, kind);
            cell.pre_stats = summarize_rates(cell.pre);
            cell.post_stats = summarize_rates(cell.post);
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

std::map<int, double> monthly_average_temperature(const WeatherSeries& weather) {
    std::map<int, std::pair<double, std::size_t>> sums;
    for (const auto& [date, tmax] : weather) {
        auto& [sum, n] = sums[date.month_key()];
        sum += tmax;
        ++n;
    }
    std::map<int, double> out;
    for (const auto& [key, sn] : sums) out[key] = sn.first / static_cast<double>(sn.second);
    return out;
}

std::vector<InspectionRecord> select_top_chains(const std::vector<InspectionRecord>& records,
                                                std::size_t k) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records)
        if (r.kind == InspectionKind::canvass && !r.chain_key.empty()) ++counts[r.chain_key];

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);

    std::set<std::string> keep;
    for (const auto& [chain, n] : ranked) keep.insert(chain);
    std::vector<InspectionRecord> out;
    for (const auto& r : records)
        if (r.kind == InspectionKind::canvass && keep.count(r.chain_key)) out.push_back(r);
    return out;
}

SeasonalAssociation seasonal_association(const std::vector<InspectionRecord>& all_records,
                                         const std::map<int, double>& monthly_temps,
                                         ViolationCode code, const TrainingConfig& cfg) {
    if (all_records.empty()) throw DataError("seasonal association: no records");
    severity_of(code);  // validates the code range

    for (const auto& r : all_records)
        if (r.chain_key.empty())
            throw DataError("seasonal association: record " + std::to_string(r.inspection_id) +
                            " has no chain key");

    // Chains whose outcome never varies are perfectly separated by their own
    // dummy and carry no within-chain information; drop them up front.
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_chain;  // (n, cites)
    for (const auto& r : all_records) {
        auto& [cn, cc] = per_chain[r.chain_key];
        ++cn;
        cc += r.violations.count(code) > 0;
    }
    std::set<std::string> chains;
    for (const auto& [chain, nc] : per_chain)
        if (nc.second > 0 && nc.second < nc.first) chains.insert(chain);
    if (chains.empty())
        throw DataError(
            "seasonal association: no chain with outcome variation for V" +
            std::to_string(code));
    std::vector<InspectionRecord> records;
    records.reserve(all_records.size());
    for (const auto& r : all_records)
        if (chains.count(r.chain_key)) records.push_back(r);

    const std::size_t n = records.size();
    std::vector<std::string> names = {"monthly_avg_temp"};
    std::vector<std::vector<double>> columns;
    columns.emplace_back(n);
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = monthly_temps.find(records[i].date.month_key());
        if (it == monthly_temps.end())
            throw DataError("seasonal association: no monthly temperature for " +
                            month_label(records[i].date.year(), records[i].date.month()));
        columns[0][i] = it->second;
        labels[i] = records[i].violations.count(code) ? 1.0 : 0.0;
    }
    // Chain fixed effects; the first chain (sorted) is the reference level.
    bool first = true;
    for (const auto& chain : chains) {
        if (first) {
            first = false;
            continue;
        }
        names.push_back("chain:" + chain);
        std::vector<double> col(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (records[i].chain_key == chain) col[i] = 1.0;
        columns.push_back(std::move(col));
    }

    const FitResult fit = fit_matrix(names, columns, labels, cfg);
    for (const auto& dropped : fit.dropped_features)
        if (dropped == "monthly_avg_temp")
            throw DataError(
                "seasonal association: temperature column is constant; association "
                "unidentifiable");

    SeasonalAssociation out;
    out.n_records = n;
    out.n_chains = chains.size();
    for (std::size_t j = 0; j < fit.model.feature_names.size(); ++j) {
        if (fit.model.feature_names[j] == "monthly_avg_temp") {
            out.coefficient = fit.model.coefficients[j];
            out.std_error = fit.std_errors[j];
            return out;
        }
    }
    throw NumericError("seasonal association: temperature coefficient not found after fit");
}

std::string to_string(CounterfactualMode m) {
    return m == CounterfactualMode::zero_out ? "zero_out" : "reference_mean";
}

CounterfactualMode counterfactual_mode_from_string(const std::string& s) {
    if (s == "zero_out") return CounterfactualMode::zero_out;
    if (s == "reference_mean") return CounterfactualMode::reference_mean;
    throw UsageError("unknown counterfactual mode '" + s + "'");
}

namespace {

std::vector<std::size_t> ranks_by_descending(const std::vector<double>& values,
                                             const std::vector<std::int64_t>& ids) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return ids[a] < ids[b];
    });
    std::vector<std::size_t> rank(values.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos + 1;
    return rank;
}

}  // namespace

CounterfactualReport sanitarian_counterfactual(const LogisticModel& model,
                                               const std::vector<LabeledInstance>& test,
                                               CounterfactualMode mode) {
    std::array<double, kClusterCount> cluster_coef{};
    for (ClusterLabel label : all_cluster_labels()) {
        const std::string name = "cluster_" + to_string(label);
        bool found = false;
        for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
            if (model.feature_names[j] == name) {
                cluster_coef[static_cast<std::size_t>(label)] = model.coefficients[j];
                found = true;
                break;
            }
        }
        if (!found) throw DataError("model lacks cluster feature '" + name + "'");
    }
    if (test.empty()) throw DataError("counterfactual: no instances");

    double reference = 0.0;
    if (mode == CounterfactualMode::reference_mean) {
        std::array<std::size_t, kClusterCount> weights{};
        for (const auto& inst : test)
            for (int c = 0; c < kClusterCount; ++c)
                if (inst.features.cluster_onehot[static_cast<std::size_t>(c)] == 1.0)
                    ++weights[static_cast<std::size_t>(c)];
        std::size_t total = 0;
        double weighted = 0.0;
        for (int c = 0; c < kClusterCount; ++c) {
            total += weights[static_cast<std::size_t>(c)];
            weighted += static_cast<double>(weights[static_cast<std::size_t>(c)]) *
                        cluster_coef[static_cast<std::size_t>(c)];
        }
        if (total == 0)
            throw DataError("counterfactual: reference_mean needs at least one clustered instance");
        reference = weighted / static_cast<double>(total);
    }

    const std::size_t n = test.size();
    std::vector<double> base_p(n), cf_p(n);
    std::vector<std::int64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto values = named_values(test[i].features);
        const double z = linear_predictor(model, values);
        double contribution = 0.0;
        for (int c = 0; c < kClusterCount; ++c)
            contribution += cluster_coef[static_cast<std::size_t>(c)] *
                            test[i].features.cluster_onehot[static_cast<std::size_t>(c)];
        const double z_cf =
            z - contribution + (mode == CounterfactualMode::reference_mean ? reference : 0.0);
        base_p[i] = sigmoid(z);
        cf_p[i] = sigmoid(z_cf);
        ids[i] = test[i].inspection_id;
    }

    const auto base_rank = ranks_by_descending(base_p, ids);
    const auto cf_rank = ranks_by_descending(cf_p, ids);

    CounterfactualReport report;
    report.mode = mode;
    report.rows.reserve(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    for (std::size_t i : order) {
        CounterfactualRow row;
        row.inspection_id = ids[i];
        row.baseline_probability = base_p[i];
        row.counterfactual_probability = cf_p[i];
        row.baseline_rank = base_rank[i];
        row.counterfactual_rank = cf_rank[i];
        row.rank_shift = static_cast<std::int64_t>(base_rank[i]) -
                         static_cast<std::int64_t>(cf_rank[i]);
        report.rows.push_back(row);
    }
    return report;
}

std::size_t crossing_count(const CounterfactualReport& report, std::size_t threshold) {
    std::size_t count = 0;
    for (const auto& row : report.rows) {
        const bool base_in = row.baseline_rank <= threshold;
        const bool cf_in = row.counterfactual_rank <= threshold;
        count += base_in != cf_in;
    }
    return count;
}

void write_hit_rate_csv(std::ostream& out, const HitRateTable& table) {
    csv::Writer w(out);
    w.row({"group", "inspections", "hits", "rate"});
    for (const auto& row : table.rows)
        w.row({row.group, std::to_string(row.inspections), std::to_string(row.hits),
               format_rate_3dp(row.rate)});
}

void write_code_cluster_csv(std::ostream& out, const CodeClusterRates& rates) {
    csv::Writer w(out);
    w.row({"cluster", "code", "inspections", "citations", "rate"});
    for (std::size_t row = 0; row < rates.clusters.size(); ++row)
        for (std::size_t c = 0; c < 14; ++c)
            w.row({rates.clusters[row], "V" + std::to_string(c + 1),
                   std::to_string(rates.inspections[row]),
                   std::to_string(rates.citations[row][c]),
                   csv::format_double(rates.rates[row][c])});
}

void write_monthly_csv(std::ostream& out, const std::vector<MonthlyRate>& series) {
    csv::Writer w(out);
    w.row({"month", "inspections", "hits", "rate"});
    for (const auto& m : series)
        w.row({m.label(), std::to_string(m.inspections), std::to_string(m.hits),
               csv::format_double(m.rate)});
}

void write_prepost_csv(std::ostream& out, const PrePostSummary& summary) {
    csv::Writer w(out);
    w.row({"code", "kind", "period", "month", "inspections", "hits", "rate"});
    for (const auto& cell : summary.cells) {
        for (const auto& m : cell.pre)
            w.row({"V" + std::to_string(cell.code), to_string(cell.kind), "pre", m.label(),
                   std::to_string(m.inspections), std::to_string(m.hits),
                   csv::format_double(m.rate)});
        for (const auto& m : cell.post)
            w.row({"V" + std::to_string(cell.code), to_string(cell.kind), "post", m.label(),
                   std::to_string(m.inspections), std::to_string(m.hits),
                   csv::format_double(m.rate)});
    }
}

void write_prepost_summary_json(std::ostream& out, const PrePostSummary& summary) {
    nlohmann::ordered_json j;
    j["split_date"] = summary.split.to_string();
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : summary.cells) {
        auto stats = [](const PeriodStats& s) {
            return nlohmann::ordered_json{{"months", s.months},
                                          {"mean", s.mean},
                                          {"median", s.median},
                                          {"q1", s.q1},
                                          {"q3", s.q3}};
        };
        cells.push_back({{"code", "V" + std::to_string(cell.code)},
                         {"kind", to_string(cell.kind)},
                         {"pre", stats(cell.pre_stats)},
                         {"post", stats(cell.post_stats)}});
    }
    j["cells"] = cells;
    out << j.dump(2) << '\n';
}

void write_seasonal_json(std::ostream& out, const SeasonalAssociation& assoc,
                         ViolationCode code) {
    nlohmann::ordered_json j;
    j["code"] = "V" + std::to_string(code);
    j["temperature_coefficient"] = assoc.coefficient;
    j["std_error"] = assoc.std_error;
    j["n_records"] = assoc.n_records;
    j["n_chains"] = assoc.n_chains;
    out << j.dump(2) << '\n';
}

void write_counterfactual_csv(std::ostream& out, const CounterfactualReport& report) {
    csv::Writer w(out);
    w.row({"inspection_id", "baseline_probability", "counterfactual_probability",
           "baseline_rank", "counterfactual_rank", "rank_shift"});
    for (const auto& row : report.rows)
        w.row({std::to_string(row.inspection_id), csv::format_double(row.baseline_probability),
               csv::format_double(row.counterfactual_probability),
               std::to_string(row.baseline_rank), std::to_string(row.counterfactual_rank),
               std::to_string(row.rank_shift)});
}

void write_counterfactual_summary_json(std::ostream& out, const CounterfactualReport& report) {
    const std::size_t n = report.rows.size();
    std::int64_t max_up = 0, max_down = 0;
    std::size_t moved = 0;
    for (const auto& row : report.rows) {
        max_up = std::max(max_up, row.rank_shift);
        max_down = std::min(max_down, row.rank_shift);
        moved += row.rank_shift != 0;
    }
    nlohmann::ordered_json j;
    j["mode"] = to_string(report.mode);
    j["instances"] = n;
    j["moved"] = moved;
    j["max_shift_earlier"] = max_up;
    j["max_shift_later"] = max_down;
    nlohmann::ordered_json crossings = nlohmann::ordered_json::array();
    for (double q : {0.1, 0.25, 0.5}) {
        const std::size_t threshold =
            static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        crossings.push_back({{"threshold", threshold},
                             {"crossing", crossing_count(report, threshold)}});
    }
    j["position_crossings"] = crossings;
    out << j.dump(2) << '\n';
}

}  // namespace canvass
