// canvass: risk scoring, schedule simulation and audits for food-inspection
// records. Subcommands wire the library stages together; every output lands
// under --out and reruns with identical inputs are byte-identical.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "canvass/audit.hpp"
#include "canvass/core.hpp"
#include "canvass/csv.hpp"
#include "canvass/features.hpp"
#include "canvass/ingest.hpp"
#include "canvass/model.hpp"
#include "canvass/scheduler.hpp"
#include "canvass/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace canvass;

namespace {

Date parse_date_flag(const std::string& text, const std::string& flag) {
    try {
        return Date::parse(text);
    } catch (const DataError& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Flat key=value config: each entry becomes a --key=value token inserted
// before the command-line flags, so explicit flags win (TakeLast policy).
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            break;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw CLI::FileError::Missing(config_path);
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string entry = trimmed(line);
        if (entry.empty() || entry[0] == '#') continue;
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw UsageError(config_path + ":" + std::to_string(line_no) +
                             ": expected key=value");
        const std::string key = trimmed(entry.substr(0, eq));
        const std::string value = trimmed(entry.substr(eq + 1));
        if (key.empty())
            throw UsageError(config_path + ":" + std::to_string(line_no) + ": empty key");
        tokens.push_back("--" + key + "=" + value);
    }
    std::size_t insert_at = 0;  // keep the leading subcommand names first
    while (insert_at < args.size() && !args[insert_at].empty() && args[insert_at][0] != '-')
        ++insert_at;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), tokens.begin(),
                tokens.end());
    return args;
}

void allow_config_overrides(CLI::App* app) {
    for (CLI::Option* opt : app->get_options())
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    for (CLI::App* sub : app->get_subcommands([](const CLI::App*) { return true; }))
        allow_config_overrides(sub);
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
    return out;
}

struct InputPaths {
    std::string inspections, licenses, weather, events;
};

void add_input_flags(CLI::App* cmd, InputPaths& paths, bool all_four) {
    cmd->add_option("--inspections", paths.inspections, "inspections.csv path")->required();
    if (all_four) {
        cmd->add_option("--licenses", paths.licenses, "licenses.csv path")->required();
        cmd->add_option("--weather", paths.weather, "weather.csv path")->required();
        cmd->add_option("--events", paths.events, "events.csv path")->required();
    }
}

struct WindowFlags {
    std::string start, end;

    std::optional<DateWindow> window(const char* what) const {
        if (start.empty() && end.empty()) return std::nullopt;
        if (start.empty() || end.empty())
            throw UsageError(std::string(what) + ": both start and end are required");
        return DateWindow{parse_date_flag(start, what), parse_date_flag(end, what)};
    }
};

std::vector<LabeledInstance> filter_instances(std::vector<LabeledInstance> instances,
                                              const std::optional<DateWindow>& window) {
    if (!window) return instances;
    if (window->start > window->end) throw UsageError("window start is after end");
    std::vector<LabeledInstance> out;
    for (auto& inst : instances)
        if (inst.date >= window->start && inst.date <= window->end)
            out.push_back(std::move(inst));
    return out;
}

struct ScoreRow {
    std::int64_t inspection_id;
    Date date;
    int label;
    double score;
};

void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows) {
    csv::Writer w(out);
    w.row({"inspection_id", "date", "label", "score"});
    for (const auto& r : rows)
        w.row({std::to_string(r.inspection_id), r.date.to_string(), std::to_string(r.label),
               csv::format_double(r.score)});
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
    const csv::Table table = csv::parse_file(path);
    const std::size_t id = table.column("inspection_id");
    const std::size_t date = table.column("date");
    const std::size_t label = table.column("label");
    const std::size_t score = table.column("score");
    std::vector<ScoreRow> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::string where = path + " row " + std::to_string(table.file_row(r));
        ScoreRow row;
        row.inspection_id = csv::to_int(table.cell(r, id), "inspection_id in " + where);
        row.label = static_cast<int>(csv::to_int(table.cell(r, label), "label in " + where));
        row.score = csv::to_double(table.cell(r, score), "score in " + where);
        row.date = Date::parse(table.cell(r, date));
        if (!std::isfinite(row.score))
            throw DataError(path + ": row " + std::to_string(table.file_row(r)) +
                            ": non-finite score");
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct IngestArgs {
    InputPaths in;
    std::string out;
    std::string cutoff = "2018-07-01";
};

void run_ingest(const IngestArgs& args) {
    IngestOptions opts;
    opts.cutoff = parse_date_flag(args.cutoff, "--cutoff-date");
    InspectionParseStats stats;
    const auto records = parse_inspections_file(args.in.inspections, opts, &stats);
    const auto licenses = parse_licenses_file(args.in.licenses);
    const auto weather = parse_weather_file(args.in.weather);
    const auto events = parse_events_file(args.in.events);

    LinkStats link_stats;
    link_previous_inspections(records, &link_stats);

    const fs::path out(args.out);
    {
        auto f = open_output(out, "inspections.csv");
        write_inspections_csv(f, records);
    }
    {
        auto f = open_output(out, "licenses.csv");
        write_licenses_csv(f, licenses);
    }
    {
        auto f = open_output(out, "weather.csv");
        write_weather_csv(f, weather);
    }
    {
        auto f = open_output(out, "events.csv");
        write_events_csv(f, events);
    }

    std::size_t per_kind[5] = {0, 0, 0, 0, 0};
    for (const auto& r : records) ++per_kind[static_cast<int>(r.kind)];
    nlohmann::ordered_json j;
    j["cutoff_date"] = opts.cutoff.to_string();
    j["rows_read"] = stats.rows_read;
    j["records_kept"] = records.size();
    j["dropped_after_cutoff"] = stats.dropped_after_cutoff;
    j["unknown_inspection_types"] = stats.unknown_type_count;
    j["same_date_canvass_ties"] = link_stats.same_date_ties;
    j["by_kind"] = {{"canvass", per_kind[0]},
                    {"complaint", per_kind[1]},
                    {"license", per_kind[2]},
                    {"reinspection", per_kind[3]},
                    {"other", per_kind[4]}};
    j["licenses"] = licenses.size();
    j["weather_days"] = weather.size();
    j["events"] = events.size();
    auto f = open_output(out, "ingest_summary.json");
    f << j.dump(2) << '\n';
    for (const auto& warning : stats.warnings) std::cerr << "warning: " << warning << '\n';
}

struct FeaturizeArgs {
    InputPaths in;
    std::string out;
    std::string cutoff = "2018-07-01";
    double bandwidth_meters = 1000.0;
    int window_days = 90;
    double time_since_default = 2.0;
    bool allow_missing_license = false;
};

void run_featurize(const FeaturizeArgs& args) {
    IngestOptions iopts;
    iopts.cutoff = parse_date_flag(args.cutoff, "--cutoff-date");
    const auto records = parse_inspections_file(args.in.inspections, iopts, nullptr);
    const auto licenses = index_licenses(parse_licenses_file(args.in.licenses));
    const auto weather = parse_weather_file(args.in.weather);
    const EventIndex events(parse_events_file(args.in.events));
    const auto links = link_previous_inspections(records);

    FeatureOptions fopts;
    fopts.kde.bandwidth_meters = args.bandwidth_meters;
    fopts.kde.window_days = args.window_days;
    fopts.time_since_default = args.time_since_default;
    fopts.allow_missing_license = args.allow_missing_license;

    FeatureBuildStats stats;
    const auto instances = build_instances(links, licenses, weather, events, fopts, &stats);

    const fs::path out(args.out);
    {
        auto f = open_output(out, "features.csv");
        write_features_csv(f, instances);
    }
    std::size_t positives = 0;
    for (const auto& inst : instances) positives += inst.label;
    nlohmann::ordered_json j;
    j["instances"] = instances.size();
    j["positives"] = positives;
    j["positive_rate"] =
        instances.empty() ? 0.0 : static_cast<double>(positives) / instances.size();
    j["missing_licenses"] = stats.missing_license;
    j["kde"] = {{"bandwidth_meters", args.bandwidth_meters}, {"window_days", args.window_days}};
    auto f = open_output(out, "featurize_summary.json");
    f << j.dump(2) << '\n';
    for (const auto& warning : stats.warnings) std::cerr << "warning: " << warning << '\n';
}

struct TrainArgs {
    std::string features;
    std::string clusters;
    std::string out;
    WindowFlags window;
    TrainingConfig cfg;
};

void run_train(const TrainArgs& args) {
    auto instances =
        filter_instances(read_features_file(args.features), args.window.window("--train"));
    FitResult fit;
    if (args.clusters.empty()) {
        fit = fit_logistic(instances, args.cfg);
    } else {
        fit = refit_with_clusters(instances, load_clusters(args.clusters), args.cfg);
    }
    for (const auto& dropped : fit.dropped_features)
        std::cerr << "warning: constant feature column dropped: " << dropped << '\n';
    auto f = open_output(args.out, "model.json");
    write_model_json(f, fit.model);
}

struct ClusterArgs {
    std::string features;
    std::string out;
    WindowFlags window;
    int k = kClusterCount;
    TrainingConfig cfg;
};

void run_cluster_sanitarians(const ClusterArgs& args) {
    auto instances =
        filter_instances(read_features_file(args.features), args.window.window("--train"));
    const FullModelFit full = fit_full_model(instances, args.cfg);
    const ClusterAssignment assignment =
        cluster_sanitarians(full.sanitarian_coefficients, args.k);
    auto f = open_output(args.out, "clusters.json");
    write_clusters_json(f, assignment, full.sanitarian_coefficients);
}

struct ScoreArgs {
    std::string features;
    std::string model;
    std::string out;
    WindowFlags window;
};

void run_score(const ScoreArgs& args) {
    const auto instances =
        filter_instances(read_features_file(args.features), args.window.window("--test"));
    const LogisticModel model = load_model(args.model);
    const auto scores = score_instances(model, instances);
    std::vector<ScoreRow> rows;
    rows.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        rows.push_back({instances[i].inspection_id, instances[i].date, instances[i].label,
                        scores[i]});
    auto f = open_output(args.out, "scores.csv");
    write_scores_csv(f, rows);
}

struct SimulateArgs {
    std::string scores;
    std::string out;
    std::string strategy = "model";
    int capacity = 0;  // 0: derive from distinct actual dates
    std::uint64_t seed = 7;
    int random_repeats = 100;
};

void run_simulate(const SimulateArgs& args) {
    const Strategy requested = strategy_from_string(args.strategy);
    const auto rows = read_scores_csv(args.scores);
    if (rows.empty()) throw DataError("no instances in " + args.scores);

    std::vector<ScheduleItem> items;
    std::map<std::int64_t, double> scores;
    for (const auto& r : rows) {
        items.push_back({r.inspection_id, r.date, r.label});
        scores[r.inspection_id] = r.score;
    }
    const int capacity = args.capacity > 0 ? args.capacity : default_capacity(items);

    std::vector<std::pair<std::string, ScheduleMetrics>> metrics;
    std::vector<std::pair<std::string, std::vector<HitCurvePoint>>> curves;
    for (Strategy s : {Strategy::usual, Strategy::best, Strategy::worst, Strategy::model}) {
        const Schedule sched = make_schedule(items, s, &scores, capacity);
        const ScheduleMetrics m = evaluate_schedule(sched, items);
        curves.emplace_back(to_string(s), m.curve);
        metrics.emplace_back(to_string(s), m);
    }
    {
        // Random baseline: metrics averaged across seeds, curve from the
        // first seed.
        if (args.random_repeats < 1) throw UsageError("--random-repeats must be positive");
        ScheduleMetrics averaged;
        for (int rep = 0; rep < args.random_repeats; ++rep) {
            const Schedule sched =
                make_schedule(items, Strategy::random, nullptr, capacity, args.seed + rep);
            const ScheduleMetrics m = evaluate_schedule(sched, items);
            averaged.mean_day_reduction += m.mean_day_reduction;
            averaged.std_day_reduction += m.std_day_reduction;
            averaged.first_half += m.first_half;
            if (rep == 0) {
                averaged.curve = m.curve;
                curves.emplace_back("random", m.curve);
            }
        }
        averaged.mean_day_reduction /= args.random_repeats;
        averaged.std_day_reduction /= args.random_repeats;
        averaged.first_half /= args.random_repeats;
        metrics.emplace_back("random", averaged);
    }

    const Schedule chosen = make_schedule(items, requested, &scores, capacity,
                                          requested == Strategy::random
                                              ? std::optional<std::uint64_t>(args.seed)
                                              : std::nullopt);
    const fs::path out(args.out);
    {
        auto f = open_output(out, "schedule.csv");
        write_schedule_csv(f, chosen, items, &scores);
    }
    {
        auto f = open_output(out, "hitcurve.csv");
        write_hit_curve_csv(f, curves);
    }
    auto f = open_output(out, "metrics.json");
    nlohmann::ordered_json j;
    j["capacity"] = capacity;
    j["strategy"] = to_string(requested);
    j["random_repeats"] = args.random_repeats;
    j["seed"] = args.seed;
    for (const auto& [name, m] : metrics) {
        j[name] = {{"mean_day_reduction", m.mean_day_reduction},
                   {"std_day_reduction", m.std_day_reduction},
                   {"first_half_fraction", m.first_half}};
    }
    f << j.dump(2) << '\n';
}

struct AuditCommonArgs {
    std::string inspections;
    std::string out;
    std::string cutoff = "2018-07-01";
    std::string kind = "all";
    WindowFlags window;
};

std::vector<InspectionRecord> load_audit_records(const AuditCommonArgs& args) {
    IngestOptions opts;
    opts.cutoff = parse_date_flag(args.cutoff, "--cutoff-date");
    auto records = parse_inspections_file(args.inspections, opts, nullptr);
    if (auto window = args.window.window("--window")) {
        records = filter_window(records, window->start, window->end);
    }
    if (args.kind != "all") {
        const InspectionKind kind = inspection_kind_from_string(args.kind);
        std::vector<InspectionRecord> filtered;
        for (auto& r : records)
            if (r.kind == kind) filtered.push_back(std::move(r));
        records = std::move(filtered);
    }
    return records;
}

void run_audit_hit_rates(const AuditCommonArgs& args) {
    const auto table = cluster_hit_rates(load_audit_records(args));
    {
        auto f = open_output(args.out, "hit_rates.csv");
        write_hit_rate_csv(f, table);
    }
    nlohmann::ordered_json j;
    j["total_inspections"] = table.total_inspections;
    j["total_hits"] = table.total_hits;
    j["overall_rate"] = table.total_inspections == 0
                            ? 0.0
                            : static_cast<double>(table.total_hits) / table.total_inspections;
    j["groups"] = table.rows.size();
    auto f = open_output(args.out, "hit_rates_summary.json");
    f << j.dump(2) << '\n';
}

void run_audit_codes_by_cluster(const AuditCommonArgs& args) {
    const auto rates = code_hit_rates_by_cluster(load_audit_records(args));
    {
        auto f = open_output(args.out, "codes_by_cluster.csv");
        write_code_cluster_csv(f, rates);
    }
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t row = 0; row < rates.clusters.size(); ++row)
        j[rates.clusters[row]] = rates.inspections[row];
    nlohmann::ordered_json out;
    out["inspections_per_cluster"] = j;
    auto f = open_output(args.out, "codes_by_cluster_summary.json");
    f << out.dump(2) << '\n';
}

void run_audit_monthly(const AuditCommonArgs& args, int code, const std::string& kind) {
    std::optional<ViolationCode> filter;
    if (code > 0) filter = code;
    const auto series = monthly_hit_rate_series(load_audit_records(args), filter,
                                                inspection_kind_from_string(kind));
    {
        auto f = open_output(args.out, "monthly.csv");
        write_monthly_csv(f, series);
    }
    const PeriodStats stats = summarize_rates(series);
    nlohmann::ordered_json j;
    j["code"] = code > 0 ? "V" + std::to_string(code) : "any_critical";
    j["kind"] = kind;
    j["months"] = stats.months;
    j["mean_rate"] = stats.mean;
    j["median_rate"] = stats.median;
    j["q1"] = stats.q1;
    j["q3"] = stats.q3;
    auto f = open_output(args.out, "monthly_summary.json");
    f << j.dump(2) << '\n';
}

void run_audit_prepost(const AuditCommonArgs& args, const std::string& split) {
    const auto summary = prepost_comparison(load_audit_records(args),
                                            parse_date_flag(split, "--split-date"));
    {
        auto f = open_output(args.out, "prepost.csv");
        write_prepost_csv(f, summary);
    }
    auto f = open_output(args.out, "prepost_summary.json");
    write_prepost_summary_json(f, summary);
}

void run_audit_seasonal(const AuditCommonArgs& args, const std::string& weather_path, int code,
                        std::size_t top_chains) {
    if (code < kMinViolationCode || code > kMaxViolationCode)
        throw UsageError("--code must be in 1..45");
    const auto weather = parse_weather_file(weather_path);
    const auto records = select_top_chains(load_audit_records(args), top_chains);
    if (records.empty()) throw DataError("no chain canvass records to analyze");
    const auto assoc =
        seasonal_association(records, monthly_average_temperature(weather), code);
    auto f = open_output(args.out, "seasonal.json");
    write_seasonal_json(f, assoc, code);
}

struct CounterfactualArgs {
    std::string features;
    std::string model;
    std::string out;
    std::string mode = "zero_out";
    WindowFlags window;
};

void run_audit_counterfactual(const CounterfactualArgs& args) {
    const auto instances =
        filter_instances(read_features_file(args.features), args.window.window("--test"));
    const auto report = sanitarian_counterfactual(load_model(args.model), instances,
                                                  counterfactual_mode_from_string(args.mode));
    {
        auto f = open_output(args.out, "counterfactual.csv");
        write_counterfactual_csv(f, report);
    }
    auto f = open_output(args.out, "counterfactual_summary.json");
    write_counterfactual_summary_json(f, report);
}

struct SynthArgs {
    SynthConfig cfg;
    std::string out;
    std::string range_start, range_end, train_start, train_end, test_start, test_end;
};

void run_synth(SynthArgs args) {
    if (!args.range_start.empty())
        args.cfg.range_start = parse_date_flag(args.range_start, "--range-start");
    if (!args.range_end.empty())
        args.cfg.range_end = parse_date_flag(args.range_end, "--range-end");
    if (!args.train_start.empty())
        args.cfg.train_window.start = parse_date_flag(args.train_start, "--train-start");
    if (!args.train_end.empty())
        args.cfg.train_window.end = parse_date_flag(args.train_end, "--train-end");
    if (!args.test_start.empty())
        args.cfg.test_window.start = parse_date_flag(args.test_start, "--test-start");
    if (!args.test_end.empty())
        args.cfg.test_window.end = parse_date_flag(args.test_end, "--test-end");
    const SynthBundle bundle = generate(args.cfg);
    write_bundle(args.out, bundle, args.cfg);
}

struct ReportArgs {
    InputPaths in;
    std::string out;
    std::string cutoff = "2018-07-01";
    double bandwidth_meters = 1000.0;
    int window_days = 90;
    double time_since_default = 2.0;
    bool allow_missing_license = false;
    std::string train_start, train_end, test_start, test_end;
    std::string split = "2015-01-01";
    int capacity = 0;
    std::uint64_t seed = 7;
    TrainingConfig cfg;
};

void run_report(const ReportArgs& args) {
    if (args.train_start.empty() || args.train_end.empty() || args.test_start.empty() ||
        args.test_end.empty())
        throw UsageError("report needs --train-start/--train-end/--test-start/--test-end");
    const DateWindow train{parse_date_flag(args.train_start, "--train-start"),
                           parse_date_flag(args.train_end, "--train-end")};
    const DateWindow test{parse_date_flag(args.test_start, "--test-start"),
                          parse_date_flag(args.test_end, "--test-end")};

    IngestOptions iopts;
    iopts.cutoff = parse_date_flag(args.cutoff, "--cutoff-date");
    const auto records = parse_inspections_file(args.in.inspections, iopts, nullptr);
    const auto licenses = index_licenses(parse_licenses_file(args.in.licenses));
    const auto weather = parse_weather_file(args.in.weather);
    const EventIndex events(parse_events_file(args.in.events));
    const auto links = link_previous_inspections(records);

    FeatureOptions fopts;
    fopts.kde.bandwidth_meters = args.bandwidth_meters;
    fopts.kde.window_days = args.window_days;
    fopts.time_since_default = args.time_since_default;
    fopts.allow_missing_license = args.allow_missing_license;
    const DatasetSplit split = build_dataset(links, licenses, weather, events, fopts, train, test);

    const fs::path out(args.out);
    std::vector<std::pair<std::string, std::string>> index;

    // Model: cluster the sanitarians when ids are present, else fit the
    // cluster features as they came in.
    FitResult fit;
    bool clustered = false;
    for (const auto& inst : split.train)
        if (!inst.prev_sanitarian.empty()) {
            clustered = true;
            break;
        }
    if (clustered) {
        const FullModelFit full = fit_full_model(split.train, args.cfg);
        const ClusterAssignment assignment = cluster_sanitarians(full.sanitarian_coefficients);
        {
            auto f = open_output(out, "clusters.json");
            write_clusters_json(f, assignment, full.sanitarian_coefficients);
            index.emplace_back("clusters.json", "sanitarian cluster assignment");
        }
        fit = refit_with_clusters(split.train, assignment, args.cfg);
    } else {
        fit = fit_logistic(split.train, args.cfg);
    }
    {
        auto f = open_output(out, "model.json");
        write_model_json(f, fit.model);
        index.emplace_back("model.json", "fitted risk model");
    }

    {
        auto f = open_output(out, "features.csv");
        write_features_csv(f, split.train);
        index.emplace_back("features.csv", "training feature matrix");
    }

    const auto scores_vec = score_instances(fit.model, split.test);
    std::vector<ScoreRow> score_rows;
    std::map<std::int64_t, double> scores;
    std::vector<ScheduleItem> items;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        const auto& inst = split.test[i];
        score_rows.push_back({inst.inspection_id, inst.date, inst.label, scores_vec[i]});
        scores[inst.inspection_id] = scores_vec[i];
        items.push_back({inst.inspection_id, inst.date, inst.label});
    }
    {
        auto f = open_output(out, "scores.csv");
        write_scores_csv(f, score_rows);
        index.emplace_back("scores.csv", "test-set risk scores");
    }

    const int capacity = args.capacity > 0 ? args.capacity : default_capacity(items);
    std::vector<std::pair<std::string, ScheduleMetrics>> metrics;
    std::vector<std::pair<std::string, std::vector<HitCurvePoint>>> curves;
    for (Strategy s : {Strategy::usual, Strategy::random, Strategy::best, Strategy::worst,
                       Strategy::model}) {
        const Schedule sched = make_schedule(items, s, &scores, capacity, args.seed);
        const ScheduleMetrics m = evaluate_schedule(sched, items);
        metrics.emplace_back(to_string(s), m);
        curves.emplace_back(to_string(s), m.curve);
        if (s == Strategy::model) {
            auto f = open_output(out, "schedule.csv");
            write_schedule_csv(f, sched, items, &scores);
            index.emplace_back("schedule.csv", "model-strategy schedule");
        }
    }
    {
        auto f = open_output(out, "metrics.json");
        write_metrics_json(f, metrics);
        index.emplace_back("metrics.json", "schedule metrics per strategy");
    }
    {
        auto f = open_output(out, "hitcurve.csv");
        write_hit_curve_csv(f, curves);
        index.emplace_back("hitcurve.csv", "cumulative hit curves per strategy");
    }

    {
        auto f = open_output(out, "hit_rates.csv");
        write_hit_rate_csv(f, cluster_hit_rates(records));
        index.emplace_back("hit_rates.csv", "hit rates by sanitarian cluster");
    }
    {
        auto f = open_output(out, "codes_by_cluster.csv");
        write_code_cluster_csv(f, code_hit_rates_by_cluster(records));
        index.emplace_back("codes_by_cluster.csv", "per-code hit rates by cluster");
    }
    try {
        const auto summary =
            prepost_comparison(records, parse_date_flag(args.split, "--split-date"));
        auto f = open_output(out, "prepost.csv");
        write_prepost_csv(f, summary);
        auto g = open_output(out, "prepost_summary.json");
        write_prepost_summary_json(g, summary);
        index.emplace_back("prepost.csv", "monthly hit rates around the split date");
        index.emplace_back("prepost_summary.json", "pre/post distribution summaries");
    } catch (const DataError& e) {
        std::cerr << "warning: prepost skipped: " << e.what() << '\n';
    }
    try {
        const auto report = sanitarian_counterfactual(fit.model, split.test,
                                                      CounterfactualMode::zero_out);
        auto f = open_output(out, "counterfactual.csv");
        write_counterfactual_csv(f, report);
        auto g = open_output(out, "counterfactual_summary.json");
        write_counterfactual_summary_json(g, report);
        index.emplace_back("counterfactual.csv", "rescoring without cluster contributions");
        index.emplace_back("counterfactual_summary.json", "counterfactual rank-shift summary");
    } catch (const DataError& e) {
        std::cerr << "warning: counterfactual skipped: " << e.what() << '\n';
    }

    nlohmann::ordered_json j;
    j["capacity"] = capacity;
    j["train_window"] = {train.start.to_string(), train.end.to_string()};
    j["test_window"] = {test.start.to_string(), test.end.to_string()};
    j["train_instances"] = split.train.size();
    j["test_instances"] = split.test.size();
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [name, description] : index)
        files.push_back({{"file", name}, {"description", description}});
    j["files"] = files;
    auto f = open_output(out, "index.json");
    f << j.dump(2) << '\n';
}

void add_training_flags(CLI::App* cmd, TrainingConfig& cfg) {
    cmd->add_option("--max-iterations", cfg.max_iterations, "IRLS iteration cap");
    cmd->add_option("--gradient-tolerance", cfg.gradient_tolerance,
                    "convergence threshold on the gradient max-norm");
    cmd->add_option("--ridge", cfg.ridge_epsilon, "conditioning ridge on the coefficients");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"food-inspection risk modeling, schedule simulation and audits"};
    app.require_subcommand(1);

    std::string config_path_unused;
    auto add_config = [&config_path_unused](CLI::App* cmd) {
        cmd->add_option("--config", config_path_unused,
                        "key=value config file; flags override");
    };

    IngestArgs ingest_args;
    auto* ingest_cmd = app.add_subcommand("ingest", "validate and normalize the input CSVs");
    add_config(ingest_cmd);
    add_input_flags(ingest_cmd, ingest_args.in, true);
    ingest_cmd->add_option("--out", ingest_args.out, "output directory")->required();
    ingest_cmd->add_option("--cutoff-date", ingest_args.cutoff, "drop rows on/after this date");

    FeaturizeArgs feat_args;
    auto* feat_cmd = app.add_subcommand("featurize", "build the 16-predictor feature matrix");
    add_config(feat_cmd);
    add_input_flags(feat_cmd, feat_args.in, true);
    feat_cmd->add_option("--out", feat_args.out, "output directory")->required();
    feat_cmd->add_option("--cutoff-date", feat_args.cutoff, "drop rows on/after this date");
    feat_cmd->add_option("--bandwidth-meters", feat_args.bandwidth_meters, "KDE bandwidth");
    feat_cmd->add_option("--window-days", feat_args.window_days, "KDE trailing window");
    feat_cmd->add_option("--time-since-default", feat_args.time_since_default,
                         "imputed years since last inspection when none exists");
    feat_cmd->add_flag("--allow-missing-license", feat_args.allow_missing_license,
                       "default age/alcohol/tobacco to 0 when no license row matches");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "fit the logistic risk model");
    add_config(train_cmd);
    train_cmd->add_option("--features", train_args.features, "features.csv path")->required();
    train_cmd->add_option("--clusters", train_args.clusters,
                          "clusters.json; rebuilds cluster indicators from the assignment");
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--train-start", train_args.window.start, "training window start");
    train_cmd->add_option("--train-end", train_args.window.end, "training window end");
    add_training_flags(train_cmd, train_args.cfg);

    ClusterArgs cluster_args;
    auto* cluster_cmd =
        app.add_subcommand("cluster-sanitarians", "cluster sanitarians by full-model coefficients");
    add_config(cluster_cmd);
    cluster_cmd->add_option("--features", cluster_args.features, "features.csv path")->required();
    cluster_cmd->add_option("--out", cluster_args.out, "output directory")->required();
    cluster_cmd->add_option("--k", cluster_args.k, "cluster count");
    cluster_cmd->add_option("--train-start", cluster_args.window.start, "training window start");
    cluster_cmd->add_option("--train-end", cluster_args.window.end, "training window end");
    add_training_flags(cluster_cmd, cluster_args.cfg);

    ScoreArgs score_args;
    auto* score_cmd = app.add_subcommand("score", "predict critical-violation probabilities");
    add_config(score_cmd);
    score_cmd->add_option("--features", score_args.features, "features.csv path")->required();
    score_cmd->add_option("--model", score_args.model, "model.json path")->required();
    score_cmd->add_option("--out", score_args.out, "output directory")->required();
    score_cmd->add_option("--test-start", score_args.window.start, "test window start");
    score_cmd->add_option("--test-end", score_args.window.end, "test window end");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate schedules and compute metrics");
    add_config(sim_cmd);
    sim_cmd->add_option("--scores", sim_args.scores, "scores.csv path")->required();
    sim_cmd->add_option("--out", sim_args.out, "output directory")->required();
    sim_cmd->add_option("--strategy", sim_args.strategy,
                        "usual|random|best|worst|model (schedule.csv strategy)");
    sim_cmd->add_option("--capacity", sim_args.capacity,
                        "inspections per day; 0 derives it from distinct dates");
    sim_cmd->add_option("--seed", sim_args.seed, "random-strategy seed");
    sim_cmd->add_option("--random-repeats", sim_args.random_repeats,
                        "seeds averaged for the random baseline");

    auto* audit_cmd = app.add_subcommand("audit", "behavioral audits over inspection records");
    audit_cmd->require_subcommand(1);

    AuditCommonArgs hit_args;
    auto* hit_cmd = audit_cmd->add_subcommand("hit-rates", "hit rates by sanitarian cluster");
    AuditCommonArgs codes_args;
    auto* codes_cmd =
        audit_cmd->add_subcommand("codes-by-cluster", "per-code hit rates by cluster");
    AuditCommonArgs monthly_args;
    int monthly_code = 0;
    std::string monthly_kind = "canvass";
    auto* monthly_cmd = audit_cmd->add_subcommand("monthly", "monthly hit-rate series");
    AuditCommonArgs prepost_args;
    std::string prepost_split = "2015-01-01";
    auto* prepost_cmd =
        audit_cmd->add_subcommand("prepost", "monthly hit rates before/after a split date");
    AuditCommonArgs seasonal_args;
    std::string seasonal_weather;
    int seasonal_code = 3;
    std::size_t seasonal_chains = 51;
    auto* seasonal_cmd = audit_cmd->add_subcommand(
        "seasonal", "chain-controlled temperature association for one code");

    for (auto [cmd, args] : {std::pair{hit_cmd, &hit_args}, std::pair{codes_cmd, &codes_args},
                             std::pair{monthly_cmd, &monthly_args},
                             std::pair{prepost_cmd, &prepost_args},
                             std::pair{seasonal_cmd, &seasonal_args}}) {
        add_config(cmd);
        cmd->add_option("--inspections", args->inspections, "inspections.csv path")->required();
        cmd->add_option("--out", args->out, "output directory")->required();
        cmd->add_option("--cutoff-date", args->cutoff, "drop rows on/after this date");
        cmd->add_option("--kind", args->kind, "canvass|complaint|all record filter");
        cmd->add_option("--start", args->window.start, "window start");
        cmd->add_option("--end", args->window.end, "window end");
    }
    monthly_cmd->add_option("--code", monthly_code, "violation code (0 = any critical)");
    monthly_cmd->add_option("--series-kind", monthly_kind, "canvass|complaint series");
    prepost_cmd->add_option("--split-date", prepost_split, "deployment split date");
    seasonal_cmd->add_option("--weather", seasonal_weather, "weather.csv path")->required();
    seasonal_cmd->add_option("--code", seasonal_code, "violation code to associate");
    seasonal_cmd->add_option("--top-chains", seasonal_chains, "chains kept by record count");

    CounterfactualArgs cf_args;
    auto* cf_cmd = audit_cmd->add_subcommand("counterfactual",
                                             "rescoring without the cluster contribution");
    add_config(cf_cmd);
    cf_cmd->add_option("--features", cf_args.features, "features.csv path")->required();
    cf_cmd->add_option("--model", cf_args.model, "model.json path")->required();
    cf_cmd->add_option("--out", cf_args.out, "output directory")->required();
    cf_cmd->add_option("--mode", cf_args.mode, "zero_out|reference_mean");
    cf_cmd->add_option("--test-start", cf_args.window.start, "test window start");
    cf_cmd->add_option("--test-end", cf_args.window.end, "test window end");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic mini-city");
    add_config(synth_cmd);
    synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
    synth_cmd->add_option("--seed", synth_args.cfg.seed, "generation seed");
    synth_cmd->add_option("--n-establishments", synth_args.cfg.n_establishments, "");
    synth_cmd->add_option("--n-inspections", synth_args.cfg.n_inspections, "");
    synth_cmd->add_option("--n-sanitarians", synth_args.cfg.n_sanitarians, "");
    synth_cmd->add_option("--complaint-fraction", synth_args.cfg.complaint_fraction, "");
    synth_cmd->add_option("--temperature-effect", synth_args.cfg.temperature_effect, "");
    synth_cmd->add_option("--bandwidth-meters", synth_args.cfg.kde.bandwidth_meters,
                          "KDE bandwidth used for the planted labels");
    synth_cmd->add_option("--window-days", synth_args.cfg.kde.window_days, "");
    synth_cmd->add_option("--range-start", synth_args.range_start, "");
    synth_cmd->add_option("--range-end", synth_args.range_end, "");
    synth_cmd->add_option("--train-start", synth_args.train_start, "");
    synth_cmd->add_option("--train-end", synth_args.train_end, "");
    synth_cmd->add_option("--test-start", synth_args.test_start, "");
    synth_cmd->add_option("--test-end", synth_args.test_end, "");

    ReportArgs report_args;
    auto* report_cmd =
        app.add_subcommand("report", "full pipeline into one indexed output bundle");
    add_config(report_cmd);
    add_input_flags(report_cmd, report_args.in, true);
    report_cmd->add_option("--out", report_args.out, "output directory")->required();
    report_cmd->add_option("--cutoff-date", report_args.cutoff, "");
    report_cmd->add_option("--bandwidth-meters", report_args.bandwidth_meters, "");
    report_cmd->add_option("--window-days", report_args.window_days, "");
    report_cmd->add_option("--time-since-default", report_args.time_since_default, "");
    report_cmd->add_flag("--allow-missing-license", report_args.allow_missing_license, "");
    report_cmd->add_option("--train-start", report_args.train_start, "")->required();
    report_cmd->add_option("--train-end", report_args.train_end, "")->required();
    report_cmd->add_option("--test-start", report_args.test_start, "")->required();
    report_cmd->add_option("--test-end", report_args.test_end, "")->required();
    report_cmd->add_option("--split-date", report_args.split, "");
    report_cmd->add_option("--capacity", report_args.capacity, "");
    report_cmd->add_option("--seed", report_args.seed, "");
    add_training_flags(report_cmd, report_args.cfg);

    allow_config_overrides(&app);
    try {
        std::vector<std::string> args =
            expand_config(std::vector<std::string>(argv + 1, argv + argc));
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    }

    try {
        if (*ingest_cmd) run_ingest(ingest_args);
        if (*feat_cmd) run_featurize(feat_args);
        if (*train_cmd) run_train(train_args);
        if (*cluster_cmd) run_cluster_sanitarians(cluster_args);
        if (*score_cmd) run_score(score_args);
        if (*sim_cmd) run_simulate(sim_args);
        if (*hit_cmd) run_audit_hit_rates(hit_args);
        if (*codes_cmd) run_audit_codes_by_cluster(codes_args);
        if (*monthly_cmd) run_audit_monthly(monthly_args, monthly_code, monthly_kind);
        if (*prepost_cmd) run_audit_prepost(prepost_args, prepost_split);
        if (*seasonal_cmd)
            run_audit_seasonal(seasonal_args, seasonal_weather, seasonal_code, seasonal_chains);
        if (*cf_cmd) run_audit_counterfactual(cf_args);
        if (*synth_cmd) run_synth(synth_args);
        if (*report_cmd) run_report(report_args);
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: data: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
