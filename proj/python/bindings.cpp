// Python bindings for the main operations: severity/labeling, KDE
// intensities, the logistic trainer and scorer, 1D cluster assignment,
// schedule simulation and the synthetic city generator. Models and reports
// cross the boundary as plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "canvass/audit.hpp"
#include "canvass/core.hpp"
#include "canvass/features.hpp"
#include "canvass/model.hpp"
#include "canvass/scheduler.hpp"
#include "canvass/synth.hpp"

namespace py = pybind11;
using namespace canvass;

namespace {

LogisticModel model_from_dict(const py::dict& d) {
    LogisticModel m;
    m.feature_names = d["feature_names"].cast<std::vector<std::string>>();
    m.coefficients = d["coefficients"].cast<std::vector<double>>();
    m.intercept = d.contains("intercept") ? d["intercept"].cast<double>() : 0.0;
    return m;
}

py::dict model_to_dict(const FitResult& fit) {
    py::dict d;
    d["feature_names"] = fit.model.feature_names;
    d["coefficients"] = fit.model.coefficients;
    d["intercept"] = fit.model.intercept;
    d["std_errors"] = fit.std_errors;
    d["dropped_features"] = fit.dropped_features;
    d["iterations"] = fit.model.meta.iterations;
    d["log_likelihood"] = fit.model.meta.log_likelihood;
    d["gradient_norm"] = fit.model.meta.gradient_norm;
    return d;
}

std::vector<PointEvent> events_from_list(const std::vector<std::tuple<std::string, double, double>>& raw) {
    std::vector<PointEvent> events;
    events.reserve(raw.size());
    for (const auto& [date, lat, lon] : raw)
        events.push_back({EventKind::burglary, Date::parse(date), {lat, lon}});
    return events;
}

std::vector<ScheduleItem> items_from_list(
    const std::vector<std::tuple<std::int64_t, std::string, int>>& raw) {
    std::vector<ScheduleItem> items;
    items.reserve(raw.size());
    for (const auto& [id, date, label] : raw) items.push_back({id, Date::parse(date), label});
    return items;
}

}  // namespace

PYBIND11_MODULE(_canvass, m) {
    m.doc() = "food-inspection risk modeling: scoring, scheduling and audits";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("severity_of",
          [](int code) { return to_string(severity_of(code)); },
          py::arg("code"), "Severity band of a violation code: 1-14 critical, 15-29 serious, "
                           "30-45 minor.");

    m.def("target_label",
          [](const std::set<int>& violations) { return target_label(violations); },
          py::arg("violations"),
          "1 when any cited code is critical (1..14), else 0.");

    m.def("fractional_years",
          [](const std::string& earlier, const std::string& later) {
              return fractional_years(Date::parse(earlier), Date::parse(later));
          },
          py::arg("earlier"), py::arg("later"),
          "Days between two ISO dates divided by 365.25.");

    m.def("kde_intensity",
          [](const std::vector<std::tuple<std::string, double, double>>& events, double lat,
             double lon, const std::string& on, double bandwidth_meters, int window_days) {
              KdeConfig cfg{bandwidth_meters, window_days};
              return kde_intensity(events_from_list(events), {lat, lon}, Date::parse(on), cfg);
          },
          py::arg("events"), py::arg("lat"), py::arg("lon"), py::arg("on"),
          py::arg("bandwidth_meters") = 1000.0, py::arg("window_days") = 90,
          "Gaussian-kernel intensity of (date, lat, lon) events in the half-open "
          "window [on - window_days, on).");

    m.def("ground_distance_meters",
          [](double lat1, double lon1, double lat2, double lon2) {
              return ground_distance_meters({lat1, lon1}, {lat2, lon2});
          });

    m.def("fit_logistic",
          [](const std::vector<std::string>& names,
             const std::vector<std::vector<double>>& columns,
             const std::vector<double>& labels, int max_iterations, double gradient_tolerance,
             double ridge_epsilon) {
              TrainingConfig cfg{max_iterations, gradient_tolerance, ridge_epsilon};
              return model_to_dict(fit_matrix(names, columns, labels, cfg));
          },
          py::arg("feature_names"), py::arg("columns"), py::arg("labels"),
          py::arg("max_iterations") = 50, py::arg("gradient_tolerance") = 1e-8,
          py::arg("ridge_epsilon") = 1e-8,
          "IRLS maximum-likelihood logistic regression over column-major data; "
          "returns the model as a dict.");

    m.def("predict_probability",
          [](const py::dict& model, const std::map<std::string, double>& values) {
              return predict_probability(model_from_dict(model), values);
          },
          py::arg("model"), py::arg("values"));

    m.def("odds_ratio",
          [](const py::dict& model, const std::string& feature) {
              return odds_ratio(model_from_dict(model), feature);
          },
          py::arg("model"), py::arg("feature"), "exp(coefficient) of the named feature.");

    m.def("cluster_1d",
          [](const std::map<std::string, double>& coefficients, int k) {
              const auto assignment = cluster_sanitarians(coefficients, k);
              py::dict d;
              py::dict members;
              for (const auto& [id, label] : assignment.assignment)
                  members[py::str(id)] = to_string(label);
              py::dict means;
              for (const auto& [label, mean] : assignment.cluster_means)
                  means[py::str(to_string(label))] = mean;
              d["assignment"] = members;
              d["cluster_means"] = means;
              return d;
          },
          py::arg("coefficients"), py::arg("k") = 6,
          "SSE-optimal 1D clustering; labels purple..brown by descending mean.");

    m.def("simulate_schedule",
          [](const std::vector<std::tuple<std::int64_t, std::string, int>>& items_raw,
             const std::string& strategy, const std::optional<std::map<std::int64_t, double>>& scores,
             int capacity, std::optional<std::uint64_t> seed) {
              const auto items = items_from_list(items_raw);
              const Strategy s = strategy_from_string(strategy);
              const int cap = capacity > 0 ? capacity : default_capacity(items);
              const Schedule schedule =
                  make_schedule(items, s, scores ? &*scores : nullptr, cap, seed);
              const auto metrics = evaluate_schedule(schedule, items);
              py::dict d;
              d["ordering"] = schedule.ordering;
              d["capacity"] = cap;
              d["mean_day_reduction"] = metrics.mean_day_reduction;
              d["std_day_reduction"] = metrics.std_day_reduction;
              d["first_half_fraction"] = metrics.first_half;
              std::vector<std::pair<int, std::size_t>> curve;
              for (const auto& point : metrics.curve)
                  curve.emplace_back(point.day, point.cumulative_hits);
              d["hit_curve"] = curve;
              return d;
          },
          py::arg("items"), py::arg("strategy"), py::arg("scores") = py::none(),
          py::arg("capacity") = 0, py::arg("seed") = py::none(),
          "Simulates one schedule over (inspection_id, date, label) items and "
          "returns its ordering plus the three metrics.");

    m.def("generate_city",
          [](std::uint64_t seed, std::size_t n_establishments, std::size_t n_inspections,
             const std::string& out_dir) {
              SynthConfig cfg;
              cfg.seed = seed;
              cfg.n_establishments = n_establishments;
              cfg.n_inspections = n_inspections;
              const SynthBundle bundle = generate(cfg);
              if (!out_dir.empty()) write_bundle(out_dir, bundle, cfg);
              py::dict d;
              d["total_inspections"] = bundle.manifest.total_inspections;
              d["canvass"] = bundle.manifest.canvass_count;
              d["complaint"] = bundle.manifest.complaint_count;
              d["train_canvass"] = bundle.manifest.train_canvass;
              d["test_canvass"] = bundle.manifest.test_canvass;
              d["canvass_positive_rate"] = bundle.manifest.canvass_positive_rate;
              return d;
          },
          py::arg("seed") = 7, py::arg("n_establishments") = 400,
          py::arg("n_inspections") = 500, py::arg("out_dir") = std::string(),
          "Generates the seeded synthetic mini-city; writes the canonical CSV "
          "bundle when out_dir is given and returns the tally manifest.");

    m.attr("FEATURE_NAMES") = feature_names();
    m.attr("__version__") = "0.1.0";
}
