#include "canvass/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace canvass {

namespace {

constexpr double kSeparationThreshold = 30.0;

double stable_log1pexp(double z) {
    // log(1 + e^z) without overflow
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

std::string hash_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Design {
    Eigen::MatrixXd X;  // n x (1 + p), intercept first
    Eigen::VectorXd y;
    std::vector<std::string> names;           // kept feature names
    std::vector<std::string> dropped;         // constant columns
};

Design build_design(const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& columns,
                    const std::vector<double>& labels) {
    if (names.size() != columns.size())
        throw UsageError("fit: feature name count does not match column count");
    const std::size_t n = labels.size();
    if (n == 0) throw DataError("fit: no instances");
    for (std::size_t j = 0; j < columns.size(); ++j)
        if (columns[j].size() != n)
            throw UsageError("fit: column '" + names[j] + "' has wrong length");

    std::size_t positives = 0;
    for (double y : labels) {
        if (y != 0.0 && y != 1.0) throw DataError("fit: labels must be 0 or 1");
        positives += y == 1.0;
    }
    if (positives == 0 || positives == n)
        throw DataError("fit: need at least one positive and one negative label");

    Design d;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const auto [lo, hi] = std::minmax_element(columns[j].begin(), columns[j].end());
        if (*lo == *hi) {
            d.dropped.push_back(names[j]);
        } else {
            d.names.push_back(names[j]);
            kept.push_back(j);
        }
    }

    d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept.size() + 1));
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        d.X(static_cast<Eigen::Index>(i), 0) = 1.0;
        d.y(static_cast<Eigen::Index>(i)) = labels[i];
    }
    for (std::size_t c = 0; c < kept.size(); ++c)
        for (std::size_t i = 0; i < n; ++i)
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) =
                columns[kept[c]][i];
    return d;
}

double penalized_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, double ridge) {
    const Eigen::VectorXd z = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) ll += y(i) * z(i) - stable_log1pexp(z(i));
    double penalty = 0.0;
    for (Eigen::Index j = 1; j < beta.size(); ++j) penalty += beta(j) * beta(j);
    return ll - 0.5 * ridge * penalty;
}

}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string training_config_hash(const TrainingConfig& cfg) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max_iterations=%d;gradient_tolerance=%.17g;ridge=%.17g",
                  cfg.max_iterations, cfg.gradient_tolerance, cfg.ridge_epsilon);
    return hash_hex(buf);
}

LogisticModel make_model(std::vector<std::string> names, std::vector<double> coefficients,
                         double intercept) {
    if (names.size() != coefficients.size())
        throw UsageError("model: name/coefficient count mismatch");
    LogisticModel m;
    m.feature_names = std::move(names);
    m.coefficients = std::move(coefficients);
    m.intercept = intercept;
    return m;
}

FitResult fit_matrix(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& labels, const TrainingConfig& cfg) {
    if (cfg.max_iterations <= 0 || cfg.gradient_tolerance <= 0.0 || cfg.ridge_epsilon <= 0.0)
        throw UsageError("fit: training config values must be positive");

    Design d = build_design(names, columns, labels);
    const Eigen::Index n = d.X.rows();
    const Eigen::Index m = d.X.cols();
    const double ridge = cfg.ridge_epsilon;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
    const double base_rate = d.y.mean();
    beta(0) = std::log(base_rate / (1.0 - base_rate));

    FitResult result;
    double ll = penalized_loglik(d.X, d.y, beta, ridge);
    double grad_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const Eigen::VectorXd z = d.X * beta;
        Eigen::VectorXd p(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = sigmoid(z(i));
            w(i) = p(i) * (1.0 - p(i));
        }

        Eigen::VectorXd grad = d.X.transpose() * (d.y - p);
        for (Eigen::Index j = 1; j < m; ++j) grad(j) -= ridge * beta(j);
        grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (grad_norm < cfg.gradient_tolerance) {
            converged = true;
            iterations = iter - 1;
            break;
        }

        Eigen::MatrixXd hess = d.X.transpose() * w.asDiagonal() * d.X;
        for (Eigen::Index j = 1; j < m; ++j) hess(j, j) += ridge;
        const Eigen::VectorXd step = hess.ldlt().solve(grad);

        // Halve the Newton step until the penalized likelihood does not
        // decrease; keeps the per-iteration likelihood path monotone. The
        // slack scales with |ll| so evaluation noise near the optimum does
        // not stall the solver.
        const double slack = 1e-10 * (1.0 + std::abs(ll));
        double t = 1.0;
        Eigen::VectorXd candidate = beta + step;
        double candidate_ll = penalized_loglik(d.X, d.y, candidate, ridge);
        while (candidate_ll < ll - slack && t > 1e-10) {
            t *= 0.5;
            candidate = beta + t * step;
            candidate_ll = penalized_loglik(d.X, d.y, candidate, ridge);
        }
        beta = candidate;
        ll = candidate_ll;
        iterations = iter;
        result.log_likelihood_path.push_back(ll);

        for (Eigen::Index j = 1; j < m; ++j) {
            if (std::abs(beta(j)) > kSeparationThreshold)
                throw SeparationError("fit: perfect separation suspected (|coefficient| of '" +
                                      d.names[static_cast<std::size_t>(j - 1)] + "' exceeds 30)");
        }
    }

    if (!converged) {
        // final gradient check after the last update
        const Eigen::VectorXd z = d.X * beta;
        Eigen::VectorXd p(n);
        for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(z(i));
        Eigen::VectorXd grad = d.X.transpose() * (d.y - p);
        for (Eigen::Index j = 1; j < m; ++j) grad(j) -= ridge * beta(j);
        grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (grad_norm >= cfg.gradient_tolerance) {
            std::vector<double> last(beta.data(), beta.data() + beta.size());
            std::ostringstream msg;
            msg << "fit: no convergence in " << cfg.max_iterations
                << " iterations; gradient max-norm " << grad_norm;
            throw ConvergenceError(msg.str(), std::move(last), grad_norm);
        }
    }

    // Standard errors from the observed information (no ridge).
    Eigen::VectorXd p(n), w(n);
    const Eigen::VectorXd z = d.X * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
        p(i) = sigmoid(z(i));
        w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::MatrixXd info = d.X.transpose() * w.asDiagonal() * d.X;
    const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(m, m));

    LogisticModel model;
    model.feature_names = d.names;
    model.coefficients.assign(beta.data() + 1, beta.data() + m);
    model.intercept = beta(0);
    model.meta.iterations = iterations;
    model.meta.log_likelihood = penalized_loglik(d.X, d.y, beta, ridge);
    model.meta.gradient_norm = grad_norm;
    model.meta.config_hash = training_config_hash(cfg);

    result.model = std::move(model);
    result.intercept_std_error = std::sqrt(std::max(0.0, cov(0, 0)));
    for (Eigen::Index j = 1; j < m; ++j)
        result.std_errors.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    result.dropped_features = std::move(d.dropped);
    return result;
}

FitResult fit_logistic(const std::vector<LabeledInstance>& instances,
                       const TrainingConfig& cfg) {
    if (instances.empty()) throw DataError("fit: no instances");
    std::vector<std::vector<double>> columns(kFeatureCount,
                                             std::vector<double>(instances.size()));
    std::vector<double> labels(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto values = feature_values(instances[i].features);
        for (std::size_t j = 0; j < kFeatureCount; ++j) columns[j][i] = values[j];
        labels[i] = instances[i].label;
    }
    return fit_matrix(feature_names(), columns, labels, cfg);
}

double log_likelihood_at(const std::vector<std::vector<double>>& columns,
                         const std::vector<double>& labels, const std::vector<double>& beta,
                         double ridge_epsilon) {
    const std::size_t n = labels.size();
    if (beta.size() != columns.size() + 1)
        throw UsageError("log_likelihood_at: beta must be intercept + one per column");
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = beta[0];
        for (std::size_t j = 0; j < columns.size(); ++j) z += beta[j + 1] * columns[j][i];
        ll += labels[i] * z - stable_log1pexp(z);
    }
    double penalty = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) penalty += beta[j] * beta[j];
    return ll - 0.5 * ridge_epsilon * penalty;
}

std::vector<double> gradient_at(const std::vector<std::vector<double>>& columns,
                                const std::vector<double>& labels,
                                const std::vector<double>& beta, double ridge_epsilon) {
    const std::size_t n = labels.size();
    if (beta.size() != columns.size() + 1)
        throw UsageError("gradient_at: beta must be intercept + one per column");
    std::vector<double> grad(beta.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = beta[0];
        for (std::size_t j = 0; j < columns.size(); ++j) z += beta[j + 1] * columns[j][i];
        const double resid = labels[i] - sigmoid(z);
        grad[0] += resid;
        for (std::size_t j = 0; j < columns.size(); ++j) grad[j + 1] += resid * columns[j][i];
    }
    for (std::size_t j = 1; j < beta.size(); ++j) grad[j] -= ridge_epsilon * beta[j];
    return grad;
}

double linear_predictor(const LogisticModel& model, const std::map<std::string, double>& values) {
    double z = model.intercept;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        auto it = values.find(model.feature_names[j]);
        if (it == values.end())
            throw DataError("feature '" + model.feature_names[j] + "' missing from input");
        z += model.coefficients[j] * it->second;
    }
    return z;
}

double predict_probability(const LogisticModel& model,
                           const std::map<std::string, double>& values) {
    double p = sigmoid(linear_predictor(model, values));
    p = std::max(p, std::numeric_limits<double>::min());
    p = std::min(p, std::nextafter(1.0, 0.0));
    return p;
}

std::map<std::string, double> named_values(const FeatureVector& fv) {
    std::map<std::string, double> out;
    const auto values = feature_values(fv);
    for (std::size_t j = 0; j < kFeatureCount; ++j) out[feature_names()[j]] = values[j];
    return out;
}

double predict_probability(const LogisticModel& model, const FeatureVector& fv) {
    return predict_probability(model, named_values(fv));
}

std::vector<double> score_instances(const LogisticModel& model,
                                    const std::vector<LabeledInstance>& instances) {
    std::vector<double> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(predict_probability(model, inst.features));
    return out;
}

double odds_ratio(const LogisticModel& model, const std::string& feature_name) {
    for (std::size_t j = 0; j < model.feature_names.size(); ++j)
        if (model.feature_names[j] == feature_name) return std::exp(model.coefficients[j]);
    throw DataError("unknown feature '" + feature_name + "'");
}

std::vector<std::size_t> optimal_1d_clusters(const std::vector<double>& sorted_values,
                                             std::size_t k) {
    const std::size_t n = sorted_values.size();
    if (n == 0) throw UsageError("clustering: no values");
    if (k < 1 || k > n) throw UsageError("clustering: k out of range");

    std::vector<double> prefix(n + 1, 0.0), prefix2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + sorted_values[i];
        prefix2[i + 1] = prefix2[i] + sorted_values[i] * sorted_values[i];
    }
    auto cost = [&](std::size_t a, std::size_t b) {  // inclusive 0-based range
        const double s = prefix[b + 1] - prefix[a];
        const double s2 = prefix2[b + 1] - prefix2[a];
        const double cnt = static_cast<double>(b - a + 1);
        return std::max(0.0, s2 - s * s / cnt);
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best(k + 1, std::vector<double>(n + 1, kInf));
    std::vector<std::vector<std::size_t>> split(k + 1, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t i = 1; i <= n; ++i) best[1][i] = cost(0, i - 1);
    for (std::size_t m = 2; m <= k; ++m) {
        for (std::size_t i = m; i <= n; ++i) {
            for (std::size_t j = m; j <= i; ++j) {
                const double candidate = best[m - 1][j - 1] + cost(j - 1, i - 1);
                if (candidate < best[m][i]) {
                    best[m][i] = candidate;
                    split[m][i] = j;
                }
            }
        }
    }

    std::vector<std::size_t> cluster_of(n, 0);
    std::size_t end = n;
    for (std::size_t m = k; m >= 2; --m) {
        const std::size_t start = split[m][end];
        for (std::size_t i = start - 1; i < end; ++i) cluster_of[i] = m - 1;
        end = start - 1;
    }
    for (std::size_t i = 0; i < end; ++i) cluster_of[i] = 0;
    return cluster_of;
}

double partition_sse(const std::vector<double>& sorted_values,
                     const std::vector<std::size_t>& cluster_of) {
    const std::size_t k =
        cluster_of.empty() ? 0 : *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
    double sse = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < sorted_values.size(); ++i) {
            if (cluster_of[i] != c) continue;
            sum += sorted_values[i];
            ++count;
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        for (std::size_t i = 0; i < sorted_values.size(); ++i) {
            if (cluster_of[i] != c) continue;
            const double d = sorted_values[i] - mean;
            sse += d * d;
        }
    }
    return sse;
}

ClusterAssignment cluster_sanitarians(const std::map<std::string, double>& coefficients, int k) {
    if (k < 1) throw UsageError("clustering: k must be at least 1");
    if (k > kClusterCount) throw UsageError("clustering: at most 6 cluster labels exist");
    if (coefficients.empty()) throw UsageError("clustering: no coefficients");

    std::vector<std::pair<double, std::string>> items;
    items.reserve(coefficients.size());
    for (const auto& [id, coef] : coefficients) items.emplace_back(coef, id);
    std::sort(items.begin(), items.end());

    std::vector<double> values;
    values.reserve(items.size());
    for (const auto& [coef, id] : items) values.push_back(coef);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (i == 0 || values[i] != values[i - 1]) ++distinct;
    const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), distinct);

    const std::vector<std::size_t> cluster_of = optimal_1d_clusters(values, k_eff);

    std::vector<double> sums(k_eff, 0.0);
    std::vector<std::size_t> counts(k_eff, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        sums[cluster_of[i]] += values[i];
        ++counts[cluster_of[i]];
    }
    // Rank ascending clusters by descending mean: highest mean -> purple.
    std::vector<std::size_t> order(k_eff);
    for (std::size_t c = 0; c < k_eff; ++c) order[c] = c;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sums[a] / counts[a] > sums[b] / counts[b];
    });
    std::vector<ClusterLabel> label_of(k_eff, ClusterLabel::purple);
    ClusterAssignment out;
    for (std::size_t rank = 0; rank < k_eff; ++rank) {
        const ClusterLabel label = all_cluster_labels()[rank];
        label_of[order[rank]] = label;
        out.cluster_means[label] = sums[order[rank]] / counts[order[rank]];
    }
    for (std::size_t i = 0; i < items.size(); ++i)
        out.assignment[items[i].second] = label_of[cluster_of[i]];
    return out;
}

namespace {

constexpr std::size_t kBaseFeatureCount = 10;

std::vector<std::vector<double>> base_columns(const std::vector<LabeledInstance>& instances) {
    std::vector<std::vector<double>> columns(kBaseFeatureCount,
                                             std::vector<double>(instances.size()));
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto values = feature_values(instances[i].features);
        for (std::size_t j = 0; j < kBaseFeatureCount; ++j) columns[j][i] = values[j];
    }
    return columns;
}

std::vector<double> label_column(const std::vector<LabeledInstance>& instances) {
    std::vector<double> labels(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) labels[i] = instances[i].label;
    return labels;
}

}  // namespace

FullModelFit fit_full_model(const std::vector<LabeledInstance>& instances,
                            const TrainingConfig& cfg) {
    if (instances.empty()) throw DataError("fit: no instances");
    std::set<std::string> ids;
    for (const auto& inst : instances)
        if (!inst.prev_sanitarian.empty()) ids.insert(inst.prev_sanitarian);
    if (ids.empty()) throw DataError("fit: no instance carries a previous-inspection sanitarian");

    std::vector<std::string> names(feature_names().begin(),
                                   feature_names().begin() + kBaseFeatureCount);
    auto columns = base_columns(instances);
    for (const auto& id : ids) {
        names.push_back("san:" + id);
        std::vector<double> col(instances.size(), 0.0);
        for (std::size_t i = 0; i < instances.size(); ++i)
            if (instances[i].prev_sanitarian == id) col[i] = 1.0;
        columns.push_back(std::move(col));
    }

    FullModelFit out;
    out.fit = fit_matrix(names, columns, label_column(instances), cfg);
    const auto& model = out.fit.model;
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        const std::string& name = model.feature_names[j];
        if (name.rfind("san:", 0) == 0)
            out.sanitarian_coefficients[name.substr(4)] = model.coefficients[j];
    }
    return out;
}

FitResult refit_with_clusters(const std::vector<LabeledInstance>& instances,
                              const ClusterAssignment& assignment, const TrainingConfig& cfg) {
    if (instances.empty()) throw DataError("fit: no instances");
    std::set<std::string> unmapped;
    for (const auto& inst : instances) {
        if (inst.prev_sanitarian.empty()) continue;
        if (!assignment.assignment.count(inst.prev_sanitarian))
            unmapped.insert(inst.prev_sanitarian);
    }
    if (!unmapped.empty()) {
        std::string list;
        for (const auto& id : unmapped) {
            if (!list.empty()) list += ", ";
            list += id;
        }
        throw DataError("refit: sanitarians missing from cluster assignment: " + list);
    }

    std::vector<std::vector<double>> columns = base_columns(instances);
    for (int c = 0; c < kClusterCount; ++c) {
        const ClusterLabel label = all_cluster_labels()[static_cast<std::size_t>(c)];
        std::vector<double> col(instances.size(), 0.0);
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const auto& san = instances[i].prev_sanitarian;
            if (san.empty()) continue;
            if (assignment.assignment.at(san) == label) col[i] = 1.0;
        }
        columns.push_back(std::move(col));
    }
    return fit_matrix(feature_names(), columns, label_column(instances), cfg);
}

void write_model_json(std::ostream& out, const LogisticModel& model) {
    nlohmann::ordered_json j;
    j["feature_names"] = model.feature_names;
    j["coefficients"] = model.coefficients;
    j["intercept"] = model.intercept;
    j["meta"] = {{"iterations", model.meta.iterations},
                 {"loglik", model.meta.log_likelihood},
                 {"grad_norm", model.meta.gradient_norm},
                 {"config_hash", model.meta.config_hash}};
    out << j.dump(2) << '\n';
}

LogisticModel read_model_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model.json: ") + e.what());
    }
    LogisticModel m;
    try {
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<double>();
        if (j.contains("meta")) {
            const auto& meta = j.at("meta");
            m.meta.iterations = meta.value("iterations", 0);
            m.meta.log_likelihood = meta.value("loglik", 0.0);
            m.meta.gradient_norm = meta.value("grad_norm", 0.0);
            m.meta.config_hash = meta.value("config_hash", "");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model.json: ") + e.what());
    }
    if (m.feature_names.size() != m.coefficients.size())
        throw DataError("model.json: feature_names and coefficients differ in length");
    for (double c : m.coefficients)
        if (!std::isfinite(c)) throw DataError("model.json: non-finite coefficient");
    if (!std::isfinite(m.intercept)) throw DataError("model.json: non-finite intercept");
    return m;
}

void save_model(const std::string& path, const LogisticModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_model_json(out, model);
}

LogisticModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_model_json(in);
}

void write_clusters_json(std::ostream& out, const ClusterAssignment& assignment,
                         const std::map<std::string, double>& sanitarian_coefficients) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json a = nlohmann::ordered_json::object();
    for (const auto& [id, label] : assignment.assignment) a[id] = to_string(label);
    j["assignment"] = a;
    nlohmann::ordered_json means = nlohmann::ordered_json::object();
    for (ClusterLabel label : all_cluster_labels()) {
        auto it = assignment.cluster_means.find(label);
        if (it != assignment.cluster_means.end()) means[to_string(label)] = it->second;
    }
    j["cluster_means"] = means;
    if (!sanitarian_coefficients.empty()) {
        nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
        for (const auto& [id, coef] : sanitarian_coefficients) coefs[id] = coef;
        j["sanitarian_coefficients"] = coefs;
    }
    out << j.dump(2) << '\n';
}

ClusterAssignment read_clusters_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("clusters.json: ") + e.what());
    }
    ClusterAssignment out;
    try {
        for (const auto& [id, label] : j.at("assignment").items()) {
            auto c = cluster_from_string(label.get<std::string>());
            if (!c) throw DataError("clusters.json: unknown cluster label for '" + id + "'");
            out.assignment[id] = *c;
        }
        if (j.contains("cluster_means")) {
            for (const auto& [name, mean] : j.at("cluster_means").items()) {
                auto c = cluster_from_string(name);
                if (!c) throw DataError("clusters.json: unknown cluster label '" + name + "'");
                out.cluster_means[*c] = mean.get<double>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("clusters.json: ") + e.what());
    }
    return out;
}

ClusterAssignment load_clusters(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_clusters_json(in);
}

}  // namespace canvass
