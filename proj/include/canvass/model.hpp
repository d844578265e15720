#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "canvass/core.hpp"
#include "canvass/features.hpp"

namespace canvass {

struct TrainingConfig {
    int max_iterations = 50;
    double gradient_tolerance = 1e-8;
    double ridge_epsilon = 1e-8;
};

std::string training_config_hash(const TrainingConfig& cfg);

struct FitMeta {
    int iterations = 0;
    double log_likelihood = 0.0;
    double gradient_norm = 0.0;
    std::string config_hash;
};

struct LogisticModel {
    std::vector<std::string> feature_names;
    std::vector<double> coefficients;  // one per feature name
    double intercept = 0.0;
    FitMeta meta;
};

LogisticModel make_model(std::vector<std::string> names, std::vector<double> coefficients,
                         double intercept);

struct SeparationError : NumericError {
    using NumericError::NumericError;
};

struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& msg, std::vector<double> last, double grad_norm)
        : NumericError(msg), last_coefficients(std::move(last)), gradient_norm(grad_norm) {}
    std::vector<double> last_coefficients;
    double gradient_norm;
};

struct FitResult {
    LogisticModel model;
    std::vector<double> std_errors;  // per feature, from observed information
    double intercept_std_error = 0.0;
    std::vector<std::string> dropped_features;  // constant columns removed before fitting
    std::vector<double> log_likelihood_path;    // one entry per iteration, non-decreasing
};

/// Newton/IRLS maximum-likelihood fit with a tiny ridge on the coefficients
/// (never on the intercept). Deterministic for a fixed row order. Needs at
/// least one positive and one negative label; constant columns are dropped
/// with a warning recorded in the result.
FitResult fit_matrix(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& labels, const TrainingConfig& cfg);

/// Fit over the 16 canonical predictors of the labeled instances.
FitResult fit_logistic(const std::vector<LabeledInstance>& instances,
                       const TrainingConfig& cfg = {});

/// Penalized Bernoulli log-likelihood and its analytic gradient at an
/// arbitrary parameter point (intercept first). Exposed for gradient checks.
double log_likelihood_at(const std::vector<std::vector<double>>& columns,
                         const std::vector<double>& labels, const std::vector<double>& beta,
                         double ridge_epsilon);
std::vector<double> gradient_at(const std::vector<std::vector<double>>& columns,
                                const std::vector<double>& labels,
                                const std::vector<double>& beta, double ridge_epsilon);

double sigmoid(double z);

double linear_predictor(const LogisticModel& model, const std::map<std::string, double>& values);
/// sigmoid(intercept + sum coefficient * feature); strictly inside (0,1).
/// Throws DataError naming the first feature absent from `values`.
double predict_probability(const LogisticModel& model,
                           const std::map<std::string, double>& values);
double predict_probability(const LogisticModel& model, const FeatureVector& fv);

std::map<std::string, double> named_values(const FeatureVector& fv);

std::vector<double> score_instances(const LogisticModel& model,
                                    const std::vector<LabeledInstance>& instances);

/// exp(coefficient) of the named feature.
double odds_ratio(const LogisticModel& model, const std::string& feature_name);

struct ClusterAssignment {
    std::map<std::string, ClusterLabel> assignment;   // sanitarian id -> label
    std::map<ClusterLabel, double> cluster_means;     // used labels only
};

/// SSE-optimal 1D clustering of the per-sanitarian coefficients (dynamic
/// programming over the sorted values). Clusters are labeled purple..brown
/// by descending mean; when fewer than k distinct values exist, each
/// distinct value forms its own cluster and surplus labels stay unused.
ClusterAssignment cluster_sanitarians(const std::map<std::string, double>& coefficients,
                                      int k = kClusterCount);

/// DP core; returns cluster index per sorted position. Exposed so tests can
/// compare against exhaustive partition search.
std::vector<std::size_t> optimal_1d_clusters(const std::vector<double>& sorted_values,
                                             std::size_t k);
double partition_sse(const std::vector<double>& sorted_values,
                     const std::vector<std::size_t>& cluster_of);

struct FullModelFit {
    FitResult fit;
    std::map<std::string, double> sanitarian_coefficients;
};

/// The model with one indicator per previous-inspection sanitarian instead
/// of the six cluster indicators; source of the clustering coefficients.
FullModelFit fit_full_model(const std::vector<LabeledInstance>& instances,
                            const TrainingConfig& cfg = {});

/// Replaces the per-sanitarian indicators with the six cluster indicators
/// derived from `assignment` and refits; instances with no previous
/// inspection keep all-zero cluster features. Throws DataError listing any
/// previous-inspection sanitarian missing from the assignment.
FitResult refit_with_clusters(const std::vector<LabeledInstance>& instances,
                              const ClusterAssignment& assignment,
                              const TrainingConfig& cfg = {});

void write_model_json(std::ostream& out, const LogisticModel& model);
LogisticModel read_model_json(std::istream& in);
void save_model(const std::string& path, const LogisticModel& model);
LogisticModel load_model(const std::string& path);

void write_clusters_json(std::ostream& out, const ClusterAssignment& assignment,
                         const std::map<std::string, double>& sanitarian_coefficients);
ClusterAssignment read_clusters_json(std::istream& in);
ClusterAssignment load_clusters(const std::string& path);

}  // namespace canvass
